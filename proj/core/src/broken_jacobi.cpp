#include "brakeorbit/morse.hpp"

#include "brakeorbit/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace brakeorbit {

namespace {

constexpr std::array<double, 4> kGaussX{-0.86113631159405257522, -0.33998104358485626480,
                                        0.33998104358485626480, 0.86113631159405257522};
constexpr std::array<double, 4> kGaussW{0.34785484513745385737, 0.65214515486254614263,
                                        0.65214515486254614263, 0.34785484513745385737};

// [xi; P] = C [xi; D_t xi]
Mat flux_change(const LiftSample& p) {
  const int n = static_cast<int>(p.q.size());
  Mat C = Mat::Identity(2 * n, 2 * n);
  C.bottomLeftCorner(n, n) = -p.v * p.dV.transpose() / p.w;
  return C;
}

double hadamard_ratio(const Mat& m) {
  double prod = 1.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) prod *= m.col(j).norm();
  if (!(prod > 0)) return 0.0;
  return m.determinant() / prod;
}

}  // namespace

struct BrokenSpace {
  PotentialSystem sys;
  std::shared_ptr<const NaturalTrajectory> lift;
  int n = 1;
  std::vector<double> tau;
  std::shared_ptr<WallFamily> wall;
  Mat wall_inverse;  // coefficients of the wall family from the value at tau_1
  std::vector<std::shared_ptr<const DenseSolution>> phi;  // per interval i >= 1
  std::vector<Mat> start_map;  // [x_i; x_{i+1}] -> [xi; D_t xi] at tau_i

  int intervals() const { return static_cast<int>(tau.size()) - 1; }
  int dimension() const { return (intervals() - 1) * n; }

  // Local field map on interval i: columns act on the local node values
  // (x_1 for i = 0, [x_i; x_{i+1}] otherwise); rows are [xi; D_t xi].
  Mat local_map(int i, double t) const {
    if (i == 0) {
      Mat xi, dxi;
      wall->eval(t, xi, dxi);
      Mat out(2 * n, n);
      out.topRows(n) = xi * wall_inverse;
      out.bottomRows(n) = dxi * wall_inverse;
      return out;
    }
    Vec y;
    phi[i]->eval(t, y);
    const Mat Phi = Eigen::Map<const Mat>(y.data(), 2 * n, 2 * n);
    return Phi * start_map[i];
  }

  // Offset of the local columns in the global unknown vector, or -1 when the
  // node is clamped (tau_0 has no unknown, tau_k is zero).
  int node_offset(int node) const {
    if (node <= 0 || node >= intervals()) return -1;
    return (node - 1) * n;
  }

  Vec field_state(int i, double t, const Vec& x) const {
    const Mat L = local_map(i, t);
    Vec z = Vec::Zero(L.cols());
    const int first = i == 0 ? 1 : i;
    for (int part = 0; part * n < L.cols(); ++part) {
      const int off = node_offset(first + part);
      if (off >= 0) z.segment(part * n, n) = x.segment(off, n);
    }
    return L * z;
  }
};

namespace {

Mat fundamental(const std::shared_ptr<const DenseSolution>& dense, double t, int n) {
  Vec y;
  dense->eval(t, y);
  return Eigen::Map<const Mat>(y.data(), 2 * n, 2 * n);
}

struct BuildOutcome {
  bool ok = false;
  bool refine = false;  // a sub-interval contains a conjugate point
};

BuildOutcome build_space(BrokenSpace& sp, const BrokenJacobiOptions& opts) {
  const int n = sp.n;
  const int k = sp.intervals();
  auto lift = sp.lift;
  const PotentialSystem sys = sp.sys;
  sp.wall = std::make_shared<WallFamily>(sys, lift, sp.tau[1]);
  {
    double sign = 0.0;
    for (int j = 1; j <= opts.det_samples; ++j) {
      const double t = sp.tau[1] * j / opts.det_samples;
      Mat xi, dxi;
      sp.wall->eval(t, xi, dxi);
      const double r = hadamard_ratio(xi);
      if (std::abs(r) < 1e-10 || (sign != 0.0 && r * sign < 0)) return {false, true};
      sign = r;
    }
    Mat xi, dxi;
    sp.wall->eval(sp.tau[1], xi, dxi);
    sp.wall_inverse = xi.inverse();
  }
  Rhs rhs = [sys, lift, n](double t, const Vec& y, Vec& dy) {
    const Mat M = jacobi_system_matrix(sample_lift(sys, *lift, t));
    const Mat Y = Eigen::Map<const Mat>(y.data(), 2 * n, 2 * n);
    const Mat D = M * Y;
    dy = Eigen::Map<const Vec>(D.data(), D.size());
  };
  sp.phi.assign(k, nullptr);
  sp.start_map.assign(k, Mat());
  OdeOptions ode;
  ode.atol = 1e-13;
  for (int i = 1; i < k; ++i) {
    const Mat I = Mat::Identity(2 * n, 2 * n);
    const Vec y0 = Eigen::Map<const Vec>(I.data(), I.size());
    sp.phi[i] = integrate(rhs, sp.tau[i], y0, sp.tau[i + 1], ode).solution;
    for (int j = 1; j <= opts.det_samples; ++j) {
      const double t = sp.tau[i] + (sp.tau[i + 1] - sp.tau[i]) * j / opts.det_samples;
      const double r = hadamard_ratio(fundamental(sp.phi[i], t, n).topRightCorner(n, n));
      if (!(r > 1e-10)) return {false, true};
    }
    const LiftSample p0 = sample_lift(sys, *lift, sp.tau[i]);
    const LiftSample p1 = sample_lift(sys, *lift, sp.tau[i + 1]);
    Mat C0inv = Mat::Identity(2 * n, 2 * n);
    C0inv.bottomLeftCorner(n, n) = p0.v * p0.dV.transpose() / p0.w;
    const Mat Psi = flux_change(p1) * fundamental(sp.phi[i], sp.tau[i + 1], n) * C0inv;
    const Mat S = Psi.topRightCorner(n, n).inverse();
    Mat E = Mat::Zero(2 * n, 2 * n);
    E.topLeftCorner(n, n) = Mat::Identity(n, n);
    E.bottomLeftCorner(n, n) = -S * Psi.topLeftCorner(n, n) + p0.v * p0.dV.transpose() / p0.w;
    E.bottomRightCorner(n, n) = S;
    sp.start_map[i] = E;
  }
  return {true, false};
}

// I_a on V-, from the boundary terms g(P, xi) of each Jacobi piece.
Mat assemble_form(const BrokenSpace& sp) {
  const int n = sp.n, k = sp.intervals(), d = sp.dimension();
  Mat Q = Mat::Zero(d, d);
  auto add = [&](int row_node, int col_node, const Mat& blk) {
    const int r = sp.node_offset(row_node), c = sp.node_offset(col_node);
    if (r >= 0 && c >= 0) Q.block(r, c, n, n) += blk;
  };
  {
    const LiftSample p = sample_lift(sp.sys, *sp.lift, sp.tau[1]);
    const Mat L = sp.local_map(0, sp.tau[1]);
    const Mat P = L.bottomRows(n) - p.v * (p.dV.transpose() * L.topRows(n)) / p.w;
    add(1, 1, p.g * P);
  }
  for (int i = 1; i < k; ++i) {
    const LiftSample p0 = sample_lift(sp.sys, *sp.lift, sp.tau[i]);
    const LiftSample p1 = sample_lift(sp.sys, *sp.lift, sp.tau[i + 1]);
    const Mat L0 = sp.local_map(i, sp.tau[i]);
    const Mat L1 = sp.local_map(i, sp.tau[i + 1]);
    const Mat P0 = flux_change(p0).bottomRows(n) * L0;
    const Mat P1 = flux_change(p1).bottomRows(n) * L1;
    const Mat G0P = p0.g * P0, G1P = p1.g * P1;
    add(i, i, -G0P.leftCols(n));
    add(i, i + 1, -G0P.rightCols(n));
    add(i + 1, i, G1P.leftCols(n));
    add(i + 1, i + 1, G1P.rightCols(n));
  }
  return Q;
}

Mat assemble_gram(const BrokenSpace& sp, int panels) {
  const int n = sp.n, k = sp.intervals(), d = sp.dimension();
  Mat B = Mat::Zero(d, d);
  for (int i = 0; i < k; ++i) {
    const int cols = i == 0 ? n : 2 * n;
    Mat local = Mat::Zero(cols, cols);
    for (int pnl = 0; pnl < panels; ++pnl) {
      const double a = sp.tau[i] + (sp.tau[i + 1] - sp.tau[i]) * pnl / panels;
      const double b = sp.tau[i] + (sp.tau[i + 1] - sp.tau[i]) * (pnl + 1) / panels;
      for (int q = 0; q < 4; ++q) {
        const double t = 0.5 * (a + b) + 0.5 * (b - a) * kGaussX[q];
        const TrajectoryPoint tp = sp.lift->at(t);
        const Mat Ly = sp.local_map(i, t).bottomRows(n);
        local += 0.5 * (b - a) * kGaussW[q] * Ly.transpose() * sp.sys.metric(tp.q) * Ly;
      }
    }
    const int first = i == 0 ? 1 : i;
    for (int r = 0; r * n < cols; ++r) {
      for (int c = 0; c * n < cols; ++c) {
        const int ro = sp.node_offset(first + r), co = sp.node_offset(first + c);
        if (ro >= 0 && co >= 0) B.block(ro, co, n, n) += local.block(r * n, c * n, n, n);
      }
    }
  }
  return B;
}

std::vector<double> uniform_subdivision(double T, int k) {
  std::vector<double> tau;
  for (int j = 0; j <= k; ++j) tau.push_back(T * j / k);
  return tau;
}

}  // namespace

BrokenJacobiResult broken_jacobi_index(const PotentialSystem& sys, const JacobiGeodesic& geo, double a,
                                       std::vector<double> subdivision_s, const BrokenJacobiOptions& opts) {
  if (!geo.lift || !geo.boundary_start) {
    throw NumericalError(ErrorCode::invalid_input, "broken Jacobi fields need a boundary-starting geodesic");
  }
  if (!(a > 0) || a > geo.length() * (1 + 1e-9)) throw NumericalError(ErrorCode::invalid_input, "a outside the geodesic");
  const double T = geo.time_at_arc(std::min(a, geo.length()));
  const bool automatic = subdivision_s.empty();
  std::vector<double> tau;
  int k = opts.initial_intervals;
  if (automatic) {
    tau = uniform_subdivision(T, k);
  } else {
    if (subdivision_s.size() < 3 || subdivision_s.front() != 0.0) {
      throw NumericalError(ErrorCode::invalid_input, "subdivision must start at 0 and have an interior node");
    }
    for (double s : subdivision_s) tau.push_back(s == 0.0 ? 0.0 : geo.time_at_arc(std::min(s, a)));
    tau.back() = T;
  }

  BrokenJacobiResult out;
  auto sp = std::make_shared<BrokenSpace>();
  sp->sys = sys;
  sp->lift = geo.lift;
  sp->n = sys.dim;
  int retries = 0;
  for (;;) {
    sp->tau = tau;
    const BuildOutcome b = build_space(*sp, opts);
    if (b.ok) break;
    if (automatic && k * 2 <= opts.max_intervals) {
      k *= 2;
      tau = uniform_subdivision(T, k);
      continue;
    }
    if (retries >= opts.retries) {
      throw NumericalError(ErrorCode::singular_solve, "broken Jacobi subdivision stays singular after retries");
    }
    ++retries;
    // Nudge interior nodes by alternating small shifts.
    for (std::size_t j = 1; j + 1 < tau.size(); ++j) {
      const double h = std::min(tau[j] - tau[j - 1], tau[j + 1] - tau[j]);
      tau[j] += ((j % 2) ? 1.0 : -1.0) * 0.01 * retries * h;
    }
  }

  const Mat Q = assemble_form(*sp);
  const Mat B = assemble_gram(*sp, opts.gram_panels);
  out.asymmetry = (Q - Q.transpose()).norm() / std::max(Q.norm(), 1e-300);
  out.Q = 0.5 * (Q + Q.transpose());
  out.B = B;
  out.dimension = sp->dimension();
  out.retries_used = retries;
  out.subdivision_t = sp->tau;
  for (double t : sp->tau) out.subdivision_s.push_back(sp->lift->at(t).s);
  out.subdivision_s.front() = 0.0;
  out.subdivision_s.back() = a;
  const Vec lam = generalized_eigenvalues(out.Q, out.B);
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    out.eigenvalues.push_back(lam[i]);
    if (lam[i] < -opts.tol_null) ++out.index;
    else if (std::abs(lam[i]) <= opts.tol_null) ++out.nullity;
  }
  out.space = sp;
  return out;
}

double broken_orthogonality(const PotentialSystem& sys, const JacobiGeodesic& geo, const BrokenJacobiResult& broken,
                            int cells_per_interval, int samples, unsigned seed) {
  (void)geo;
  const BrokenSpace& sp = *broken.space;
  const int n = sp.n, k = sp.intervals(), d = sp.dimension();
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  const Mat tangent = boundary_tangent_basis(sys, sp.lift->at(0.0).q);
  double worst = 0.0;
  for (int r = 0; r < samples; ++r) {
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = normal(rng);
    const double xnorm = std::sqrt(x.dot(broken.B * x));
    for (int i = 0; i < k; ++i) {
      const double h = (sp.tau[i + 1] - sp.tau[i]) / cells_per_interval;
      // Hat fields on this interval vanishing at the subdivision nodes;
      // node 0 additionally carries the tangent directions.
      for (int node = 0; node < cells_per_interval; ++node) {
        if (node == 0 && i != 0) continue;
        const Mat dirs = (node == 0) ? tangent : Mat(Mat::Identity(n, n));
        const double tc = sp.tau[i] + node * h;
        for (Eigen::Index c = 0; c < dirs.cols(); ++c) {
          const Vec e = dirs.col(c);
          double form = 0.0, norm2 = 0.0;
          for (int side = -1; side <= 0; ++side) {
            const double t0 = tc + side * h, t1 = t0 + h;
            if (t0 < sp.tau[i] - 1e-14) continue;
            for (int qd = 0; qd < 4; ++qd) {
              const double t = 0.5 * (t0 + t1) + 0.5 * h * kGaussX[qd];
              const double wq = 0.5 * h * kGaussW[qd];
              const LiftSample p = sample_lift(sys, *sp.lift, t);
              const double phi = side < 0 ? (t - t0) / h : (t1 - t) / h;
              const double dphi = side < 0 ? 1.0 / h : -1.0 / h;
              const Vec X = phi * e;
              const Vec Y = dphi * e + phi * (christoffel_along(p.gamma, p.v) * e);
              const Vec f = sp.field_state(i, t, x);
              form += wq * index_integrand(p, f.head(n), f.tail(n), X, Y);
              norm2 += wq * Y.dot(p.g * Y);
            }
          }
          worst = std::max(worst, std::abs(form) / (xnorm * std::sqrt(norm2)));
        }
      }
    }
  }
  return worst;
}

}  // namespace brakeorbit
