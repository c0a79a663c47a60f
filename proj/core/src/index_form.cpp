#include "brakeorbit/morse.hpp"

#include "brakeorbit/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>

namespace brakeorbit {

namespace {

constexpr std::array<double, 4> kGaussX{-0.86113631159405257522, -0.33998104358485626480,
                                        0.33998104358485626480, 0.86113631159405257522};
constexpr std::array<double, 4> kGaussW{0.34785484513745385737, 0.65214515486254614263,
                                        0.65214515486254614263, 0.34785484513745385737};

struct LocalDof {
  int index;
  Vec dir;
  bool left;
};

}  // namespace

double index_integrand(const LiftSample& p, const Vec& x1, const Vec& y1, const Vec& x2, const Vec& y2) {
  const Vec gv = p.g * p.v;
  const Vec k2 = p.g * (p.rv * x2);
  return y1.dot(p.g * y2) + x1.dot(k2) - x1.dot(p.hess * x2) -
         (p.dV.dot(x1) * gv.dot(y2) + gv.dot(y1) * p.dV.dot(x2)) / p.w;
}

LiftSample sample_lift(const PotentialSystem& sys, const NaturalTrajectory& lift, double t) {
  const int n = sys.dim;
  LiftSample p;
  const TrajectoryPoint tp = lift.at(t);
  p.t = t;
  p.s = tp.s;
  p.q = tp.q;
  p.v = tp.v;
  p.g = sys.metric(p.q);
  p.w = 0.5 * p.v.dot(p.g * p.v);
  p.gamma = christoffel(sys, p.q);
  p.dV = sys.dpotential(p.q);
  p.grad = p.g.ldlt().solve(p.dV);
  p.hess = sys.hess_potential(p.q);
  p.rv = Mat::Zero(n, n);
  if (!sys.flat_metric) {
    const RiemannTensor R = riemann(sys, p.q);
    for (int j = 0; j < n; ++j) p.rv.col(j) = R.apply(p.v, Vec::Unit(n, j), p.v);
  }
  return p;
}

int IndexFormDiscretization::node_dofs(int node) const {
  if (node == 0) return dim - 1;
  if (node >= cells) return 0;
  return dim;
}

int IndexFormDiscretization::node_offset(int node) const {
  if (node == 0) return 0;
  return (dim - 1) + (node - 1) * dim;
}

IndexFormDiscretization assemble_index_form(const PotentialSystem& sys, const JacobiGeodesic& geo,
                                            double s, const MeshSpec& mesh) {
  if (mesh.grading != MeshGrading::lift_time) {
    throw NumericalError(ErrorCode::refused_mesh,
                         "index form needs a mesh graded at the wall; uniform arc cells cannot resolve it");
  }
  if (!geo.lift || !geo.boundary_start) {
    throw NumericalError(ErrorCode::invalid_input, "index form needs a boundary-starting geodesic with its lift");
  }
  if (!(s > 0) || s > geo.length() * (1 + 1e-9)) {
    throw NumericalError(ErrorCode::invalid_input, "interval end outside the geodesic");
  }
  if (mesh.cells < 2) throw NumericalError(ErrorCode::invalid_input, "index form needs at least two cells");

  const int n = sys.dim;
  IndexFormDiscretization d;
  d.dim = n;
  d.cells = mesh.cells;
  d.lift = geo.lift;
  // At the far wall of a crossing geodesic the arc is flat to third order in
  // time, so a tiny arc mismatch would move the end time visibly: snap to the wall.
  if (geo.boundary_end && s >= geo.length() * (1 - 1e-9)) {
    s = geo.length();
    d.t_end = geo.lift->t_end();
  } else {
    d.t_end = geo.time_at_arc(std::min(s, geo.length()));
  }
  d.s = s;
  d.tangent_basis = boundary_tangent_basis(sys, geo.points.front());
  d.ndof = (n - 1) + (d.cells - 1) * n;
  for (int j = 0; j <= d.cells; ++j) {
    const double t = d.t_end * j / d.cells;
    d.nodes_t.push_back(t);
    d.nodes_s.push_back(j == 0 ? 0.0 : geo.lift->at(t).s);
  }
  d.nodes_s.back() = s;

  std::vector<Eigen::Triplet<double>> ta, tb;
  for (int c = 0; c < d.cells; ++c) {
    const double t0 = d.nodes_t[c], t1 = d.nodes_t[c + 1], h = t1 - t0;
    std::vector<LocalDof> dofs;
    for (int k = 0; k < d.node_dofs(c); ++k) {
      dofs.push_back({d.node_offset(c) + k, c == 0 ? Vec(d.tangent_basis.col(k)) : Vec(Vec::Unit(n, k)), true});
    }
    for (int k = 0; k < d.node_dofs(c + 1); ++k) dofs.push_back({d.node_offset(c + 1) + k, Vec::Unit(n, k), false});
    const int m = static_cast<int>(dofs.size());
    Mat la = Mat::Zero(m, m), lb = Mat::Zero(m, m);
    for (int qi = 0; qi < 4; ++qi) {
      const double t = 0.5 * (t0 + t1) + 0.5 * h * kGaussX[qi];
      const double wq = 0.5 * h * kGaussW[qi];
      const LiftSample p = sample_lift(sys, *geo.lift, t);
      const Mat gv = christoffel_along(p.gamma, p.v);
      std::vector<Vec> X(m), Y(m);
      for (int a = 0; a < m; ++a) {
        const double phi = dofs[a].left ? (t1 - t) / h : (t - t0) / h;
        const double dphi = dofs[a].left ? -1.0 / h : 1.0 / h;
        X[a] = phi * dofs[a].dir;
        Y[a] = dphi * dofs[a].dir + phi * (gv * dofs[a].dir);
      }
      for (int a = 0; a < m; ++a) {
        for (int b = a; b < m; ++b) {
          la(a, b) += wq * index_integrand(p, X[a], Y[a], X[b], Y[b]);
          lb(a, b) += wq * Y[a].dot(p.g * Y[b]);
        }
      }
      ++d.quad_points;
    }
    for (int a = 0; a < m; ++a) {
      for (int b = a; b < m; ++b) {
        ta.emplace_back(dofs[a].index, dofs[b].index, la(a, b));
        tb.emplace_back(dofs[a].index, dofs[b].index, lb(a, b));
        if (a != b) {
          ta.emplace_back(dofs[b].index, dofs[a].index, la(a, b));
          tb.emplace_back(dofs[b].index, dofs[a].index, lb(a, b));
        }
      }
    }
  }
  d.A_sparse.resize(d.ndof, d.ndof);
  d.B_sparse.resize(d.ndof, d.ndof);
  d.A_sparse.setFromTriplets(ta.begin(), ta.end());
  d.B_sparse.setFromTriplets(tb.begin(), tb.end());
  d.A = Mat(d.A_sparse);
  d.B = Mat(d.B_sparse);
  d.asymmetry = (d.A - d.A.transpose()).norm() / std::max(d.A.norm(), 1e-300);
  return d;
}

FieldValue fe_field(const PotentialSystem& sys, const IndexFormDiscretization& disc, const Vec& coeffs,
                    double t) {
  const int n = disc.dim;
  FieldValue out{Vec::Zero(n), Vec::Zero(n)};
  if (t >= disc.t_end) return out;
  t = std::max(t, 0.0);
  const double h = disc.t_end / disc.cells;
  const int c = std::min(static_cast<int>(t / h), disc.cells - 1);
  const double t0 = disc.nodes_t[c], t1 = disc.nodes_t[c + 1];
  auto node_value = [&](int node) -> Vec {
    if (node >= disc.cells) return Vec::Zero(n);
    const Vec x = coeffs.segment(disc.node_offset(node), disc.node_dofs(node));
    return node == 0 ? Vec(disc.tangent_basis * x) : x;
  };
  const Vec x0 = node_value(c), x1 = node_value(c + 1);
  const double phi0 = (t1 - t) / (t1 - t0), phi1 = (t - t0) / (t1 - t0);
  out.xi = phi0 * x0 + phi1 * x1;
  const Vec deriv = (x1 - x0) / (t1 - t0);
  if (sys.flat_metric) {
    out.dxi = deriv;
  } else {
    const TrajectoryPoint tp = disc.lift->at(t);
    out.dxi = deriv + christoffel(sys, tp.q).contract(tp.v, out.xi);
  }
  return out;
}

double hessian_quadratic(const PotentialSystem& sys, const JacobiGeodesic& geo, const ArcField& xi,
                         const std::vector<double>& breakpoints) {
  double total = 0.0;
  auto integrand = [&](double s) {
    const GeodesicPoint p = geo.at_arc(sys, s);
    const FieldValue f = xi(s);
    const Mat g = sys.metric(p.q);
    const Vec dV = sys.dpotential(p.q);
    const Mat H = sys.hess_potential(p.q);
    const double speed2 = p.gdot.dot(g * p.gdot);
    double val = -0.5 * speed2 * f.xi.dot(H * f.xi) - 2.0 * dV.dot(f.xi) * f.dxi.dot(g * p.gdot) +
                 p.w * f.dxi.dot(g * f.dxi);
    if (!sys.flat_metric) val += p.w * riemann_quadratic(sys, p.q, f.xi, p.gdot, f.xi, p.gdot);
    return val;
  };
  const std::size_t cells = breakpoints.size() < 2 ? 0 : breakpoints.size() - 1;
  const double s_end = cells ? breakpoints.back() : 0.0;
  // A crossing geodesic meets the wall again at its far end.
  const bool far_wall = cells && ((geo.boundary_end && s_end >= geo.length() * (1 - 1e-12)) ||
                                  geo.at_arc(sys, s_end).w <= 1e-10 * (1 + std::abs(sys.energy)));
  auto cube_panel = [&](double a, double b, double origin, double sign) {
    // s = origin + sign * u^3 turns the s^{-2/3} weights at a wall into smooth integrands.
    const double ua = std::cbrt(sign * (a - origin)), ub = std::cbrt(sign * (b - origin));
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double u = 0.5 * (ua + ub) + 0.5 * (ub - ua) * kGaussX[k];
      acc += 0.5 * (ub - ua) * kGaussW[k] * 3 * u * u * integrand(origin + sign * u * u * u);
    }
    return sign * acc;
  };
  for (std::size_t c = 0; c < cells; ++c) {
    const double a = breakpoints[c], b = breakpoints[c + 1];
    if (!(b > a)) continue;
    if (c < 10) {
      total += cube_panel(a, b, 0.0, 1.0);
    } else if (far_wall && c + 10 >= cells) {
      total += cube_panel(a, b, s_end, -1.0);
    } else {
      constexpr int panels = 4;
      for (int j = 0; j < panels; ++j) {
        const double pa = a + (b - a) * j / panels, pb = a + (b - a) * (j + 1) / panels;
        for (int k = 0; k < 4; ++k) {
          total += 0.5 * (pb - pa) * kGaussW[k] * integrand(0.5 * (pa + pb) + 0.5 * (pb - pa) * kGaussX[k]);
        }
      }
    }
  }
  if (!std::isfinite(total)) throw NumericalError(ErrorCode::quadrature, "second variation is not finite");
  return total;
}

double hessian_quadratic(const PotentialSystem& sys, const IndexFormDiscretization& disc, const Vec& coeffs) {
  JacobiGeodesic geo;
  geo.dim = disc.dim;
  geo.lift = disc.lift;
  geo.boundary_start = true;
  geo.s = {0.0, disc.s};
  geo.points = {disc.lift->at(0.0).q, disc.lift->at(disc.t_end).q};
  geo.boundary_end = disc.t_end >= disc.lift->t_end();
  ArcField field = [&](double s) {
    const double t = s >= disc.s ? disc.t_end : std::min(disc.lift->time_at_arc(s), disc.t_end);
    FieldValue f = fe_field(sys, disc, coeffs, t);
    const TrajectoryPoint tp = disc.lift->at(t);
    const double w = 0.5 * tp.v.dot(sys.metric(tp.q) * tp.v);
    f.dxi /= w;
    return f;
  };
  return hessian_quadratic(sys, geo, field, disc.nodes_s);
}

std::vector<double> index_form_against_basis(const PotentialSystem& sys, const IndexFormDiscretization& disc,
                                             const TimeField& xi) {
  const int n = disc.dim;
  Vec acc = Vec::Zero(disc.ndof);
  for (int c = 0; c < disc.cells; ++c) {
    const double t0 = disc.nodes_t[c], t1 = disc.nodes_t[c + 1], h = t1 - t0;
    for (int qi = 0; qi < 4; ++qi) {
      const double t = 0.5 * (t0 + t1) + 0.5 * h * kGaussX[qi];
      const double wq = 0.5 * h * kGaussW[qi];
      const LiftSample p = sample_lift(sys, *disc.lift, t);
      const Mat gv = christoffel_along(p.gamma, p.v);
      const FieldValue f = xi(t);
      for (int side = 0; side < 2; ++side) {
        const int node = c + side;
        const double phi = side == 0 ? (t1 - t) / h : (t - t0) / h;
        const double dphi = side == 0 ? -1.0 / h : 1.0 / h;
        for (int k = 0; k < disc.node_dofs(node); ++k) {
          const Vec dir = node == 0 ? Vec(disc.tangent_basis.col(k)) : Vec(Vec::Unit(n, k));
          const Vec X = phi * dir;
          const Vec Y = dphi * dir + phi * (gv * dir);
          acc[disc.node_offset(node) + k] += wq * index_integrand(p, f.xi, f.dxi, X, Y);
        }
      }
    }
  }
  std::vector<double> out(disc.ndof);
  for (int k = 0; k < disc.ndof; ++k) out[k] = std::abs(acc[k]) / std::sqrt(disc.B(k, k));
  return out;
}

Eigen::VectorXd generalized_eigenvalues(const Mat& A, const Mat& B) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(A, B, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError(ErrorCode::singular_solve, "generalized eigenproblem failed (Gram matrix not definite?)");
  }
  return es.eigenvalues();
}

int sturm_count(const IndexFormDiscretization& disc, double sigma) {
  Eigen::SparseMatrix<double> M = disc.A_sparse - sigma * disc.B_sparse;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::NaturalOrdering<int>> ldlt(M);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError(ErrorCode::singular_solve, "LDL^T factorization failed in inertia count");
  }
  const Vec D = ldlt.vectorD();
  int neg = 0;
  for (Eigen::Index i = 0; i < D.size(); ++i) neg += D[i] < 0;
  return neg;
}

MorseCount morse_index(const IndexFormDiscretization& disc, double tol_null) {
  MorseCount mc;
  mc.tol_null = tol_null;
  const Vec lam = generalized_eigenvalues(disc.A, disc.B);
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam[i] < -tol_null) ++mc.index;
    else if (std::abs(lam[i]) <= tol_null) ++mc.nullity;
    gap = std::min(gap, std::abs(std::abs(lam[i]) - tol_null));
  }
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(8, lam.size()); ++i) mc.smallest.push_back(lam[i]);
  mc.gap = gap;
  mc.ambiguous = gap <= 0.1 * tol_null;
  const int below = sturm_count(disc, -tol_null);
  const int upto = sturm_count(disc, tol_null);
  mc.sturm_index = below;
  mc.sturm_nullity = upto - below;
  mc.sturm_agrees = mc.sturm_index == mc.index && mc.sturm_nullity == mc.nullity;
  return mc;
}

}  // namespace brakeorbit
