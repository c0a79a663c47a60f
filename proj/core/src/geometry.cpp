#include "brakeorbit/geometry.hpp"

#include "brakeorbit/errors.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <sstream>

namespace brakeorbit {

bool Box::contains(const Vec& q) const {
  if (q.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (!(q[i] >= lo[i] && q[i] <= hi[i])) return false;
  }
  return true;
}

double default_reg_band(double energy) { return 0.2 * std::abs(energy) + 0.05; }

void PotentialSystem::require_in_box(const Vec& q) const {
  if (!domain_box.contains(q)) {
    std::ostringstream os;
    os << "point (" << q.transpose() << ") outside the domain box";
    throw NumericalError(ErrorCode::domain, os.str());
  }
}

Vec PotentialSystem::grad_potential(const Vec& q) const {
  return metric(q).ldlt().solve(dpotential(q));
}

Mat PotentialSystem::hess_potential(const Vec& q) const {
  Mat h = d2potential(q);
  if (flat_metric) return h;
  const Christoffel G = christoffel(*this, q);
  const Vec d = dpotential(q);
  for (int k = 0; k < dim; ++k) h -= d[k] * G.g[k];
  return h;
}

double finite_difference_step(const Vec& q) { return 1e-5 * (1.0 + q.norm()); }

Vec Christoffel::contract(const Vec& u, const Vec& v) const {
  const int n = static_cast<int>(u.size());
  Vec out = Vec::Zero(n);
  if (zero) return out;
  for (int k = 0; k < n; ++k) out[k] = u.dot(g[k] * v);
  return out;
}

Christoffel christoffel(const PotentialSystem& sys, const Vec& q) {
  sys.require_in_box(q);
  const int n = sys.dim;
  Christoffel G;
  G.g.assign(n, Mat::Zero(n, n));
  if (sys.flat_metric) {
    G.zero = true;
    return G;
  }
  const double h = finite_difference_step(q);
  // dg[l] = partial_l g
  std::vector<Mat> dg(n);
  for (int l = 0; l < n; ++l) {
    Vec qp = q, qm = q;
    qp[l] += h;
    qm[l] -= h;
    dg[l] = (sys.metric(qp) - sys.metric(qm)) / (2 * h);
  }
  const Mat ginv = sys.metric(q).inverse();
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        double acc = 0.0;
        for (int l = 0; l < n; ++l) {
          acc += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        }
        G.g[k](i, j) = G.g[k](j, i) = 0.5 * acc;
      }
    }
  }
  return G;
}

Mat christoffel_along(const Christoffel& G, const Vec& v) {
  const int n = static_cast<int>(v.size());
  Mat out = Mat::Zero(n, n);
  if (G.zero) return out;
  for (int j = 0; j < n; ++j) out.col(j) = G.contract(v, Vec::Unit(n, j));
  return out;
}

Vec RiemannTensor::apply(const Vec& X, const Vec& Y, const Vec& Z) const {
  Vec out = Vec::Zero(n);
  if (zero) return out;
  for (int l = 0; l < n; ++l) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      if (Z[k] == 0.0) continue;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) acc += X[i] * Y[j] * Z[k] * (*this)(l, k, i, j);
      }
    }
    out[l] = acc;
  }
  return out;
}

RiemannTensor riemann(const PotentialSystem& sys, const Vec& q) {
  const int n = sys.dim;
  RiemannTensor R;
  R.n = n;
  R.r.assign(static_cast<std::size_t>(n * n * n * n), 0.0);
  if (sys.flat_metric || n < 2) {
    sys.require_in_box(q);
    R.zero = true;
    return R;
  }
  const Christoffel G = christoffel(sys, q);
  const double h = finite_difference_step(q);
  std::vector<std::vector<Mat>> dG(n);  // dG[i][l](j,k) = partial_i Gamma^l_{jk}
  for (int i = 0; i < n; ++i) {
    Vec qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    const Christoffel Gp = christoffel(sys, qp);
    const Christoffel Gm = christoffel(sys, qm);
    dG[i].resize(n);
    for (int l = 0; l < n; ++l) dG[i][l] = (Gp.g[l] - Gm.g[l]) / (2 * h);
  }
  for (int l = 0; l < n; ++l) {
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          double v = dG[i][l](j, k) - dG[j][l](i, k);
          for (int m = 0; m < n; ++m) {
            v += G.g[l](i, m) * G.g[m](j, k) - G.g[l](j, m) * G.g[m](i, k);
          }
          R.r[((l * n + k) * n + i) * n + j] = v;
        }
      }
    }
  }
  return R;
}

double riemann_quadratic(const PotentialSystem& sys, const Vec& q, const Vec& X, const Vec& Y,
                         const Vec& Z, const Vec& W) {
  const RiemannTensor R = riemann(sys, q);
  if (R.zero) return 0.0;
  return R.apply(X, Y, Z).dot(sys.metric(q) * W);
}

double energy(const PotentialSystem& sys, const Vec& q, const Vec& v) {
  return 0.5 * v.dot(sys.metric(q) * v) + sys.potential(q);
}

Vec project_to_boundary(const PotentialSystem& sys, const Vec& q0, const ProjectionOptions& opts) {
  sys.require_in_box(q0);
  if (std::abs(sys.potential(q0) - sys.energy) >= sys.reg_band) {
    throw NumericalError(ErrorCode::domain, "projection start outside the regular band");
  }
  Vec q = q0;
  for (int it = 0; it <= opts.max_iter; ++it) {
    const double r = sys.potential(q) - sys.energy;
    if (std::abs(r) <= opts.tol_proj) return q;
    if (it == opts.max_iter) break;
    const Vec grad = sys.grad_potential(q);
    const double gg = grad.dot(sys.dpotential(q));
    if (!(gg > 0.0)) throw NumericalError(ErrorCode::projection, "vanishing gradient");
    q -= (r / gg) * grad;
    if (!sys.domain_box.contains(q)) {
      throw NumericalError(ErrorCode::projection, "Newton iterate left the domain box");
    }
  }
  throw NumericalError(ErrorCode::projection, "no convergence within max_iter");
}

Mat boundary_tangent_basis(const PotentialSystem& sys, const Vec& q) {
  const int n = sys.dim;
  if (n == 1) return Mat::Zero(1, 0);
  Vec nrm = sys.dpotential(q);
  nrm.normalize();
  // Householder reflection taking e_0 to nrm; its remaining columns span the
  // orthogonal complement.
  Eigen::HouseholderQR<Mat> qr(nrm);
  Mat Qm = qr.householderQ() * Mat::Identity(n, n);
  return Qm.rightCols(n - 1);
}

Vec ray_cast_boundary(const PotentialSystem& sys, const Vec& q, const Vec& u,
                      const ProjectionOptions& opts) {
  const Vec dir = u.normalized();
  const double diam = (sys.domain_box.hi - sys.domain_box.lo).norm();
  const double step = diam / 400.0;
  auto f = [&](double lam) { return sys.potential(q + lam * dir) - sys.energy; };
  double a = 0.0, fa = f(0.0);
  if (fa >= 0.0) throw NumericalError(ErrorCode::domain, "ray origin is not inside the well");
  for (int k = 1; k <= 800; ++k) {
    const double b = k * step;
    const Vec p = q + b * dir;
    if (!sys.domain_box.contains(p)) break;
    const double fb = f(b);
    if (fb >= 0.0) {
      boost::uintmax_t it = 200;
      auto br = boost::math::tools::toms748_solve(f, a, b, fa, fb,
                                                  boost::math::tools::eps_tolerance<double>(50), it);
      Vec x = q + 0.5 * (br.first + br.second) * dir;
      return project_to_boundary(sys, x, opts);
    }
    a = b;
    fa = fb;
  }
  throw NumericalError(ErrorCode::domain, "ray did not reach the boundary inside the box");
}

double metric_min_eigenvalue(const PotentialSystem& sys, const Vec& q) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sys.metric(q), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace brakeorbit
