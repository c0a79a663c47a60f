#include "brakeorbit/morse.hpp"

#include "brakeorbit/errors.hpp"

#include <algorithm>
#include <cmath>

namespace brakeorbit {

namespace {

double g_norm(const Mat& g, const Vec& x) { return std::sqrt(std::max(0.0, x.dot(g * x))); }

// Flux P = D_t xi - dV(xi) v / w, the quantity paired with eta in the boundary terms.
Vec flux(const LiftSample& p, const Vec& xi, const Vec& dxi) { return dxi - p.dV.dot(xi) * p.v / p.w; }

}  // namespace

Mat jacobi_system_matrix(const LiftSample& p) {
  const int n = static_cast<int>(p.q.size());
  const Mat gv = christoffel_along(p.gamma, p.v);
  const Mat hs = p.g.ldlt().solve(p.hess);
  const Vec hv = p.hess * p.v;
  const Vec gvv = p.g * p.v;
  const double dVv = p.dV.dot(p.v);
  const double w = p.w;
  Mat M = Mat::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = -gv;
  M.topRightCorner(n, n) = Mat::Identity(n, n);
  M.bottomLeftCorner(n, n) = p.rv - hs + p.v * hv.transpose() / w - p.grad * p.dV.transpose() / w +
                             p.v * p.dV.transpose() * (dVv / (w * w));
  M.bottomRightCorner(n, n) = p.v * p.dV.transpose() / w - p.grad * gvv.transpose() / w - gv;
  return M;
}

double jacobi_residual(const PotentialSystem& sys, const NaturalTrajectory& lift, const TimeField& xi,
                       double t) {
  const double span = lift.t_end() - lift.t_begin();
  const double room = std::min(t - lift.t_begin(), lift.t_end() - t);
  const double h = std::min(1e-3 * span, 0.1 * room);
  if (!(h > 0)) throw NumericalError(ErrorCode::interpolation, "residual probe at the end of the lift");
  auto flux_at = [&](double tt) {
    const LiftSample p = sample_lift(sys, lift, tt);
    const FieldValue f = xi(tt);
    return flux(p, f.xi, f.dxi);
  };
  auto central = [&](double step) { return Vec((flux_at(t + step) - flux_at(t - step)) / (2 * step)); };
  const LiftSample p = sample_lift(sys, lift, t);
  const FieldValue f = xi(t);
  const Vec P = flux(p, f.xi, f.dxi);
  // Richardson combination of two central differences, fourth order in h.
  Vec dP = (4.0 * central(0.5 * h) - central(h)) / 3.0;
  if (!p.gamma.zero) dP += p.gamma.contract(p.v, P);
  const Vec curv = p.rv * f.xi;
  const Vec hess = p.g.ldlt().solve(p.hess * f.xi);
  const Vec cross = (p.v.dot(p.g * f.dxi) / p.w) * p.grad;
  const Vec res = -dP + curv - hess - cross;
  const double scale = g_norm(p.g, dP) + g_norm(p.g, curv) + g_norm(p.g, hess) + g_norm(p.g, cross);
  if (!(scale > 1e-300)) return 0.0;
  return g_norm(p.g, res) / scale;
}

namespace {

JacobiFieldSolution sample_solution(const PotentialSystem& sys, const NaturalTrajectory& lift, const TimeField& f,
                                    const std::vector<double>& ts) {
  JacobiFieldSolution sol;
  for (double t : ts) {
    const FieldValue v = f(t);
    const TrajectoryPoint tp = lift.at(t);
    const double w = 0.5 * tp.v.dot(sys.metric(tp.q) * tp.v);
    sol.t.push_back(t);
    sol.s.push_back(tp.s);
    sol.xi.push_back(v.xi);
    sol.dxi_dt.push_back(v.dxi);
    sol.dxi_ds.push_back(w > 0 ? Vec(v.dxi / w) : Vec::Constant(sys.dim, std::nan("")));
  }
  for (std::size_t i = 1; i + 1 < ts.size(); ++i) {
    sol.residual = std::max(sol.residual, jacobi_residual(sys, lift, f, ts[i]));
  }
  return sol;
}

}  // namespace

JacobiFieldSolution jacobi_field_shoot(const PotentialSystem& sys, const JacobiGeodesic& geo, double s0,
                                       const Vec& xi0, const Vec& dxi0_ds, double s_end, int samples) {
  if (!geo.lift) throw NumericalError(ErrorCode::invalid_input, "Jacobi shooting needs the time lift");
  if (!(s0 > 0) || !(s_end > s0) || s_end > geo.length() * (1 + 1e-9)) {
    throw NumericalError(ErrorCode::interpolation, "Jacobi shooting interval outside (0, a]");
  }
  const int n = sys.dim;
  auto lift = geo.lift;
  const double t0 = geo.time_at_arc(s0), t1 = geo.time_at_arc(std::min(s_end, geo.length()));
  const LiftSample p0 = sample_lift(sys, *lift, t0);
  Vec y0(2 * n);
  y0.head(n) = xi0;
  y0.tail(n) = p0.w * dxi0_ds;
  Rhs rhs = [sys, lift](double t, const Vec& y, Vec& dy) { dy = jacobi_system_matrix(sample_lift(sys, *lift, t)) * y; };
  OdeOptions opts;
  opts.atol = 1e-13;
  const OdeResult res = integrate(rhs, t0, y0, t1, opts);
  auto dense = res.solution;
  TimeField f = [dense, n](double t) {
    const Vec y = (*dense)(t);
    return FieldValue{y.head(n), y.tail(n)};
  };
  std::vector<double> ts;
  for (int i = 0; i <= samples; ++i) ts.push_back(t0 + (t1 - t0) * i / samples);
  return sample_solution(sys, *lift, f, ts);
}

JacobiFieldSolution sample_field(const PotentialSystem& sys, const JacobiGeodesic& geo, const TimeField& xi,
                                 const std::vector<double>& s_grid) {
  if (!geo.lift) throw NumericalError(ErrorCode::invalid_input, "field sampling needs the time lift");
  std::vector<double> ts;
  for (double s : s_grid) ts.push_back(geo.time_at_arc(s));
  return sample_solution(sys, *geo.lift, xi, ts);
}

NullBoundaryResult null_boundary_check(const PotentialSystem& sys, const JacobiGeodesic& geo,
                                       const JacobiFieldSolution& xi) {
  NullBoundaryResult out;
  if (!geo.lift) throw NumericalError(ErrorCode::invalid_input, "boundary check needs the time lift");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < xi.s.size(); ++i) {
    if (xi.s[i] > 0) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return xi.s[a] < xi.s[b]; });
  if (order.size() < 5) throw NumericalError(ErrorCode::sampling, "boundary check needs five positive nodes");
  order.resize(5);
  const Vec x0 = geo.points.front();
  const Vec n0 = sys.grad_potential(x0);
  for (std::size_t i : order) {
    const LiftSample p = sample_lift(sys, *geo.lift, xi.t[i]);
    const Vec P = flux(p, xi.xi[i], xi.dxi_dt[i]);
    const Vec perp = P - (P.dot(p.g * n0) / n0.dot(p.g * n0)) * n0;
    out.s.push_back(xi.s[i]);
    out.values.push_back(g_norm(p.g, perp));
  }
  // Least-squares fit r = r0 + c s^{1/3}, the natural rate at the wall.
  Eigen::MatrixXd X(5, 2);
  Vec r(5);
  for (int k = 0; k < 5; ++k) {
    X(k, 0) = 1.0;
    X(k, 1) = std::cbrt(out.s[k]);
    r[k] = out.values[k];
  }
  const Vec coef = X.colPivHouseholderQr().solve(r);
  out.residual = std::abs(coef[0]);
  const double scale = r.cwiseAbs().maxCoeff();
  bool up = true, down = true;
  for (int k = 0; k + 1 < 5; ++k) {
    const double d = r[k + 1] - r[k];
    if (d < -1e-9 * scale) up = false;
    if (d > 1e-9 * scale) down = false;
  }
  out.inconclusive = !(up || down);
  return out;
}

TimeField radial_gap_field(const PotentialSystem& sys, const JacobiGeodesic& geo) {
  if (!geo.lift) throw NumericalError(ErrorCode::invalid_input, "radial field needs the time lift");
  auto lift = geo.lift;
  Vec u = -sys.grad_potential(geo.points.front());
  u.normalize();
  return [sys, lift, u](double t) {
    const TrajectoryPoint tp = lift->at(t);
    const Mat g = sys.metric(tp.q);
    const double w = 0.5 * tp.v.dot(g * tp.v);
    const double root = std::sqrt(std::max(w, 0.0));
    const double wdot = -sys.dpotential(tp.q).dot(tp.v);
    FieldValue f{root * u, Vec::Zero(u.size())};
    if (root > 0) f.dxi = (wdot / (2 * root)) * u;
    if (!sys.flat_metric) f.dxi += christoffel(sys, tp.q).contract(tp.v, f.xi);
    return f;
  };
}

TimeField scaling_field(const PotentialSystem& sys, const JacobiGeodesic& geo) {
  if (!geo.lift) throw NumericalError(ErrorCode::invalid_input, "scaling field needs the time lift");
  auto lift = geo.lift;
  const Rhs f = newton_rhs(sys);
  const int n = sys.dim;
  return [sys, lift, f, n](double t) {
    const TrajectoryPoint tp = lift->at(t);
    Vec y(2 * n + 1), dy;
    y << tp.q, tp.v, tp.s;
    f(t, y, dy);
    const Vec vdot = dy.segment(n, n);
    const double w = 0.5 * tp.v.dot(sys.metric(tp.q) * tp.v);
    const double wdot = -sys.dpotential(tp.q).dot(tp.v);
    FieldValue out;
    out.xi = tp.s * tp.v / w;
    out.dxi = tp.v + tp.s * vdot / w - tp.s * tp.v * wdot / (w * w);
    if (!sys.flat_metric) out.dxi += christoffel(sys, tp.q).contract(tp.v, out.xi);
    return out;
  };
}

TimeField tangent_field(const PotentialSystem& sys, const JacobiGeodesic& geo) {
  if (!geo.lift) throw NumericalError(ErrorCode::invalid_input, "tangent field needs the time lift");
  auto lift = geo.lift;
  const Rhs f = newton_rhs(sys);
  const int n = sys.dim;
  return [sys, lift, f, n](double t) {
    const TrajectoryPoint tp = lift->at(t);
    Vec y(2 * n + 1), dy;
    y << tp.q, tp.v, tp.s;
    f(t, y, dy);
    const double w = 0.5 * tp.v.dot(sys.metric(tp.q) * tp.v);
    const double wdot = -sys.dpotential(tp.q).dot(tp.v);
    FieldValue out;
    out.xi = tp.v / w;
    out.dxi = dy.segment(n, n) / w - tp.v * wdot / (w * w);
    if (!sys.flat_metric) out.dxi += christoffel(sys, tp.q).contract(tp.v, out.xi);
    return out;
  };
}

WallFamily::WallFamily(const PotentialSystem& sys, std::shared_ptr<const NaturalTrajectory> lift, double t_end)
    : sys_(sys), lift_(std::move(lift)) {
  const int n = sys_.dim;
  const int m = 2 * n + 1;
  const Vec x0 = lift_->at(0.0).q;
  tangent_ = boundary_tangent_basis(sys_, x0);
  const int k = n - 1;
  count_ = n;
  const Rhs base = newton_rhs(sys_);
  const PotentialSystem sys_copy = sys_;
  // Base state plus k linearized copies; flat metrics get the exact linearization.
  Rhs rhs = [base, sys_copy, n, m, k](double t, const Vec& y, Vec& dy) {
    dy.resize(m * (k + 1));
    Vec f0;
    const Vec y0 = y.head(m);
    base(t, y0, f0);
    dy.head(m) = f0;
    Mat hs;
    Mat g;
    if (sys_copy.flat_metric) {
      g = sys_copy.metric(y0.head(n));
      hs = g.ldlt().solve(sys_copy.d2potential(y0.head(n)));
    }
    for (int j = 0; j < k; ++j) {
      const Vec d = y.segment(m * (j + 1), m);
      Vec out(m);
      if (sys_copy.flat_metric) {
        out.head(n) = d.segment(n, n);
        out.segment(n, n) = -hs * d.head(n);
        out[2 * n] = y0.segment(n, n).dot(g * d.segment(n, n));
      } else {
        const double eps = 1e-6 * (1.0 + y0.norm()) / std::max(d.norm(), 1e-300);
        Vec fp, fm;
        base(t, y0 + eps * d, fp);
        base(t, y0 - eps * d, fm);
        out = (fp - fm) / (2 * eps);
      }
      dy.segment(m * (j + 1), m) = out;
    }
  };
  Vec y0 = Vec::Zero(m * (k + 1));
  y0.head(n) = x0;
  for (int j = 0; j < k; ++j) y0.segment(m * (j + 1), n) = tangent_.col(j);
  OdeOptions opts;
  opts.atol = 1e-13;
  dense_ = integrate(rhs, 0.0, y0, t_end, opts).solution;
}

void WallFamily::eval(double t, Mat& xi, Mat& dxi) const {
  const int n = sys_.dim;
  const int m = 2 * n + 1;
  const int k = n - 1;
  Vec y;
  dense_->eval(t, y);
  Vec dy;
  dense_->rhs()(t, y, dy);
  const Vec q = y.head(n), v = y.segment(n, n);
  const double s = y[2 * n];
  const Vec vdot = dy.segment(n, n);
  const Mat g = sys_.metric(q);
  const double w = 0.5 * v.dot(g * v);
  const double wdot = -sys_.dpotential(q).dot(v);
  xi.resize(n, n);
  dxi.resize(n, n);
  for (int j = 0; j < k; ++j) {
    const Vec d = y.segment(m * (j + 1), m);
    const Vec dd = dy.segment(m * (j + 1), m);
    const double ds = d[2 * n], dsdot = dd[2 * n];
    xi.col(j) = d.head(n) - v * ds / w;
    dxi.col(j) = dd.head(n) - vdot * ds / w - v * dsdot / w + v * ds * wdot / (w * w);
  }
  xi.col(k) = s * v / w;
  dxi.col(k) = v + s * vdot / w - s * v * wdot / (w * w);
  if (!sys_.flat_metric) {
    const Christoffel G = christoffel(sys_, q);
    for (int j = 0; j < n; ++j) dxi.col(j) += G.contract(v, xi.col(j));
  }
}

}  // namespace brakeorbit
