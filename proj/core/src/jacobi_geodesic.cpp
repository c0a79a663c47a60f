#include "brakeorbit/jacobi_geodesic.hpp"

#include "brakeorbit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace brakeorbit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vec nan_vec(int n) { return Vec::Constant(n, kNaN); }

double g_norm(const PotentialSystem& sys, const Vec& q, const Vec& x) {
  return std::sqrt(x.dot(sys.metric(q) * x));
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

std::vector<double> graded_arc_grid(double a, bool grade_end, const GeodesicGridOptions& grid) {
  std::vector<double> s{0.0};
  if (a <= 0) return s;
  const int n = std::max(grid.uniform_cells, 2);
  const double h = a / n;
  for (int j = 1; j <= n; ++j) s.push_back(a * j / n);
  for (double x = grid.first_cell * a; x < 0.999 * h; x *= 2) {
    s.push_back(x);
    // The far wall is graded more gently: energy drift accumulated along the
    // lift is divided by E - V there, and the quadratures resolve that end
    // on their own panels.
    if (grade_end && x >= 1e-6 * a) s.push_back(a - x);
  }
  std::sort(s.begin(), s.end());
  s.back() = a;
  return s;
}

double JacobiGeodesic::time_at_arc(double sq) const {
  if (!lift) throw NumericalError(ErrorCode::interpolation, "geodesic has no time lift");
  return lift->time_at_arc(sq);
}

double JacobiGeodesic::arc_at_time(double t) const {
  if (!lift) throw NumericalError(ErrorCode::interpolation, "geodesic has no time lift");
  return lift->at(t).s;
}

GeodesicPoint JacobiGeodesic::at_arc(const PotentialSystem& sys, double sq) const {
  GeodesicPoint p;
  p.s = sq;
  const double L = length();
  if (sq < -1e-12 * (1 + L) || sq > L * (1 + 1e-9) + 1e-14) {
    throw NumericalError(ErrorCode::interpolation, "arc parameter outside the geodesic");
  }
  sq = std::clamp(sq, 0.0, L);
  if (lift) {
    p.t = lift->time_at_arc(sq);
    const TrajectoryPoint tp = lift->at(p.t);
    p.q = tp.q;
    p.v = tp.v;
    p.w = 0.5 * p.v.dot(sys.metric(p.q) * p.v);
    const bool wall = (sq == 0.0 && boundary_start) || (sq == L && boundary_end);
    p.gdot = (wall || !(p.w > 0)) ? nan_vec(dim) : Vec(p.v / p.w);
    return p;
  }
  if (arc_dense) {
    const Vec y = (*arc_dense)(arc_direction * sq);
    p.q = y.head(dim);
    p.gdot = arc_direction * y.tail(dim);
    p.w = sys.energy - sys.potential(p.q);
    p.v = (p.w / std::sqrt(c)) * p.gdot;
    return p;
  }
  if (s.size() == 1) {
    p.q = points.front();
    p.gdot = velocities.front();
    p.w = sys.energy - sys.potential(p.q);
    p.v = p.w * p.gdot;
    return p;
  }
  auto it = std::upper_bound(s.begin(), s.end(), sq);
  std::size_t k = it == s.begin() ? 0 : static_cast<std::size_t>(it - s.begin()) - 1;
  k = std::min(k, s.size() - 2);
  const double h = s[k + 1] - s[k];
  const double x = (sq - s[k]) / h;
  const Vec& d0 = velocities[k];
  const Vec& d1 = velocities[k + 1];
  if (!d0.allFinite() || !d1.allFinite()) {
    p.q = (1 - x) * points[k] + x * points[k + 1];
    p.gdot = (points[k + 1] - points[k]) / h;
  } else {
    const double h00 = 2 * x * x * x - 3 * x * x + 1, h10 = x * x * x - 2 * x * x + x;
    const double h01 = -2 * x * x * x + 3 * x * x, h11 = x * x * x - x * x;
    p.q = h00 * points[k] + h10 * h * d0 + h01 * points[k + 1] + h11 * h * d1;
    p.gdot = (1 - x) * d0 + x * d1;
  }
  p.w = sys.energy - sys.potential(p.q);
  p.v = (p.w / std::sqrt(c)) * p.gdot;
  return p;
}

Rhs arc_geodesic_rhs(const PotentialSystem& sys) {
  const int n = sys.dim;
  return [sys, n](double, const Vec& y, Vec& dy) {
    dy.resize(2 * n);
    const Vec x = y.head(n);
    const Vec xd = y.tail(n);
    const double w = sys.energy - sys.potential(x);
    const Mat g = sys.metric(x);
    const Vec dV = sys.dpotential(x);
    const Vec grad = g.ldlt().solve(dV);
    Vec acc = (dV.dot(xd) * xd - 0.5 * xd.dot(g * xd) * grad) / w;
    if (!sys.flat_metric) acc -= christoffel(sys, x).contract(xd, xd);
    dy.head(n) = xd;
    dy.tail(n) = acc;
  };
}

JacobiGeodesic integrate_interior(const PotentialSystem& sys, const Vec& q0, const Vec& v0,
                                  double s_span, const InteriorOptions& opts) {
  sys.require_in_box(q0);
  const double margin = opts.margin_factor * sys.reg_band;
  const double w0 = sys.energy - sys.potential(q0);
  if (!(w0 > margin)) {
    throw NumericalError(ErrorCode::handoff,
                         "start within the boundary margin; use the time lift (boundary_start)");
  }
  const int n = sys.dim;
  JacobiGeodesic geo;
  geo.dim = n;
  geo.c = 0.5 * w0 * v0.dot(sys.metric(q0) * v0);
  if (!(geo.c > 0)) throw NumericalError(ErrorCode::degenerate_curve, "zero initial velocity");
  Vec y0(2 * n);
  y0 << q0, v0;
  auto guard = [&sys, n, margin](const Vec& y) {
    const Vec x = y.head(n);
    if (!sys.domain_box.contains(x)) return false;
    if (!(sys.energy - sys.potential(x) > margin)) {
      throw NumericalError(ErrorCode::handoff,
                           "geodesic reached the boundary margin; continue with the time lift");
    }
    return true;
  };
  OdeResult res = integrate(arc_geodesic_rhs(sys), 0.0, y0, s_span, opts.ode, nullptr, guard);
  geo.arc_dense = res.solution;
  geo.arc_direction = s_span >= 0 ? 1.0 : -1.0;
  const double L = std::abs(s_span);
  for (int i = 0; i <= opts.nodes; ++i) {
    const double s = L * i / opts.nodes;
    const Vec y = (*geo.arc_dense)(geo.arc_direction * s);
    geo.s.push_back(s);
    geo.points.push_back(y.head(n));
    geo.velocities.push_back(geo.arc_direction * y.tail(n));
    const double w = sys.energy - sys.potential(geo.points.back());
    const double cc = 0.5 * w * geo.velocities.back().dot(sys.metric(geo.points.back()) * geo.velocities.back());
    geo.conservation_residual = std::max(geo.conservation_residual, std::abs(cc - geo.c) / geo.c);
  }
  return geo;
}

JacobiGeodesic geodesic_from_lift(const PotentialSystem& sys,
                                  std::shared_ptr<const NaturalTrajectory> lift, double a,
                                  bool starts_on_boundary, const GeodesicGridOptions& grid) {
  const int n = sys.dim;
  JacobiGeodesic geo;
  geo.dim = n;
  geo.c = 1.0;
  geo.boundary_start = starts_on_boundary;
  geo.lift = lift;
  const double total = lift->total_arc();
  if (a > total) {
    if (a > total * (1 + 1e-9)) geo.truncated = true;
    a = total;
  }
  const Vec& q_end = lift->q.back();
  const Vec& v_end = lift->v.back();
  const bool lift_ends_on_wall =
      std::abs(sys.potential(q_end) - sys.energy) <= 1e-8 * (1 + std::abs(sys.energy)) &&
      g_norm(sys, q_end, v_end) <= 1e-6;
  geo.boundary_end = lift_ends_on_wall && a >= total * (1 - 1e-12);
  if (geo.boundary_end) a = total;
  geo.s = starts_on_boundary ? graded_arc_grid(a, geo.boundary_end, grid) : std::vector<double>{};
  if (!starts_on_boundary) {
    for (int i = 0; i <= grid.uniform_cells; ++i) geo.s.push_back(a * i / grid.uniform_cells);
  }
  for (std::size_t i = 0; i < geo.s.size(); ++i) {
    const GeodesicPoint p = geo.at_arc(sys, geo.s[i]);
    geo.points.push_back(p.q);
    geo.velocities.push_back(p.gdot);
    const bool interior = p.gdot.allFinite() && i > 0 && i + 1 < geo.s.size();
    if (interior) {
      const double w = sys.energy - sys.potential(p.q);
      const double cc = 0.5 * w * p.gdot.dot(sys.metric(p.q) * p.gdot);
      geo.conservation_residual = std::max(geo.conservation_residual, std::abs(cc - 1.0));
    }
  }
  if (starts_on_boundary) geo.points.front() = lift->q.front();
  return geo;
}

JacobiGeodesic boundary_start(const PotentialSystem& sys, const Vec& x0, double a,
                              const DynamicsOptions& dyn, const GeodesicGridOptions& grid) {
  sys.require_in_box(x0);
  if (std::abs(sys.potential(x0) - sys.energy) > 1e-10 * (1 + std::abs(sys.energy))) {
    throw NumericalError(ErrorCode::domain, "start point is not on the boundary");
  }
  if (a < 0) throw NumericalError(ErrorCode::invalid_input, "negative arc length");
  if (a == 0) {
    JacobiGeodesic geo;
    geo.dim = sys.dim;
    geo.boundary_start = true;
    geo.s = {0.0};
    geo.points = {x0};
    geo.velocities = {nan_vec(sys.dim)};
    return geo;
  }
  std::shared_ptr<const NaturalTrajectory> lift;
  try {
    lift = std::make_shared<NaturalTrajectory>(shoot_brake_orbit(sys, x0, dyn).trajectory);
  } catch (const NumericalError& e) {
    if (e.code() != ErrorCode::no_brake) throw;
    // No rebrake within t_max: integrate just far enough to cover the arc.
    const int n = sys.dim;
    Vec y0 = Vec::Zero(2 * n + 1);
    y0.head(n) = x0;
    OdeEvent ev;
    ev.g = [n, a](double, const Vec& y) { return y[2 * n] - a; };
    ev.direction = 1;
    auto guard = [&sys, n](const Vec& y) { return sys.domain_box.contains(y.head(n)); };
    OdeResult res = integrate(newton_rhs(sys), 0.0, y0, dyn.t_max, dyn.ode, &ev, guard);
    lift = std::make_shared<NaturalTrajectory>(trajectory_from_dense(sys, res.solution));
  }
  return geodesic_from_lift(sys, lift, a, true, grid);
}

AsymptoticFit asymptotic_exponents(const PotentialSystem& sys, const JacobiGeodesic& geo) {
  if (!geo.boundary_start) {
    throw NumericalError(ErrorCode::invalid_input, "exponent fit needs a boundary-starting geodesic");
  }
  AsymptoticFit fit;
  fit.s_fit = std::min(geo.length() / 4, 0.1);
  std::vector<double> ls, lw, lv;
  for (std::size_t i = 1; i < geo.s.size(); ++i) {
    const double s = geo.s[i];
    if (s > fit.s_fit) break;
    const Vec& q = geo.points[i];
    const Vec& gd = geo.velocities[i];
    if (!gd.allFinite()) continue;
    const double w = sys.energy - sys.potential(q);
    const double speed = g_norm(sys, q, gd);
    ls.push_back(std::log(s));
    lw.push_back(std::log(w));
    lv.push_back(std::log(speed));
    const Vec grad = sys.grad_potential(q);
    const Vec sigma = gd / speed + grad / g_norm(sys, q, grad);
    fit.sigma_ratio = std::max(fit.sigma_ratio, g_norm(sys, q, sigma) / std::cbrt(s));
  }
  fit.nodes = static_cast<int>(ls.size());
  if (fit.nodes < 20) {
    throw NumericalError(ErrorCode::sampling, "fewer than 20 nodes in (0, s_fit]");
  }
  fit.alpha_ev = ls_slope(ls, lw);
  fit.alpha_speed = ls_slope(ls, lv);
  return fit;
}

}  // namespace brakeorbit
