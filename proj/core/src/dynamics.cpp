#include "brakeorbit/dynamics.hpp"

#include "brakeorbit/errors.hpp"
#include "brakeorbit/jacobi_geodesic.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace brakeorbit {

namespace {

// Cubic Hermite basis on [0, 1].
struct Hermite {
  double h00, h10, h01, h11;
  explicit Hermite(double x)
      : h00(2 * x * x * x - 3 * x * x + 1),
        h10(x * x * x - 2 * x * x + x),
        h01(-2 * x * x * x + 3 * x * x),
        h11(x * x * x - x * x) {}
};

std::size_t bracket(const std::vector<double>& xs, double x) {
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.begin()) return 0;
  std::size_t k = static_cast<std::size_t>(it - xs.begin()) - 1;
  return std::min(k, xs.size() - 2);
}

double lerp_table(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (xs.size() == 1) return ys.front();
  const std::size_t k = bracket(xs, x);
  const double dx = xs[k + 1] - xs[k];
  if (dx <= 0) return ys[k];
  const double u = (x - xs[k]) / dx;
  return ys[k] + u * (ys[k + 1] - ys[k]);
}

}  // namespace

Rhs newton_rhs(const PotentialSystem& sys) {
  const int n = sys.dim;
  return [sys, n](double, const Vec& y, Vec& dy) {
    dy.resize(2 * n + 1);
    const Vec q = y.head(n);
    const Vec v = y.segment(n, n);
    dy.head(n) = v;
    Vec acc = -sys.grad_potential(q);
    if (!sys.flat_metric) acc -= christoffel(sys, q).contract(v, v);
    dy.segment(n, n) = acc;
    dy[2 * n] = 0.5 * v.dot(sys.metric(q) * v);
  };
}

TrajectoryPoint NaturalTrajectory::at(double t) const {
  TrajectoryPoint p;
  p.t = t;
  if (dense) {
    const Vec y = (*dense)(t);
    p.q = y.head(dim);
    p.v = y.segment(dim, dim);
    p.s = y[2 * dim];
    return p;
  }
  if (times.size() == 1) {
    p.q = q.front();
    p.v = v.front();
    p.s = arc.front();
    return p;
  }
  const double lo = times.front(), hi = times.back();
  if (t < lo - 1e-12 * (1 + std::abs(lo)) || t > hi + 1e-12 * (1 + std::abs(hi))) {
    throw NumericalError(ErrorCode::interpolation, "time outside trajectory range");
  }
  const std::size_t k = bracket(times, t);
  const double h = times[k + 1] - times[k];
  const double x = (t - times[k]) / h;
  const Hermite H(x);
  p.q = H.h00 * q[k] + H.h10 * h * v[k] + H.h01 * q[k + 1] + H.h11 * h * v[k + 1];
  p.v = H.h00 * v[k] + H.h10 * h * accel[k] + H.h01 * v[k + 1] + H.h11 * h * accel[k + 1];
  p.s = H.h00 * arc[k] + H.h10 * h * arc_rate[k] + H.h01 * arc[k + 1] + H.h11 * h * arc_rate[k + 1];
  return p;
}

double NaturalTrajectory::time_at_arc(double s) const {
  const double total = arc.back();
  if (s <= arc.front()) return times.front();
  if (s >= total) {
    if (s > total * (1 + 1e-9) + 1e-14) {
      throw NumericalError(ErrorCode::interpolation, "arc beyond trajectory");
    }
    return times.back();
  }
  auto it = std::upper_bound(arc.begin(), arc.end(), s);
  std::size_t k = static_cast<std::size_t>(it - arc.begin()) - 1;
  k = std::min(k, times.size() - 2);
  double a = times[k], b = times[k + 1];
  auto f = [&](double t) { return at(t).s - s; };
  double fa = arc[k] - s, fb = arc[k + 1] - s;
  if (fa >= 0) return a;
  if (fb <= 0) return b;
  boost::uintmax_t it_max = 200;
  auto br = boost::math::tools::toms748_solve(f, a, b, fa, fb,
                                              boost::math::tools::eps_tolerance<double>(52), it_max);
  return 0.5 * (br.first + br.second);
}

double ReparamMap::time_at(double sq) const { return lerp_table(s, t, sq); }
double ReparamMap::arc_at(double tq) const { return lerp_table(t, s, tq); }

double ReparamMap::round_trip_error() const {
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    for (double u : {0.25, 0.5, 0.75}) {
      const double sq = s[i] + u * (s[i + 1] - s[i]);
      err = std::max(err, std::abs(arc_at(time_at(sq)) - sq));
    }
  }
  return err;
}

NaturalTrajectory trajectory_from_dense(const PotentialSystem& sys,
                                        std::shared_ptr<const DenseSolution> dense) {
  NaturalTrajectory tr;
  const int n = sys.dim;
  tr.dim = n;
  tr.dense = dense;
  const auto& ts = dense->times();
  const auto& ys = dense->states();
  const Rhs f = newton_rhs(sys);
  Vec dy;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    tr.times.push_back(ts[i]);
    tr.q.push_back(ys[i].head(n));
    tr.v.push_back(ys[i].segment(n, n));
    tr.arc.push_back(ys[i][2 * n]);
    f(ts[i], ys[i], dy);
    tr.accel.push_back(dy.segment(n, n));
    tr.arc_rate.push_back(dy[2 * n]);
    tr.energy_residual =
        std::max(tr.energy_residual, std::abs(energy(sys, tr.q.back(), tr.v.back()) - sys.energy));
  }
  if (tr.times.size() >= 2 && tr.times.back() < tr.times.front()) {
    // Store backward integrations in increasing time order.
    std::reverse(tr.times.begin(), tr.times.end());
    std::reverse(tr.q.begin(), tr.q.end());
    std::reverse(tr.v.begin(), tr.v.end());
    std::reverse(tr.arc.begin(), tr.arc.end());
    std::reverse(tr.accel.begin(), tr.accel.end());
    std::reverse(tr.arc_rate.begin(), tr.arc_rate.end());
  }
  return tr;
}

NaturalTrajectory integrate_natural(const PotentialSystem& sys, const Vec& q0, const Vec& v0,
                                    double t_end, const DynamicsOptions& opts) {
  sys.require_in_box(q0);
  if (opts.energy_locked && std::abs(energy(sys, q0, v0) - sys.energy) > opts.tol_E) {
    throw NumericalError(ErrorCode::invalid_input, "initial data off the energy level");
  }
  const int n = sys.dim;
  Vec y0(2 * n + 1);
  y0 << q0, v0, 0.0;
  auto guard = [&sys, n](const Vec& y) { return sys.domain_box.contains(y.head(n)); };
  OdeResult res = integrate(newton_rhs(sys), 0.0, y0, t_end, opts.ode, nullptr, guard);
  return trajectory_from_dense(sys, res.solution);
}

BrakeOrbit shoot_brake_orbit(const PotentialSystem& sys, const Vec& x0, const DynamicsOptions& opts) {
  sys.require_in_box(x0);
  if (std::abs(sys.potential(x0) - sys.energy) > 1e-10 * (1 + std::abs(sys.energy))) {
    throw NumericalError(ErrorCode::domain, "brake start is not on the energy boundary");
  }
  const int n = sys.dim;
  Vec y0 = Vec::Zero(2 * n + 1);
  y0.head(n) = x0;
  OdeEvent ev;
  // d/dt of the kinetic energy; a brake is a minimum with vanishing speed.
  ev.g = [&sys, n](double, const Vec& y) { return -sys.dpotential(y.head(n)).dot(y.segment(n, n)); };
  ev.direction = 1;
  ev.t_min = opts.t_min;
  ev.accept = [&sys, n, &opts](double, const Vec& y) {
    const Vec v = y.segment(n, n);
    return std::sqrt(v.dot(sys.metric(y.head(n)) * v)) <= opts.tol_v;
  };
  auto guard = [&sys, n](const Vec& y) { return sys.domain_box.contains(y.head(n)); };
  OdeResult res = integrate(newton_rhs(sys), 0.0, y0, opts.t_max, opts.ode, &ev, guard);
  if (!res.event_fired) {
    throw NumericalError(ErrorCode::no_brake, "no rebrake before t_max");
  }
  BrakeOrbit orbit;
  orbit.trajectory = trajectory_from_dense(sys, res.solution);
  orbit.half_period = res.event_time;
  orbit.start = x0;
  orbit.end = orbit.trajectory.q.back();
  if ((orbit.end - orbit.start).norm() < 1e-9) {
    throw NumericalError(ErrorCode::degenerate_curve, "brake orbit returned to its start");
  }
  return orbit;
}

OrthcondProfile orthcond_profile(const PotentialSystem& sys, const BrakeOrbit& orbit, double t_probe,
                                 int samples) {
  OrthcondProfile prof;
  const double T = orbit.half_period;
  if (t_probe <= 0) t_probe = 0.5 * T;
  t_probe = std::min(t_probe, T);
  const Vec q0 = orbit.trajectory.q.front();
  const Mat g0 = sys.metric(q0);
  const Vec grad0 = sys.grad_potential(q0);
  const double t_taylor = 1e-4 * T;
  for (int j = 1; j <= samples; ++j) {
    const double t = t_probe * static_cast<double>(j) / samples;
    const TrajectoryPoint p = orbit.trajectory.at(t);
    const Mat g = sys.metric(p.q);
    const Vec grad = sys.grad_potential(p.q);
    Vec vel = p.v;
    bool taylor = false;
    if (t < t_taylor) {
      vel = -t * grad0;
      taylor = true;
    }
    const double vn = std::sqrt(vel.dot((taylor ? g0 : g) * vel));
    if (vn < 1e-13) {
      ++prof.skipped;
      continue;
    }
    const Vec sigma = grad / std::sqrt(grad.dot(g * grad)) + vel / vn;
    const double r = std::sqrt(sigma.dot(g * sigma)) / t;
    prof.t.push_back(t);
    prof.r.push_back(r);
    prof.taylor.push_back(taylor);
    prof.sup = std::max(prof.sup, r);
  }
  return prof;
}

namespace {

// Integral of sqrt(c) / w along the geodesic over [a, b], where w may vanish
// like (sigma - wall)^{2/3} at a wall end.
double time_cell(const PotentialSystem& sys, const JacobiGeodesic& geo, double a, double b,
                 bool wall_left, bool wall_right, double sqrt_c) {
  using boost::math::quadrature::gauss;
  auto inv_w = [&](double s) {
    const GeodesicPoint p = geo.at_arc(sys, s);
    if (!(p.w > 0)) throw NumericalError(ErrorCode::quadrature, "nonpositive E - V in quadrature");
    return sqrt_c / p.w;
  };
  if (!wall_left && !wall_right) return gauss<double, 8>::integrate(inv_w, a, b);
  if (wall_left && wall_right) {
    const double m = 0.5 * (a + b);
    return time_cell(sys, geo, a, m, true, false, sqrt_c) +
           time_cell(sys, geo, m, b, false, true, sqrt_c);
  }
  // Geometric panels toward the wall (ratio 1/2, up to 40 levels) and a cubic
  // substitution on the innermost panel. Near a wall at s > 0 the arc
  // coordinate cannot resolve tiny distances, so the innermost panel there
  // uses the power law w ~ d^{2/3}, whose integral is 3 d / w(d).
  const double L = b - a;
  const double wall = wall_left ? a : b;
  const double d_floor = wall == 0.0 ? 0.0 : 1e4 * std::numeric_limits<double>::epsilon() * (std::abs(wall) + L);
  auto at = [&](double d) { return wall_left ? a + d : b - d; };
  double total = 0.0;
  double hi = L;
  for (int k = 0; k < 40 && 0.5 * hi > d_floor; ++k) {
    const double lo = 0.5 * hi;
    const double x = at(lo), y = at(hi);
    total += gauss<double, 8>::integrate(inv_w, std::min(x, y), std::max(x, y));
    hi = lo;
  }
  const double ell = hi;
  if (d_floor > 0.0) return total + 3 * ell * inv_w(at(ell));
  auto sub = [&](double u) { return inv_w(at(ell * u * u * u)) * 3 * ell * u * u; };
  total += gauss<double, 8>::integrate(sub, 0.0, 1.0);
  return total;
}

}  // namespace

ReparamMap time_of_arc(const PotentialSystem& sys, const JacobiGeodesic& geo, double c) {
  if (!(c > 0)) throw NumericalError(ErrorCode::invalid_input, "conservation constant must be positive");
  const std::size_t m = geo.s.size();
  if (m < 2 || geo.length() <= 0) {
    throw NumericalError(ErrorCode::degenerate_curve, "geodesic has zero length");
  }
  for (std::size_t i = 1; i + 1 < m; ++i) {
    if (!(sys.energy - sys.potential(geo.points[i]) > 0)) {
      throw NumericalError(ErrorCode::invalid_geodesic, "geodesic touches the boundary inside");
    }
  }
  ReparamMap map;
  map.c = c;
  map.s = geo.s;
  map.t.assign(m, 0.0);
  const double sqrt_c = std::sqrt(c);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const bool wl = (i == 0) && geo.boundary_start;
    const bool wr = (i + 2 == m) && geo.boundary_end;
    map.t[i + 1] = map.t[i] + time_cell(sys, geo, geo.s[i], geo.s[i + 1], wl, wr, sqrt_c);
  }
  return map;
}

NaturalTrajectory orbit_from_geodesic(const PotentialSystem& sys, const JacobiGeodesic& geo) {
  if (geo.length() <= 0 || geo.s.size() < 2) {
    throw NumericalError(ErrorCode::degenerate_curve, "constant geodesic");
  }
  const ReparamMap map = time_of_arc(sys, geo, geo.c);
  const int n = geo.dim;
  const double sqrt_c = std::sqrt(geo.c);
  NaturalTrajectory tr;
  tr.dim = n;
  for (std::size_t i = 0; i < geo.s.size(); ++i) {
    const Vec& q = geo.points[i];
    const double w = sys.energy - sys.potential(q);
    Vec v;
    const bool wall = (i == 0 && geo.boundary_start) || (i + 1 == geo.s.size() && geo.boundary_end);
    if (wall) {
      v = Vec::Zero(n);
    } else {
      v = (w / sqrt_c) * geo.velocities[i];
    }
    Vec a = -sys.grad_potential(q);
    if (!sys.flat_metric) a -= christoffel(sys, q).contract(v, v);
    tr.times.push_back(map.t[i]);
    tr.q.push_back(q);
    tr.v.push_back(v);
    tr.accel.push_back(a);
    tr.arc.push_back(geo.s[i]);
    tr.arc_rate.push_back(w / sqrt_c);
    tr.energy_residual = std::max(tr.energy_residual, std::abs(energy(sys, q, v) - sys.energy));
  }
  return tr;
}

JacobiGeodesic geodesic_from_orbit(const PotentialSystem& sys, const NaturalTrajectory& orbit) {
  if (!orbit.dense) {
    throw NumericalError(ErrorCode::invalid_input, "orbit needs a dense solution");
  }
  if (orbit.total_arc() <= 0 || orbit.duration() <= 0) {
    throw NumericalError(ErrorCode::degenerate_curve, "constant trajectory");
  }
  const Vec& q0 = orbit.q.front();
  const Vec& v0 = orbit.v.front();
  const bool on_wall = std::abs(sys.potential(q0) - sys.energy) <= 1e-9 * (1 + std::abs(sys.energy)) &&
                       v0.norm() <= 1e-7;
  auto lift = std::make_shared<NaturalTrajectory>(orbit);
  return geodesic_from_lift(sys, lift, orbit.total_arc(), on_wall);
}

}  // namespace brakeorbit
