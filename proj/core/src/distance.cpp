#include "brakeorbit/distance.hpp"

#include "brakeorbit/errors.hpp"
#include "brakeorbit/parallel.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace brakeorbit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Rule {
  std::vector<double> x;  // on [0, 1]
  std::vector<double> w;
};

const Rule& gauss_rule() {
  static const Rule rule = [] {
    using G = boost::math::quadrature::gauss<double, 10>;
    Rule r;
    const auto& ab = G::abscissa();
    const auto& wt = G::weights();
    for (std::size_t i = 0; i < ab.size(); ++i) {
      r.x.push_back(0.5 - 0.5 * ab[i]);
      r.w.push_back(0.5 * wt[i]);
      if (ab[i] != 0.0) {
        r.x.push_back(0.5 + 0.5 * ab[i]);
        r.w.push_back(0.5 * wt[i]);
      }
    }
    return r;
  }();
  return rule;
}

// Derivatives of the metric along each coordinate (empty when flat).
std::vector<Mat> metric_derivatives(const PotentialSystem& sys, const Vec& q) {
  std::vector<Mat> out;
  if (sys.flat_metric) return out;
  const double h = finite_difference_step(q);
  for (int l = 0; l < sys.dim; ++l) {
    Vec qp = q, qm = q;
    qp[l] += h;
    qm[l] -= h;
    out.push_back((sys.metric(qp) - sys.metric(qm)) / (2 * h));
  }
  return out;
}

// g*-length of the segment a -> b and its gradient. On the first segment the
// integrand vanishes like sqrt(lambda) at the wall; lambda = u^2 removes it.
double segment_length(const PotentialSystem& sys, const Vec& a, const Vec& b, bool from_wall, Vec* ga, Vec* gb) {
  const Rule& rule = gauss_rule();
  const Vec d = b - a;
  const int n = sys.dim;
  double L = 0.0;
  if (ga) *ga = Vec::Zero(n);
  if (gb) *gb = Vec::Zero(n);
  for (std::size_t k = 0; k < rule.x.size(); ++k) {
    double lam = rule.x[k], wt = rule.w[k];
    if (from_wall) {
      wt *= 2 * lam;
      lam *= lam;
    }
    const Vec x = a + lam * d;
    const double w = sys.energy - sys.potential(x);
    if (!(w > 0)) return kInf;
    const Mat g = sys.metric(x);
    const Vec gd = g * d;
    const double Qd = d.dot(gd);
    const double F = std::sqrt(0.5 * w * Qd);
    L += wt * F;
    if (!(ga || gb) || !(F > 0)) continue;
    Vec dx = -Qd * sys.dpotential(x);
    if (!sys.flat_metric) {
      const auto dg = metric_derivatives(sys, x);
      for (int l = 0; l < n; ++l) dx[l] += w * d.dot(dg[l] * d);
    }
    dx /= 4 * F;
    const Vec dd = w * gd / (2 * F);
    if (ga) *ga += wt * ((1 - lam) * dx - dd);
    if (gb) *gb += wt * (lam * dx + dd);
  }
  return L;
}

double polygon_energy(const PotentialSystem& sys, const std::vector<double>& tau, const std::vector<Vec>& x,
                      std::vector<Vec>* grad) {
  const int m = static_cast<int>(x.size()) - 1;
  double phi = 0.0;
  if (grad) grad->assign(m + 1, Vec::Zero(sys.dim));
  for (int i = 0; i < m; ++i) {
    Vec ga, gb;
    const double L = segment_length(sys, x[i], x[i + 1], i == 0, grad ? &ga : nullptr, grad ? &gb : nullptr);
    if (!std::isfinite(L)) return kInf;
    const double dt = tau[i + 1] - tau[i];
    phi += L * L / dt;
    if (grad) {
      (*grad)[i] += (2 * L / dt) * ga;
      (*grad)[i + 1] += (2 * L / dt) * gb;
    }
  }
  return phi;
}

// Seeds on the wall: ray casts from Q in n_start directions with a
// seed-dependent phase in the first coordinate plane.
std::vector<Vec> wall_seeds(const PotentialSystem& sys, const Vec& Q, int n_start, unsigned long long seed) {
  std::vector<Vec> seeds;
  const int n = sys.dim;
  if (n == 1) {
    for (double sgn : {1.0, -1.0}) seeds.push_back(ray_cast_boundary(sys, Q, Vec::Constant(1, sgn)));
    return seeds;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 2 * std::numbers::pi);
  std::normal_distribution<double> normal;
  const double phase = unif(rng);
  for (int k = 0; k < n_start; ++k) {
    Vec u = Vec::Zero(n);
    const double th = phase + 2 * std::numbers::pi * k / n_start;
    u[0] = std::cos(th);
    u[1] = std::sin(th);
    // Higher dimensions get a random tilt so seeds are not confined to a plane.
    for (int i = 2; i < n; ++i) u[i] = 0.5 * normal(rng);
    u.normalize();
    try {
      seeds.push_back(ray_cast_boundary(sys, Q, u));
    } catch (const NumericalError&) {
    }
  }
  return seeds;
}

double sup_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) out = std::max(out, (a[i] - b[i]).lpNorm<Eigen::Infinity>());
  return out;
}

void judge_uniqueness(DistanceResult& res, const DistanceOptions& opts) {
  int best = -1;
  for (std::size_t i = 0; i < res.candidates.size(); ++i) {
    if (res.candidates[i].converged && (best < 0 || res.candidates[i].value < res.candidates[best].value)) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) return;
  res.spread = kInf;
  res.distinct = 0;
  for (std::size_t i = 0; i < res.candidates.size(); ++i) {
    const auto& c = res.candidates[i];
    if (!c.converged || static_cast<int>(i) == best) continue;
    if (sup_distance(c.samples, res.candidates[best].samples) < opts.separation) continue;
    const double gap = c.value - res.candidates[best].value;
    res.spread = std::min(res.spread, gap);
    if (gap <= opts.tol_unique) ++res.distinct;
  }
  res.unique = res.distinct == 0;
  if (!std::isfinite(res.spread)) res.spread = 0.0;
}

void attach_geodesic(const PotentialSystem& sys, const Vec& Q, DistanceResult& res, const DistanceOptions& opts) {
  if (res.value <= 0) return;
  JacobiGeodesic geo = boundary_start(sys, res.start, res.value);
  const double t = geo.time_at_arc(geo.length());
  const TrajectoryPoint tp = geo.lift->at(t);
  res.time = t;
  res.velocity = tp.v;
  res.endpoint_error = (tp.q - Q).norm();
  if (opts.build_geodesic) res.minimizer = std::move(geo);
}

bool on_or_outside_wall(const PotentialSystem& sys, const Vec& Q) {
  return sys.potential(Q) >= sys.energy - ProjectionOptions{}.tol_proj;
}

DistanceResult wall_result(const Vec& Q, DistanceBackend backend) {
  DistanceResult r;
  r.backend = backend;
  r.value = 0.0;
  r.start = Q;
  r.velocity = Vec::Zero(Q.size());
  return r;
}

void check_query(const PotentialSystem& sys, const Vec& Q) {
  if (Q.size() != sys.dim) throw NumericalError(ErrorCode::invalid_input, "query point has the wrong dimension");
  sys.require_in_box(Q);
  if (sys.potential(Q) > sys.energy + ProjectionOptions{}.tol_proj) {
    throw NumericalError(ErrorCode::domain, "query point lies outside the potential well");
  }
}

struct VariationalRun {
  DiscretizedCurve curve;
  bool converged = false;
  int iterations = 0;
};

VariationalRun optimize_curve(const PotentialSystem& sys, DiscretizedCurve curve, const DistanceOptions& opts) {
  const int n = sys.dim;
  const int m = static_cast<int>(curve.x.size()) - 1;
  const int nz = (n - 1) + (m - 1) * n;
  VariationalRun run;
  Mat T = boundary_tangent_basis(sys, curve.x[0]);
  auto reduced_gradient = [&](const std::vector<Vec>& x, const Mat& tan, Vec& g) -> double {
    std::vector<Vec> gr;
    const double phi = polygon_energy(sys, curve.tau, x, &gr);
    g.resize(nz);
    if (n > 1) g.head(n - 1) = tan.transpose() * gr[0];
    for (int i = 1; i < m; ++i) g.segment((n - 1) + (i - 1) * n, n) = gr[i];
    return phi;
  };
  auto apply_step = [&](const std::vector<Vec>& x, const Mat& tan, const Vec& z, std::vector<Vec>& out) -> bool {
    out = x;
    if (n > 1) {
      try {
        out[0] = project_to_boundary(sys, x[0] + tan * z.head(n - 1));
      } catch (const NumericalError&) {
        return false;
      }
    }
    for (int i = 1; i < m; ++i) {
      out[i] = x[i] + z.segment((n - 1) + (i - 1) * n, n);
      if (!sys.domain_box.contains(out[i]) || !(sys.potential(out[i]) < sys.energy)) return false;
    }
    return true;
  };
  // Node index of reduced coordinate j (node 0 holds the chart coordinates).
  auto node_of = [&](int j) { return j < n - 1 ? 0 : 1 + (j - (n - 1)) / n; };

  std::vector<Vec> x = curve.x;
  Vec g;
  double phi = reduced_gradient(x, T, g);
  if (!std::isfinite(phi)) return run;
  double mu = 1e-6 * std::max(phi, 1e-12);
  // Runs pinned against the wall stop decreasing long before max_iter; give
  // up once ten iterations in a row gain almost nothing.
  double window_phi = phi;
  for (int it = 0; it < opts.max_iter; ++it) {
    run.iterations = it;
    if (it > 0 && it % 10 == 0) {
      if (window_phi - phi <= 1e-11 * std::max(phi, 1e-300)) break;
      window_phi = phi;
    }
    if (g.lpNorm<Eigen::Infinity>() <= opts.tol_opt) {
      run.converged = true;
      break;
    }
    // Hessian of the reduced gradient by central differences, three colours
    // per component because segments only couple neighbouring nodes.
    Mat H = Mat::Zero(nz, nz);
    double scale = 0.0;
    for (const Vec& xi : x) scale = std::max(scale, xi.norm());
    const double eps = 1e-5 * (1.0 + scale);
    for (int colour = 0; colour < 3; ++colour) {
      for (int comp = 0; comp < n; ++comp) {
        Vec dz = Vec::Zero(nz);
        std::vector<int> members;
        for (int j = 0; j < nz; ++j) {
          const int node = node_of(j);
          const int c = node == 0 ? j : (j - (n - 1)) % n;
          if (node % 3 == colour && c == comp) {
            dz[j] = eps;
            members.push_back(j);
          }
        }
        if (members.empty()) continue;
        std::vector<Vec> xp, xm;
        Vec gp, gm;
        if (!apply_step(x, T, dz, xp) || !apply_step(x, T, -dz, xm)) {
          // Fall back to one-sided differences near the wall of the well.
          if (!apply_step(x, T, dz, xp)) continue;
          reduced_gradient(xp, T, gp);
          const Vec col = (gp - g) / eps;
          for (int j : members) {
            for (int r = 0; r < nz; ++r) {
              if (std::abs(node_of(r) - node_of(j)) <= 1) H(r, j) = col[r];
            }
          }
          continue;
        }
        reduced_gradient(xp, T, gp);
        reduced_gradient(xm, T, gm);
        const Vec col = (gp - gm) / (2 * eps);
        for (int j : members) {
          for (int r = 0; r < nz; ++r) {
            if (std::abs(node_of(r) - node_of(j)) <= 1) H(r, j) = col[r];
          }
        }
      }
    }
    H = 0.5 * (H + H.transpose());
    bool accepted = false;
    for (int tries = 0; tries < 40; ++tries) {
      const Mat K = H + mu * Mat::Identity(nz, nz);
      Eigen::LLT<Mat> llt(K);
      if (llt.info() != Eigen::Success) {
        mu = std::max(mu * 10, 1e-12);
        continue;
      }
      const Vec step = -llt.solve(g);
      std::vector<Vec> xn;
      if (apply_step(x, T, step, xn)) {
        const Mat Tn = n > 1 ? boundary_tangent_basis(sys, xn[0]) : Mat(Mat::Zero(1, 0));
        Vec gn;
        const double phin = reduced_gradient(xn, Tn, gn);
        if (std::isfinite(phin) && phin <= phi + 1e-15 * std::abs(phi)) {
          x = std::move(xn);
          T = Tn;
          g = gn;
          const bool tiny = phi - phin <= 1e-15 * phi;
          phi = phin;
          mu = std::max(mu / 3, 1e-14 * std::max(phi, 1e-12));
          accepted = true;
          if (tiny && g.lpNorm<Eigen::Infinity>() <= 1e2 * opts.tol_opt) run.converged = true;
          break;
        }
      }
      mu = std::max(mu * 4, 1e-12);
    }
    if (run.converged) break;
    if (!accepted) break;
  }
  if (!run.converged && g.lpNorm<Eigen::Infinity>() <= opts.tol_opt) run.converged = true;
  curve.x = x;
  curve.value = phi;
  run.curve = std::move(curve);
  return run;
}

}  // namespace

const char* to_string(DistanceBackend b) { return b == DistanceBackend::shooting ? "shooting" : "variational"; }

DistanceBackend parse_distance_backend(const std::string& name) {
  if (name == "variational") return DistanceBackend::variational;
  if (name == "shooting") return DistanceBackend::shooting;
  throw UsageError("unknown distance backend '" + name + "' (expected variational or shooting)");
}

DiscretizedCurve initial_curve(const PotentialSystem& sys, const Vec& wall_point, const Vec& Q, int segments) {
  DiscretizedCurve c;
  for (int i = 0; i <= segments; ++i) {
    const double tau = static_cast<double>(i) / segments;
    c.tau.push_back(tau);
    // Equal g*-length along a straight ray needs lambda ~ tau^{2/3} at the wall.
    c.x.push_back(wall_point + std::pow(tau, 2.0 / 3.0) * (Q - wall_point));
  }
  c.x.back() = Q;
  c.value = discrete_energy(sys, c);
  return c;
}

double discrete_energy(const PotentialSystem& sys, const DiscretizedCurve& curve) {
  return polygon_energy(sys, curve.tau, curve.x, nullptr);
}

DistanceResult minimize_variational(const PotentialSystem& sys, const Vec& Q, const DiscretizedCurve& init,
                                    const DistanceOptions& opts) {
  check_query(sys, Q);
  if (on_or_outside_wall(sys, Q)) return wall_result(Q, DistanceBackend::variational);
  const VariationalRun run = optimize_curve(sys, init, opts);
  if (!run.converged) {
    throw NumericalError(ErrorCode::stall, "variational minimization stalled after " +
                                               std::to_string(run.iterations) + " iterations");
  }
  DistanceResult res;
  res.backend = DistanceBackend::variational;
  res.curve = run.curve;
  res.value = std::sqrt(run.curve.value);
  res.start = run.curve.x.front();
  res.iterations = run.iterations;
  DistanceCandidate c;
  c.value = res.value;
  c.start = res.start;
  c.converged = true;
  c.samples = run.curve.x;
  res.candidates.push_back(c);
  attach_geodesic(sys, Q, res, opts);
  return res;
}

DistanceResult minimize_variational(const PotentialSystem& sys, const Vec& Q, const DistanceOptions& opts) {
  check_query(sys, Q);
  if (on_or_outside_wall(sys, Q)) return wall_result(Q, DistanceBackend::variational);
  DistanceResult res;
  res.backend = DistanceBackend::variational;
  int best = -1;
  std::vector<VariationalRun> runs;
  for (const Vec& seed : wall_seeds(sys, Q, opts.n_start, opts.seed)) {
    VariationalRun run;
    try {
      run = optimize_curve(sys, initial_curve(sys, seed, Q, opts.nodes), opts);
    } catch (const NumericalError&) {
      continue;
    }
    DistanceCandidate c;
    c.converged = run.converged;
    c.value = std::sqrt(run.curve.value);
    c.start = run.curve.x.empty() ? seed : run.curve.x.front();
    c.samples = run.curve.x;
    res.candidates.push_back(c);
    runs.push_back(run);
    if (c.converged && (best < 0 || c.value < res.candidates[best].value)) best = static_cast<int>(runs.size()) - 1;
  }
  if (best < 0) throw NumericalError(ErrorCode::stall, "no multistart run of the variational backend converged");
  res.curve = runs[best].curve;
  res.value = res.candidates[best].value;
  res.start = res.candidates[best].start;
  res.iterations = runs[best].iterations;
  judge_uniqueness(res, opts);
  attach_geodesic(sys, Q, res, opts);
  return res;
}

namespace {

struct Shot {
  std::shared_ptr<const NaturalTrajectory> lift;
  Vec start;
};

Shot fire(const PotentialSystem& sys, const Vec& x0, double t_end) {
  DynamicsOptions dyn;
  Shot s;
  s.start = x0;
  s.lift = std::make_shared<NaturalTrajectory>(integrate_natural(sys, x0, Vec::Zero(sys.dim), t_end, dyn));
  return s;
}

// First time the orbit from x0 comes closest to Q before it brakes again.
double closest_time(const PotentialSystem& sys, const Vec& x0, const Vec& Q, double horizon) {
  DynamicsOptions dyn;
  dyn.t_max = horizon;
  std::shared_ptr<const NaturalTrajectory> traj;
  try {
    traj = std::make_shared<NaturalTrajectory>(shoot_brake_orbit(sys, x0, dyn).trajectory);
  } catch (const NumericalError& e) {
    if (e.code() != ErrorCode::no_brake) throw;
    traj = std::make_shared<NaturalTrajectory>(integrate_natural(sys, x0, Vec::Zero(sys.dim), horizon, dyn));
  }
  double best_t = 0.5 * traj->t_end(), best = kInf;
  constexpr int samples = 400;
  for (int i = 1; i <= samples; ++i) {
    const double t = traj->t_end() * i / samples;
    const double d = (traj->at(t).q - Q).norm();
    if (d < best) {
      best = d;
      best_t = t;
    }
  }
  return best_t;
}

struct ShotRun {
  bool converged = false;
  Vec start;
  double t = 0.0;
  double value = 0.0;
  Vec velocity;
  std::shared_ptr<const NaturalTrajectory> lift;
};

ShotRun solve_shot(const PotentialSystem& sys, const Vec& Q, Vec x0, const DistanceOptions& opts) {
  const int n = sys.dim;
  ShotRun out;
  double t = closest_time(sys, x0, Q, opts.horizon);
  double mu = 1e-3;
  auto residual_at = [&](const Vec& start, double time, Shot& shot) {
    shot = fire(sys, start, time);
    return Vec(shot.lift->at(time).q - Q);
  };
  Shot shot;
  Vec r = residual_at(x0, t, shot);
  const double tol = opts.tol_hit * (1.0 + Q.norm());
  for (int it = 0; it < opts.max_iter && r.norm() > tol; ++it) {
    const Mat T = n > 1 ? boundary_tangent_basis(sys, x0) : Mat(Mat::Zero(n, 0));
    Mat J(n, n);
    J.col(n - 1) = shot.lift->at(t).v;
    for (int j = 0; j < n - 1; ++j) {
      const double h = 1e-7;
      const Vec xp = project_to_boundary(sys, x0 + h * T.col(j));
      const Vec xm = project_to_boundary(sys, x0 - h * T.col(j));
      Shot sp, sm;
      J.col(j) = (residual_at(xp, t, sp) - residual_at(xm, t, sm)) / (2 * h);
    }
    bool accepted = false;
    for (int tries = 0; tries < 30; ++tries) {
      const Mat K = J.transpose() * J + mu * Mat::Identity(n, n);
      const Vec step = -K.ldlt().solve(J.transpose() * r);
      const double tn = t + step[n - 1];
      if (!(tn > 0)) {
        mu *= 4;
        continue;
      }
      Vec xn = x0;
      try {
        if (n > 1) xn = project_to_boundary(sys, x0 + T * step.head(n - 1));
        Shot sn;
        const Vec rn = residual_at(xn, tn, sn);
        if (rn.norm() < r.norm()) {
          x0 = xn;
          t = tn;
          r = rn;
          shot = sn;
          mu = std::max(mu / 5, 1e-15);
          accepted = true;
          break;
        }
      } catch (const NumericalError&) {
      }
      mu *= 4;
    }
    if (!accepted) break;
  }
  if (r.norm() > tol) return out;
  // A hit after the orbit has braked again would touch the wall in between.
  DynamicsOptions dyn;
  dyn.t_max = t + 1.0;
  try {
    if (shoot_brake_orbit(sys, x0, dyn).half_period < t) return out;
  } catch (const NumericalError& e) {
    if (e.code() != ErrorCode::no_brake) throw;
  }
  out.converged = true;
  out.start = x0;
  out.t = t;
  const TrajectoryPoint tp = shot.lift->at(t);
  out.value = tp.s;
  out.velocity = tp.v;
  out.lift = shot.lift;
  return out;
}

}  // namespace

DistanceResult minimize_shooting(const PotentialSystem& sys, const Vec& Q, const DistanceOptions& opts) {
  check_query(sys, Q);
  if (on_or_outside_wall(sys, Q)) return wall_result(Q, DistanceBackend::shooting);
  DistanceResult res;
  res.backend = DistanceBackend::shooting;
  std::vector<ShotRun> runs;
  int best = -1;
  for (const Vec& seed : wall_seeds(sys, Q, opts.n_start, opts.seed)) {
    ShotRun run;
    try {
      run = solve_shot(sys, Q, seed, opts);
    } catch (const NumericalError&) {
      continue;
    }
    if (!run.converged) continue;
    DistanceCandidate c;
    c.converged = true;
    c.value = run.value;
    c.start = run.start;
    for (int j = 0; j <= 16; ++j) c.samples.push_back(run.lift->at(run.lift->time_at_arc(run.value * j / 16)).q);
    res.candidates.push_back(c);
    runs.push_back(run);
    if (best < 0 || run.value < runs[best].value) best = static_cast<int>(runs.size()) - 1;
  }
  if (best < 0) throw NumericalError(ErrorCode::miss, "no boundary start hits the query point");
  res.value = runs[best].value;
  res.start = runs[best].start;
  res.time = runs[best].t;
  res.velocity = runs[best].velocity;
  judge_uniqueness(res, opts);
  if (opts.build_geodesic) {
    JacobiGeodesic geo = boundary_start(sys, res.start, res.value);
    res.endpoint_error = (geo.lift->at(geo.time_at_arc(geo.length())).q - Q).norm();
    res.minimizer = std::move(geo);
  }
  return res;
}

DistanceResult distance(const PotentialSystem& sys, const Vec& Q, DistanceBackend backend,
                        const DistanceOptions& opts) {
  return backend == DistanceBackend::shooting ? minimize_shooting(sys, Q, opts) : minimize_variational(sys, Q, opts);
}

GradientResult grad_dV(const PotentialSystem& sys, const Vec& Q, DistanceBackend backend,
                       const DistanceOptions& opts) {
  GradientResult out;
  out.distance = distance(sys, Q, backend, opts);
  if (!out.distance.unique) {
    out.warning = "minimizer is not unique; d_V is not differentiable here";
    return out;
  }
  if (!(out.distance.value > 0)) {
    out.warning = "query point is on the wall";
    return out;
  }
  // The lift velocity at Q is (E - V) times the unit-speed tangent, so the
  // gradient (E - V) / (2 d) * gamma_Q'(1) with gamma_Q'(1) = d * tangent is v / 2.
  out.gradient = 0.5 * out.distance.velocity;
  out.gradient_psi = out.distance.value * out.distance.velocity;
  out.defined = true;
  return out;
}

DistanceField distance_field(const PotentialSystem& sys, const GridSpec& grid, DistanceBackend backend,
                             const DistanceOptions& opts, int threads) {
  if (grid.nx < 1 || grid.ny < 1) throw UsageError("grid needs at least one cell per axis");
  if (grid.lo.size() < std::min(sys.dim, 2) || grid.hi.size() < std::min(sys.dim, 2)) {
    throw UsageError("grid corners need one entry per plotted coordinate");
  }
  DistanceField field;
  field.grid = grid;
  const int ny = sys.dim == 1 ? 1 : grid.ny;
  field.grid.ny = ny;
  field.cells.resize(static_cast<std::size_t>(grid.nx) * ny);
  parallel_for(static_cast<int>(field.cells.size()), threads, [&](int idx) {
    const int ix = idx % grid.nx, iy = idx / grid.nx;
    FieldCell& cell = field.cells[idx];
    cell.q = Vec::Zero(sys.dim);
    cell.q[0] = grid.lo[0] + (grid.hi[0] - grid.lo[0]) * (ix + 0.5) / grid.nx;
    if (sys.dim > 1) cell.q[1] = grid.lo[1] + (grid.hi[1] - grid.lo[1]) * (iy + 0.5) / ny;
    if (!(sys.potential(cell.q) < sys.energy)) {
      cell.exterior = true;
      return;
    }
    DistanceOptions local = opts;
    local.build_geodesic = false;
    local.seed = opts.seed + 0x9E3779B97F4A7C15ull * static_cast<unsigned long long>(idx + 1);
    try {
      const DistanceResult r = distance(sys, cell.q, backend, local);
      cell.ok = true;
      cell.value = r.value;
      cell.unique = r.unique;
      if (r.velocity.size() && r.velocity.norm() > 0) cell.direction = r.velocity.normalized();
      if (r.unique && r.value > 0) cell.gradient = 0.5 * r.velocity;
    } catch (const NumericalError& e) {
      cell.error = e.what();
    }
  });
  return field;
}

}  // namespace brakeorbit
