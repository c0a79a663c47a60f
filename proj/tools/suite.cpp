#include "suite.hpp"

#include "brakeorbit/distance.hpp"
#include "brakeorbit/errors.hpp"
#include "brakeorbit/morse.hpp"
#include "brakeorbit/potentials.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace brakeorbit::suite {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kQuarter = kPi / 4.0;
constexpr double kCenterArc = kPi / 8.0;
constexpr double kMitArc = 0.9 * kQuarter;
constexpr double kAnisoArc = 0.75;

Vec axis(int dim) {
  Vec x = Vec::Zero(dim);
  x[0] = 1.0;
  return x;
}

Check le(int c, std::string name, double value, double threshold, std::string detail = {}) {
  return {c, std::move(name), value, threshold, "<=", std::isfinite(value) && value <= threshold, std::move(detail)};
}

Check gt(int c, std::string name, double value, double threshold, std::string detail = {}) {
  return {c, std::move(name), value, threshold, ">", std::isfinite(value) && value > threshold, std::move(detail)};
}

Check eq(int c, std::string name, double value, double expected, std::string detail = {}) {
  return {c, std::move(name), value, expected, "==", value == expected, std::move(detail)};
}

Check flag(int c, std::string name, bool ok, std::string detail = {}) {
  return {c, std::move(name), ok ? 1.0 : 0.0, 1.0, "==", ok, std::move(detail)};
}

// A failure inside a check is reported as a failed check, not an abort.
void guarded(std::vector<Check>& out, int c, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    out.push_back({c, name, NAN, NAN, "error", false, e.what()});
  }
}

struct Case {
  std::string name;
  PotentialSystem sys;
  double a;
};

std::vector<Case> acceptance_cases() {
  return {{"harmonic-1d-crossing", make_harmonic(1, 0.5), kQuarter},
          {"harmonic-2d-radial", make_harmonic(2, 0.5), kMitArc},
          {"harmonic-3d-radial", make_harmonic(3, 0.5), kMitArc},
          {"anisotropic-2d-axis", make_anisotropic(2, 0.5, {1.0, 2.0}), kAnisoArc}};
}

MorseOptions morse_options(const SuiteOptions& opts) {
  MorseOptions m;
  m.mesh.cells = opts.cells;
  m.threads = opts.threads;
  return m;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

std::vector<Check> brake_orbit_checks() {
  std::vector<Check> out;
  guarded(out, 1, "harmonic-1d half period", [&] {
    const auto sys = make_harmonic(1, 0.5);
    const auto orbit = shoot_brake_orbit(sys, axis(1));
    out.push_back(le(1, "harmonic-1d |T - pi|", std::abs(orbit.half_period - kPi), 1e-6));
    double err = 0.0;
    const int n = 2000;
    for (int k = 0; k <= n; ++k) {
      const double t = std::min(orbit.trajectory.t_end(), orbit.half_period * k / n);
      err = std::max(err, std::abs(orbit.trajectory.at(t).q[0] - std::cos(t)));
    }
    out.push_back(le(1, "harmonic-1d sup |q - cos t|", err, 1e-6));
  });
  return out;
}

std::vector<Check> round_trip_checks() {
  std::vector<Check> out;
  guarded(out, 2, "orbit round trip", [&] {
    const auto sys = make_harmonic(1, 0.5);
    const auto orbit = shoot_brake_orbit(sys, axis(1));
    const auto geo = geodesic_from_orbit(sys, orbit.trajectory);
    const auto back = orbit_from_geodesic(sys, geo);
    double err = 0.0;
    for (std::size_t i = 0; i < back.times.size(); ++i) {
      const double t = std::min(back.times[i], orbit.trajectory.t_end());
      err = std::max(err, (back.q[i] - orbit.trajectory.at(t).q).norm());
    }
    const int n = 2000;
    for (int k = 0; k <= n; ++k) {
      const double t = std::min({back.t_end(), orbit.trajectory.t_end(), orbit.half_period * k / n});
      err = std::max(err, (back.at(t).q - orbit.trajectory.at(t).q).norm());
    }
    out.push_back(le(2, "orbit->geodesic->orbit sup error", err, 1e-6));
    out.push_back(le(2, "|g*-length of half orbit - pi/4|", std::abs(geo.length() - kQuarter), 1e-5));
  });
  return out;
}

std::vector<Check> asymptotic_checks() {
  std::vector<Check> out;
  GeodesicGridOptions fine;
  fine.first_cell = 1e-9;
  fine.uniform_cells = 400;
  struct Geo {
    std::string name;
    PotentialSystem sys;
    Vec x0;
    double a;
  };
  Vec off(2);
  off << 0.8, 0.3;
  off = project_to_boundary(make_anisotropic(2, 0.5), off);
  const std::vector<Geo> geos = {{"harmonic-1d", make_harmonic(1, 0.5), axis(1), kCenterArc},
                                 {"harmonic-2d", make_harmonic(2, 0.5), axis(2), kCenterArc},
                                 {"anisotropic-2d off-axis", make_anisotropic(2, 0.5), off, 0.4}};
  for (const auto& g : geos) {
    guarded(out, 3, g.name + " asymptotics", [&] {
      const auto geo = boundary_start(g.sys, g.x0, g.a);
      const auto geo_fine = boundary_start(g.sys, g.x0, g.a, {}, fine);
      const auto f1 = asymptotic_exponents(g.sys, geo);
      const auto f2 = asymptotic_exponents(g.sys, geo_fine);
      out.push_back(le(3, g.name + " |alpha_EV - 2/3|", std::abs(f1.alpha_ev - 2.0 / 3.0), 0.05,
                       "alpha_EV=" + fmt(f1.alpha_ev)));
      out.push_back(le(3, g.name + " |alpha_speed + 1/3|", std::abs(f1.alpha_speed + 1.0 / 3.0), 0.05,
                       "alpha_speed=" + fmt(f1.alpha_speed)));
      // radial geodesics have a vanishing ratio; compare above a roundoff floor
      const double change = std::abs(f1.sigma_ratio - f2.sigma_ratio);
      out.push_back(le(3, g.name + " sigma ratio change under refinement", change,
                       0.1 * std::max(f1.sigma_ratio, f2.sigma_ratio) + 1e-9,
                       "ratio=" + fmt(f1.sigma_ratio) + " refined=" + fmt(f2.sigma_ratio)));
    });
  }
  return out;
}

std::vector<Check> center_distance_checks(const SuiteOptions& opts) {
  std::vector<Check> out;
  guarded(out, 4, "d_V(0) on the 1D harmonic well", [&] {
    const auto sys = make_harmonic(1, 0.5);
    DistanceOptions d;
    d.seed = opts.seed;
    d.build_geodesic = false;
    const Vec Q = Vec::Zero(1);
    const double var = minimize_variational(sys, Q, d).value;
    const double shot = minimize_shooting(sys, Q, d).value;
    out.push_back(le(4, "variational |d_V(0) - pi/8|", std::abs(var - kCenterArc), 1e-4, "d_V=" + fmt(var)));
    out.push_back(le(4, "shooting |d_V(0) - pi/8|", std::abs(shot - kCenterArc), 1e-4, "d_V=" + fmt(shot)));
    out.push_back(le(4, "backend disagreement", std::abs(var - shot), 1e-4));
  });
  return out;
}

std::vector<Check> gradient_checks(const SuiteOptions& opts) {
  std::vector<Check> out;
  guarded(out, 5, "gradient formula vs finite differences", [&] {
    const auto sys = make_harmonic(2, 0.5);
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> u(-0.85, 0.85);
    DistanceOptions d;
    d.seed = opts.seed;
    d.build_geodesic = false;
    double worst = 0.0;
    int checked = 0, skipped = 0, drawn = 0;
    while (checked < opts.gradient_points && drawn++ < 100 * opts.gradient_points) {
      Vec P(2);
      P << u(rng), u(rng);
      if (P.norm() < 0.15 || P.norm() > 0.85) continue;
      const auto g = grad_dV(sys, P, DistanceBackend::shooting, d);
      if (!g.defined) {
        ++skipped;
        continue;
      }
      Vec fd(2);
      const double h = 1e-5;
      for (int i = 0; i < 2; ++i) {
        Vec a = P, b = P;
        a[i] += h;
        b[i] -= h;
        fd[i] = (minimize_shooting(sys, a, d).value - minimize_shooting(sys, b, d).value) / (2 * h);
      }
      worst = std::max(worst, (g.gradient - fd).norm() / fd.norm());
      ++checked;
    }
    out.push_back(le(5, "max relative gradient error over " + std::to_string(checked) + " points", worst, 1e-3,
                     std::to_string(skipped) + " non-unique points skipped"));
  });
  return out;
}

std::vector<Check> null_field_checks(const SuiteOptions& opts) {
  std::vector<Check> out;
  guarded(out, 6, "radial null field", [&] {
    const auto sys = make_harmonic(1, 0.5);
    const double a = kQuarter;
    const auto geo = boundary_start(sys, axis(1), a);
    const auto field = radial_gap_field(sys, geo);
    const double s_min = 1e-4 * a;
    std::vector<double> grid;
    const int n = 200;
    for (int i = 0; i <= n; ++i) grid.push_back(s_min + (a - 2 * s_min) * i / n);
    const auto sol = sample_field(sys, geo, field, grid);
    out.push_back(le(6, "Jacobi residual on [s_min, a - s_min]", sol.residual, 1e-5));

    const auto coarse = assemble_index_form(sys, geo, a, {opts.cells});
    std::vector<double> small(coarse.nodes_s.begin() + 1, coarse.nodes_s.begin() + 6);
    const auto nb = null_boundary_check(sys, geo, sample_field(sys, geo, field, small));
    out.push_back(le(6, "boundary condition residual", nb.residual, 1e-4, nb.inconclusive ? "inconclusive" : ""));

    const auto fine = assemble_index_form(sys, geo, a, {2 * opts.cells});
    auto worst = [](const std::vector<double>& v) {
      double m = 0.0;
      for (double x : v) m = std::max(m, x);
      return m;
    };
    const double c1 = worst(index_form_against_basis(sys, coarse, field));
    const double c2 = worst(index_form_against_basis(sys, fine, field));
    out.push_back(le(6, "max |I_a(xi, e)| / |e|", c1, 5e-3, "refined=" + fmt(c2)));
    out.push_back(flag(6, "decreasing under refinement", c2 < c1, fmt(c1) + " -> " + fmt(c2)));
  });
  return out;
}

std::vector<Check> positivity_checks(const SuiteOptions& opts) {
  std::vector<Check> out;
  for (const auto& c : acceptance_cases()) {
    guarded(out, 7, c.name + " positivity", [&] {
      const auto geo = boundary_start(c.sys, axis(c.sys.dim), c.a);
      const auto pos = small_interval_positivity(c.sys, geo, c.a, 16, morse_options(opts));
      double lmin = INFINITY;
      for (double l : pos.lambda_min) lmin = std::min(lmin, l);
      out.push_back(gt(7, c.name + " s_hat", pos.s_hat, 0.0));
      out.push_back(gt(7, c.name + " min eigenvalue below s_hat", lmin, 0.0, "s_hat=" + fmt(pos.s_hat)));
    });
  }
  return out;
}

struct MorseCase {
  Case c;
  MorseReport report;
};

std::vector<MorseCase> morse_cases(const SuiteOptions& opts, bool include_crossing) {
  std::vector<MorseCase> out;
  for (auto& c : acceptance_cases()) {
    if (!include_crossing && c.sys.dim == 1) continue;
    const auto geo = boundary_start(c.sys, axis(c.sys.dim), c.a);
    out.push_back({c, mit_verify(c.sys, geo, c.a, 64, morse_options(opts))});
  }
  return out;
}

std::vector<Check> mit_checks(const SuiteOptions& opts) {
  std::vector<Check> out;
  guarded(out, 8, "Morse index theorem", [&] {
    for (const auto& m : morse_cases(opts, false)) {
      const auto& r = m.report;
      const std::string n = m.c.name;
      out.push_back(flag(8, n + " mit consistent", r.mit == Consistency::consistent, to_string(r.mit)));
      out.push_back(eq(8, n + " index = multiplicity sum", r.index, r.multiplicity_sum));
      out.push_back(flag(8, n + " jumps equal nullities", r.scan.jumps_match_nullity));
      if (m.c.sys.dim == 2 && n.rfind("harmonic", 0) == 0) {
        out.push_back(eq(8, n + " index", r.index, 1));
        out.push_back(eq(8, n + " conjugate points", static_cast<double>(r.scan.points.size()), 1));
        if (!r.scan.points.empty()) {
          out.push_back(le(8, n + " |s* - pi/8|", std::abs(r.scan.points[0].s - kCenterArc), 1e-3,
                           "s*=" + fmt(r.scan.points[0].s)));
          out.push_back(eq(8, n + " multiplicity", r.scan.points[0].multiplicity, 1));
        }
      } else if (m.c.sys.dim == 3) {
        out.push_back(eq(8, n + " index", r.index, 2));
        out.push_back(eq(8, n + " conjugate points", static_cast<double>(r.scan.points.size()), 1));
        if (!r.scan.points.empty()) out.push_back(eq(8, n + " multiplicity", r.scan.points[0].multiplicity, 2));
      }
    }
  });
  return out;
}

std::vector<Check> monotone_checks(const SuiteOptions& opts) {
  std::vector<Check> out;
  guarded(out, 9, "staircase monotonicity", [&] {
    for (const auto& m : morse_cases(opts, true)) {
      out.push_back(flag(9, m.c.name + " staircase nondecreasing", m.report.scan.monotone));
      out.push_back(flag(9, m.c.name + " jumps equal nullities", m.report.scan.jumps_match_nullity));
    }
  });
  return out;
}

std::vector<Check> broken_checks(const SuiteOptions& opts) {
  std::vector<Check> out;
  for (const auto& c : acceptance_cases()) {
    if (c.sys.dim == 1) continue;
    guarded(out, 10, c.name + " broken Jacobi backend", [&] {
      const auto geo = boundary_start(c.sys, axis(c.sys.dim), c.a);
      const auto mc = morse_index(assemble_index_form(c.sys, geo, c.a, {opts.cells}));
      const auto br = broken_jacobi_index(c.sys, geo, c.a);
      out.push_back(eq(10, c.name + " broken index", br.index, mc.index));
      out.push_back(eq(10, c.name + " broken nullity", br.nullity, mc.nullity));
    });
  }
  return out;
}

}  // namespace

std::string criterion_title(int criterion) {
  switch (criterion) {
    case 1: return "brake orbit of the 1D harmonic well";
    case 2: return "Maupertuis round trip";
    case 3: return "boundary asymptotics";
    case 4: return "distance at the center of the 1D well";
    case 5: return "gradient formula";
    case 6: return "radial null Jacobi field";
    case 7: return "small-interval positivity";
    case 8: return "Morse index theorem";
    case 9: return "staircase monotonicity";
    case 10: return "broken Jacobi backend agreement";
    case 11: return "determinism of verify output";
    default: return "supporting invariants";
  }
}

std::vector<Check> run_criterion(int criterion, const SuiteOptions& opts) {
  switch (criterion) {
    case 1: return brake_orbit_checks();
    case 2: return round_trip_checks();
    case 3: return asymptotic_checks();
    case 4: return center_distance_checks(opts);
    case 5: return gradient_checks(opts);
    case 6: return null_field_checks(opts);
    case 7: return positivity_checks(opts);
    case 8: return mit_checks(opts);
    case 9: return monotone_checks(opts);
    case 10: return broken_checks(opts);
    default: throw UsageError("no criterion " + std::to_string(criterion));
  }
}

std::vector<Check> run_invariants(const SuiteOptions& opts) {
  std::vector<Check> out;
  guarded(out, 0, "orbit energy", [&] {
    const std::vector<std::pair<PotentialSystem, std::vector<double>>> wells = {
        {make_harmonic(1, 0.5), {1.0}},
        {make_anisotropic(2, 0.5), {0.45, 0.45}},
        {make_double_well(1, 0.5), {1.3}}};
    for (const auto& [sys, guess] : wells) {
      const Vec x0 = project_to_boundary(sys, Eigen::Map<const Vec>(guess.data(), sys.dim));
      const auto orbit = shoot_brake_orbit(sys, x0);
      out.push_back(le(0, sys.name + " orbit energy residual", orbit.trajectory.energy_residual, 1e-8));
    }
  });
  for (const auto& c : acceptance_cases()) {
    guarded(out, 0, c.name + " geodesic", [&] {
      const auto geo = boundary_start(c.sys, axis(c.sys.dim), c.a);
      out.push_back(le(0, c.name + " conservation residual", geo.conservation_residual, 1e-6));
      const auto d = assemble_index_form(c.sys, geo, c.a, {opts.cells});
      Eigen::LLT<Mat> llt(d.B);
      out.push_back(flag(0, c.name + " Gram matrix positive definite", llt.info() == Eigen::Success));
      out.push_back(le(0, c.name + " index form asymmetry", d.asymmetry, 1e-12 * d.A.norm()));
      std::mt19937_64 rng(opts.seed + 17);
      std::normal_distribution<double> nd;
      double worst = 0.0;
      for (int trial = 0; trial < 10; ++trial) {
        Vec coeffs(d.ndof);
        for (int i = 0; i < d.ndof; ++i) coeffs[i] = nd(rng);
        const double q = coeffs.dot(d.A * coeffs);
        worst = std::max(worst, std::abs(hessian_quadratic(c.sys, d, coeffs) - q) / std::abs(q));
      }
      out.push_back(le(0, c.name + " Hessian vs assembled form", worst, 1e-5));
    });
  }
  guarded(out, 0, "broken splitting", [&] {
    const auto sys = make_harmonic(2, 0.5);
    const auto geo = boundary_start(sys, axis(2), kMitArc);
    const auto br = broken_jacobi_index(sys, geo, kMitArc);
    out.push_back(le(0, "harmonic-2d-radial V+/V- orthogonality", broken_orthogonality(sys, geo, br), 1e-6));
  });
  guarded(out, 0, "distance invariants", [&] {
    const auto sys = make_anisotropic(2, 0.5, {1.0, 2.0});
    DistanceOptions d;
    d.seed = opts.seed;
    Vec Q(2);
    Q << 0.3, 0.2;
    const auto var = minimize_variational(sys, Q, d);
    const auto shot = minimize_shooting(sys, Q, d);
    out.push_back(le(0, "anisotropic backend disagreement", std::abs(var.value - shot.value),
                     1e-3 * (1 + var.value)));
    out.push_back(le(0, "minimizer conservation", shot.minimizer ? shot.minimizer->conservation_residual : NAN, 1e-5));
    d.nodes *= 2;
    d.build_geodesic = false;
    out.push_back(le(0, "polygon refinement change", std::abs(minimize_variational(sys, Q, d).value - var.value), 1e-4));
    const auto well = make_double_well(1, 0.5);
    Vec tie(1);
    tie << 0.95130484861375357498;
    out.push_back(flag(0, "double well tie point is non-unique", !minimize_shooting(well, tie, d).unique));
  });
  return out;
}

std::vector<Check> run_all(const SuiteOptions& opts) {
  std::vector<Check> out;
  for (int c = 1; c <= kCriteria; ++c) {
    auto part = run_criterion(c, opts);
    out.insert(out.end(), part.begin(), part.end());
  }
  auto inv = run_invariants(opts);
  out.insert(out.end(), inv.begin(), inv.end());
  return out;
}

}  // namespace brakeorbit::suite
