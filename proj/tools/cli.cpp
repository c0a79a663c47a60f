#include "cli.hpp"

#include "io.hpp"
#include "suite.hpp"

#include "brakeorbit/errors.hpp"
#include "brakeorbit/potentials.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <ostream>

namespace brakeorbit::cli {

namespace {

using io::json;

struct RunConfig {
  std::string potential = "harmonic";
  json potential_spec;  // set when the config file embeds the spec
  int dim = 1;
  double energy = 0.5;
  std::string metric;
  std::string out = ".";
  std::string format = "csv";
  std::string config;
  int threads = 1;
  unsigned long long seed = 0;

  std::string start;
  double arc = 0.0;
  int samples = 64;
  int cells = 160;
  double tol_null = 1e-6;
  bool skip_broken = false;

  std::string query;
  std::string backend = "variational";
  int nodes = 48;
  int n_start = 8;
  double tol_opt = 1e-8;
  double tol_unique = 1e-3;

  std::string grid = "21x21";
  std::string lo;
  std::string hi;

  int gradient_points = 20;
};

std::string fmt(double x, const char* spec = "%.9g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, x);
  return buf;
}

std::string vec_text(const Vec& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i], "%.6g");
  return s + ")";
}

void add_common(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--potential", cfg.potential, "builtin name (harmonic, anisotropic, double_well) or JSON spec path");
  sub->add_option("--dim", cfg.dim, "dimension for builtin potentials");
  sub->add_option("--energy", cfg.energy, "energy level E");
  sub->add_option("--metric", cfg.metric, "euclidean, exp_x1, quadratic_x1 or sphere");
  sub->add_option("--out", cfg.out, "output directory");
  sub->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--config", cfg.config, "JSON file with option values; flags take precedence");
  sub->add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed", cfg.seed, "multistart seed")->envname("BRAKEORBIT_SEED");
}

void add_distance_opts(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--backend", cfg.backend, "variational or shooting");
  sub->add_option("--nodes", cfg.nodes, "polygon segments of the variational backend")->check(CLI::PositiveNumber);
  sub->add_option("--n-start", cfg.n_start, "multistart seeds")->check(CLI::PositiveNumber);
  sub->add_option("--tol-opt", cfg.tol_opt, "optimizer tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--tol-unique", cfg.tol_unique, "uniqueness tolerance on the value spread")
      ->check(CLI::PositiveNumber);
}

std::string config_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_array()) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + config_text(x);
    return s;
  }
  return v.dump();
}

void apply_config(CLI::App* sub, RunConfig& cfg) {
  if (cfg.config.empty()) return;
  const json file = io::read_json_file(cfg.config);
  if (!file.is_object()) throw UsageError("config file must hold a JSON object");
  for (const auto& [key, value] : file.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    if (name == "config") continue;
    CLI::Option* opt = sub->get_option_no_throw("--" + name);
    if (!opt) throw UsageError("config key '" + key + "' is not an option of " + sub->get_name());
    if (opt->count() > 0) continue;
    if (name == "potential" && value.is_object()) {
      cfg.potential_spec = value;
      continue;
    }
    opt->add_result(config_text(value));
    opt->run_callback();
  }
}

PotentialSystem make_system(const RunConfig& cfg, const CLI::App* sub) {
  PotentialSystem sys;
  if (!cfg.potential_spec.is_null()) {
    sys = io::potential_from_json(cfg.potential_spec);
  } else if (cfg.potential.find(".json") != std::string::npos || std::filesystem::exists(cfg.potential)) {
    json spec = io::read_json_file(cfg.potential);
    // flags may override the energy of a spec file
    if (sub->get_option("--energy")->count() > 0) spec["energy"] = cfg.energy;
    sys = io::potential_from_json(spec);
    if (sub->get_option("--dim")->count() > 0 && cfg.dim != sys.dim) {
      throw UsageError("--dim disagrees with the dimension of the potential spec");
    }
  } else {
    sys = make_builtin(cfg.potential, cfg.dim, cfg.energy);
  }
  if (!cfg.metric.empty()) set_metric(sys, parse_metric_kind(cfg.metric));
  return sys;
}

Vec checked_vec(const std::string& text, int dim, const char* what) {
  const Vec v = io::parse_vec(text);
  if (v.size() != dim) {
    throw UsageError(std::string(what) + " needs " + std::to_string(dim) + " components");
  }
  return v;
}

// Boundary start: the given point projected onto the wall, or the wall point
// on the positive first axis.
Vec wall_start(const PotentialSystem& sys, const RunConfig& cfg) {
  if (!cfg.start.empty()) {
    const Vec x = checked_vec(cfg.start, sys.dim, "--start");
    if (std::abs(sys.gap(x)) > sys.reg_band) {
      throw UsageError("--start " + cfg.start + " is not near the level set V = E");
    }
    return project_to_boundary(sys, x);
  }
  const Vec origin = Vec::Zero(sys.dim);
  if (!(sys.potential(origin) < sys.energy)) throw UsageError("--start is required for this potential");
  Vec e = Vec::Zero(sys.dim);
  e[0] = 1.0;
  return ray_cast_boundary(sys, origin, e);
}

DistanceOptions distance_options(const RunConfig& cfg) {
  DistanceOptions d;
  d.nodes = cfg.nodes;
  d.n_start = cfg.n_start;
  d.tol_opt = cfg.tol_opt;
  d.tol_unique = cfg.tol_unique;
  d.seed = cfg.seed;
  return d;
}

struct Output {
  std::filesystem::path dir;
  bool csv = true;
  void json_file(const std::string& name, const json& j) const {
    io::write_text((dir / name).string(), j.dump(2) + "\n");
  }
  void csv_file(const std::string& name, const std::string& text) const {
    if (csv) io::write_text((dir / name).string(), text);
  }
};

int cmd_brake_orbit(const RunConfig& cfg, const PotentialSystem& sys, const Output& o, std::ostream& out) {
  const Vec x0 = wall_start(sys, cfg);
  const BrakeOrbit orbit = shoot_brake_orbit(sys, x0);
  o.json_file("brake_orbit.json", io::trajectory_json(sys, orbit));
  o.csv_file("brake_orbit.csv", io::trajectory_csv(sys, orbit.trajectory));
  out << "T=" << fmt(orbit.half_period, "%.9f") << " start=" << vec_text(orbit.start)
      << " end=" << vec_text(orbit.end) << " energy_residual=" << fmt(orbit.trajectory.energy_residual, "%.2e")
      << "\n";
  return 0;
}

int cmd_geodesic(const RunConfig& cfg, const PotentialSystem& sys, const Output& o, std::ostream& out) {
  if (!(cfg.arc > 0)) throw UsageError("--arc must be positive");
  const Vec x0 = wall_start(sys, cfg);
  const JacobiGeodesic geo = boundary_start(sys, x0, cfg.arc);
  std::optional<AsymptoticFit> fit;
  try {
    fit = asymptotic_exponents(sys, geo);
  } catch (const NumericalError&) {
  }
  json j = io::geodesic_json(sys, geo, fit ? &*fit : nullptr);
  if (!o.csv) {
    json samples = json::array();
    for (std::size_t i = 0; i < geo.s.size(); ++i) {
      samples.push_back({{"s", geo.s[i]}, {"x", io::to_json(geo.points[i])}});
    }
    j["samples"] = samples;
  }
  o.json_file("geodesic.json", j);
  o.csv_file("geodesic.csv", io::geodesic_csv(sys, geo));
  out << "length=" << fmt(geo.length()) << " end=" << vec_text(geo.points.back())
      << " conservation=" << fmt(geo.conservation_residual, "%.2e");
  if (fit) out << " alpha_EV=" << fmt(fit->alpha_ev, "%.4f") << " alpha_speed=" << fmt(fit->alpha_speed, "%.4f");
  if (geo.truncated) out << " truncated";
  out << "\n";
  return 0;
}

int cmd_distance(const RunConfig& cfg, const PotentialSystem& sys, const Output& o, std::ostream& out) {
  if (cfg.query.empty()) throw UsageError("--query is required");
  const Vec Q = checked_vec(cfg.query, sys.dim, "--query");
  if (!sys.domain_box.contains(Q) || sys.potential(Q) > sys.energy) {
    throw UsageError("query point " + cfg.query + " lies outside the potential well");
  }
  const auto backend = parse_distance_backend(cfg.backend);
  const GradientResult g = grad_dV(sys, Q, backend, distance_options(cfg));
  json j = io::distance_json(Q, g.distance, &g);
  j["seed"] = cfg.seed;
  if (!o.csv) {
    json curve = json::array();
    if (!g.distance.curve.x.empty()) {
      for (const auto& x : g.distance.curve.x) curve.push_back(io::to_json(x));
    }
    j["curve"] = curve;
  }
  o.json_file("distance.json", j);
  o.csv_file("distance_curve.csv", io::curve_csv(g.distance));
  out << "d_V=" << fmt(g.distance.value, "%.10f") << " backend=" << to_string(backend)
      << " unique=" << (g.distance.unique ? "yes" : "no") << " start=" << vec_text(g.distance.start);
  if (g.defined) out << " grad=" << vec_text(g.gradient);
  out << "\n";
  return 0;
}

GridSpec parse_grid(const RunConfig& cfg, const PotentialSystem& sys) {
  GridSpec grid;
  const auto x = cfg.grid.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument("x");
    std::size_t used = 0;
    grid.nx = std::stoi(cfg.grid.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("nx");
    grid.ny = std::stoi(cfg.grid.substr(x + 1), &used);
    if (used != cfg.grid.size() - x - 1) throw std::invalid_argument("ny");
  } catch (const std::exception&) {
    throw UsageError("--grid must look like NxN, got '" + cfg.grid + "'");
  }
  if (grid.nx < 1 || grid.ny < 1) throw UsageError("--grid needs positive sizes");
  const int k = std::min(sys.dim, 2);
  grid.lo = cfg.lo.empty() ? Vec(sys.domain_box.lo.head(k)) : checked_vec(cfg.lo, k, "--lo");
  grid.hi = cfg.hi.empty() ? Vec(sys.domain_box.hi.head(k)) : checked_vec(cfg.hi, k, "--hi");
  return grid;
}

int cmd_field(const RunConfig& cfg, const PotentialSystem& sys, const Output& o, std::ostream& out) {
  const GridSpec grid = parse_grid(cfg, sys);
  const auto backend = parse_distance_backend(cfg.backend);
  const DistanceField field = distance_field(sys, grid, backend, distance_options(cfg), cfg.threads);
  json j = io::field_json(field);
  j["seed"] = cfg.seed;
  if (!o.csv) {
    json cells = json::array();
    for (const auto& c : field.cells) {
      if (c.exterior || !c.ok) continue;
      cells.push_back({{"q", io::to_json(c.q)},
                       {"d_V", c.value},
                       {"unique", c.unique},
                       {"gradient", c.gradient.size() ? io::to_json(c.gradient) : json(nullptr)}});
    }
    j["cell_values"] = cells;
  }
  o.json_file("distance_field.json", j);
  o.csv_file("distance_field.csv", io::field_csv(field));
  out << "cells=" << field.cells.size() << " solved=" << j["solved"].get<int>() << " unique=" << j["unique"].get<int>()
      << " failed=" << j["failed"].get<int>();
  if (!j["max"].is_null()) out << " max_d_V=" << fmt(j["max"].get<double>());
  out << "\n";
  return j["failed"].get<int>() > 0 ? 2 : 0;
}

int cmd_morse(const RunConfig& cfg, const PotentialSystem& sys, const Output& o, std::ostream& out) {
  if (!(cfg.arc > 0)) throw UsageError("--arc must be positive");
  if (cfg.samples < 2) throw UsageError("--samples must be at least 2");
  if (cfg.cells < 4) throw UsageError("--cells must be at least 4");
  const Vec x0 = wall_start(sys, cfg);
  const JacobiGeodesic geo = boundary_start(sys, x0, cfg.arc);
  if (geo.length() < cfg.arc * (1 - 1e-12)) {
    out << "note: geodesic reaches the wall again at s=" << fmt(geo.length()) << "\n";
  }
  MorseOptions mo;
  mo.mesh.cells = cfg.cells;
  mo.tol_null = cfg.tol_null;
  mo.threads = cfg.threads;
  const double a = std::min(cfg.arc, geo.length());
  const MorseReport report = mit_verify(sys, geo, a, cfg.samples, mo);
  std::optional<BrokenJacobiResult> broken;
  if (!cfg.skip_broken) {
    BrokenJacobiOptions bo;
    bo.tol_null = cfg.tol_null;
    broken = broken_jacobi_index(sys, geo, a, {}, bo);
  }
  o.json_file("morse.json", io::morse_json(report, broken ? &*broken : nullptr));
  o.csv_file("staircase.csv", io::staircase_csv(report.scan));
  out << "index=" << report.index << " nullity=" << report.nullity << " conjugate=[";
  for (std::size_t i = 0; i < report.scan.points.size(); ++i) {
    out << (i ? "," : "") << fmt(report.scan.points[i].s, "%.6f") << "x" << report.scan.points[i].multiplicity;
  }
  out << "] mit=" << to_string(report.mit);
  if (broken) out << " broken_index=" << broken->index;
  out << "\n";
  return 0;
}

int cmd_verify(const RunConfig& cfg, const Output& o, std::ostream& out) {
  suite::SuiteOptions so;
  so.threads = cfg.threads;
  so.seed = cfg.seed;
  so.cells = cfg.cells;
  so.gradient_points = cfg.gradient_points;
  const auto checks = suite::run_all(so);
  json list = json::array();
  std::string csv = "criterion,name,value,relation,threshold,pass,detail\n";
  int passed = 0;
  std::vector<std::string> failing;
  for (const auto& c : checks) {
    list.push_back({{"criterion", c.criterion},
                    {"name", c.name},
                    {"value", std::isfinite(c.value) ? json(c.value) : json(nullptr)},
                    {"relation", c.relation},
                    {"threshold", std::isfinite(c.threshold) ? json(c.threshold) : json(nullptr)},
                    {"pass", c.pass},
                    {"detail", c.detail}});
    std::string detail = c.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    std::string name = c.name;
    std::replace(name.begin(), name.end(), ',', ';');
    csv += std::to_string(c.criterion) + "," + name + "," + io::format_double(c.value) + "," + c.relation + "," +
           io::format_double(c.threshold) + "," + (c.pass ? "1" : "0") + "," + detail + "\n";
    if (c.pass) {
      ++passed;
    } else {
      failing.push_back(c.name);
    }
  }
  const json j = {{"command", "verify"},
                  {"seed", cfg.seed},
                  {"cells", cfg.cells},
                  {"passed", passed},
                  {"total", checks.size()},
                  {"checks", list}};
  o.json_file("verify.json", j);
  o.csv_file("verify.csv", csv);
  out << "verify: " << passed << "/" << checks.size() << " checks passed";
  if (!failing.empty()) {
    out << "; failing: ";
    for (std::size_t i = 0; i < failing.size(); ++i) out << (i ? "; " : "") << failing[i];
  }
  out << "\n";
  return failing.empty() ? 0 : 2;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Brake orbits, Jacobi-metric geodesics, distance to the wall and Morse index"};
  app.name("brakeorbit");
  app.require_subcommand(1, 1);

  auto* orbit = app.add_subcommand("brake-orbit", "shoot a brake orbit from a wall point");
  add_common(orbit, cfg);
  orbit->add_option("--start", cfg.start, "wall point, comma separated");

  auto* geodesic = app.add_subcommand("geodesic", "boundary-start Jacobi-metric geodesic");
  add_common(geodesic, cfg);
  geodesic->add_option("--start", cfg.start, "wall point, comma separated");
  geodesic->add_option("--arc", cfg.arc, "arc length")->required();

  auto* dist = app.add_subcommand("distance", "distance to the wall at a query point");
  add_common(dist, cfg);
  add_distance_opts(dist, cfg);
  dist->add_option("--query", cfg.query, "query point, comma separated");

  auto* field = app.add_subcommand("distance-field", "distance to the wall on a grid");
  add_common(field, cfg);
  add_distance_opts(field, cfg);
  field->add_option("--grid", cfg.grid, "cells per axis, NxN");
  field->add_option("--lo", cfg.lo, "lower grid corner (first two coordinates)");
  field->add_option("--hi", cfg.hi, "upper grid corner (first two coordinates)");

  auto* morse = app.add_subcommand("morse", "Morse index, conjugate points and index theorem check");
  add_common(morse, cfg);
  morse->add_option("--start", cfg.start, "wall point, comma separated");
  morse->add_option("--arc", cfg.arc, "arc length a")->required();
  morse->add_option("--samples", cfg.samples, "staircase samples");
  morse->add_option("--cells", cfg.cells, "index form mesh cells");
  morse->add_option("--tol-null", cfg.tol_null, "nullity threshold")->check(CLI::PositiveNumber);
  morse->add_flag("--skip-broken", cfg.skip_broken, "skip the broken Jacobi backend");

  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  add_common(verify, cfg);
  verify->add_option("--cells", cfg.cells, "index form mesh cells");
  verify->add_option("--gradient-points", cfg.gradient_points, "random points for the gradient check")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    apply_config(sub, cfg);
    if (cfg.threads < 1) throw UsageError("--threads must be positive");
    if (cfg.format != "csv" && cfg.format != "json") throw UsageError("--format must be csv or json");
    Output o;
    o.dir = cfg.out;
    o.csv = cfg.format == "csv";
    std::filesystem::create_directories(o.dir);
    const std::string name = sub->get_name();
    if (name == "verify") return cmd_verify(cfg, o, out);
    const PotentialSystem sys = make_system(cfg, sub);
    if (name == "brake-orbit") return cmd_brake_orbit(cfg, sys, o, out);
    if (name == "geodesic") return cmd_geodesic(cfg, sys, o, out);
    if (name == "distance") return cmd_distance(cfg, sys, o, out);
    if (name == "distance-field") return cmd_field(cfg, sys, o, out);
    return cmd_morse(cfg, sys, o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    if (e.code() == ErrorCode::domain || e.code() == ErrorCode::invalid_input) {
      err << "usage error: " << e.what() << "\n";
      return 1;
    }
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace brakeorbit::cli
