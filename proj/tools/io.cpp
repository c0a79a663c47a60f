#include "io.hpp"

#include "brakeorbit/errors.hpp"
#include "brakeorbit/potentials.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace brakeorbit::io {

namespace {

std::string header_cols(const std::string& stem, int n) {
  std::string out;
  for (int i = 1; i <= n; ++i) out += "," + stem + std::to_string(i);
  return out;
}

void append_vec(std::string& row, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) row += "," + format_double(v[i]);
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

Polynomial::Term parse_term(const json& t, int dim) {
  Polynomial::Term term;
  if (t.is_object()) {
    term.coef = t.at("coef").get<double>();
    term.powers = t.at("powers").get<std::vector<int>>();
  } else if (t.is_array() && !t.empty()) {
    term.coef = t[0].get<double>();
    for (std::size_t i = 1; i < t.size(); ++i) term.powers.push_back(t[i].get<int>());
  } else {
    throw UsageError("polynomial coefficient entries must be objects or arrays");
  }
  if (static_cast<int>(term.powers.size()) != dim) {
    throw UsageError("polynomial term has " + std::to_string(term.powers.size()) + " powers, expected " +
                     std::to_string(dim));
  }
  for (int p : term.powers) {
    if (p < 0) throw UsageError("polynomial powers must be nonnegative");
  }
  return term;
}

Box parse_box(const json& j, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    throw UsageError("box needs one [lo, hi] pair per coordinate");
  }
  Box box{Vec(dim), Vec(dim)};
  for (int i = 0; i < dim; ++i) {
    const auto& pair = j[static_cast<std::size_t>(i)];
    if (!pair.is_array() || pair.size() != 2) throw UsageError("box entries must be [lo, hi] pairs");
    box.lo[i] = pair[0].get<double>();
    box.hi[i] = pair[1].get<double>();
    if (!(box.lo[i] < box.hi[i])) throw UsageError("box entries need lo < hi");
  }
  return box;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

PotentialSystem potential_from_json(const json& spec) {
  try {
    if (!spec.is_object()) throw UsageError("potential spec must be a JSON object");
    const std::string kind = spec.value("kind", "builtin");
    const int dim = spec.at("dim").get<int>();
    const double energy = spec.at("energy").get<double>();
    if (dim < 1) throw UsageError("dim must be positive");
    PotentialSystem sys;
    if (kind == "builtin") {
      const std::string name = spec.at("name").get<std::string>();
      if (name == "anisotropic" && spec.contains("omega")) {
        sys = make_anisotropic(dim, energy, spec.at("omega").get<std::vector<double>>());
      } else {
        sys = make_builtin(name, dim, energy);
      }
      if (spec.contains("box")) sys.domain_box = parse_box(spec.at("box"), dim);
    } else if (kind == "polynomial") {
      const auto& coeffs = spec.at("coefficients");
      if (!coeffs.is_array() || coeffs.empty()) throw UsageError("polynomial spec needs coefficients");
      std::vector<Polynomial::Term> terms;
      for (const auto& t : coeffs) terms.push_back(parse_term(t, dim));
      if (!spec.contains("box")) throw UsageError("polynomial spec needs a box");
      sys = make_polynomial_system(spec.value("name", "polynomial"), Polynomial(dim, terms), energy,
                                   parse_box(spec.at("box"), dim));
    } else {
      throw UsageError("unknown potential kind '" + kind + "'");
    }
    if (spec.contains("metric")) set_metric(sys, parse_metric_kind(spec.at("metric").get<std::string>()));
    return sys;
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed potential spec: ") + e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("'" + path + "' is not valid JSON: " + e.what());
  }
}

PotentialSystem load_potential_file(const std::string& path) { return potential_from_json(read_json_file(path)); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << text;
}

json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v[i]));
  return a;
}

Vec vec_from_json(const json& j) {
  if (j.is_number()) {
    Vec v(1);
    v[0] = j.get<double>();
    return v;
  }
  if (j.is_string()) return parse_vec(j.get<std::string>());
  const auto xs = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

Vec parse_vec(const std::string& text) {
  std::vector<double> xs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double x = 0.0;
    const char* b = item.data();
    while (*b == ' ') ++b;
    const auto r = std::from_chars(b, item.data() + item.size(), x);
    if (r.ec != std::errc() || r.ptr != item.data() + item.size()) {
      throw UsageError("cannot parse '" + text + "' as a comma-separated vector");
    }
    xs.push_back(x);
  }
  if (xs.empty()) throw UsageError("empty vector");
  return Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

json potential_summary(const PotentialSystem& sys) {
  return {{"name", sys.name},
          {"dim", sys.dim},
          {"energy", sys.energy},
          {"flat_metric", sys.flat_metric},
          {"box", {{"lo", to_json(sys.domain_box.lo)}, {"hi", to_json(sys.domain_box.hi)}}}};
}

std::string trajectory_csv(const PotentialSystem& sys, const NaturalTrajectory& traj) {
  std::string out = "t" + header_cols("q", sys.dim) + header_cols("v", sys.dim) + ",energy_residual\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    std::string row = format_double(traj.times[i]);
    append_vec(row, traj.q[i]);
    append_vec(row, traj.v[i]);
    const double e = 0.5 * traj.v[i].dot(sys.metric(traj.q[i]) * traj.v[i]) + sys.potential(traj.q[i]);
    row += "," + format_double(std::abs(e - sys.energy)) + "\n";
    out += row;
  }
  return out;
}

json trajectory_json(const PotentialSystem& sys, const BrakeOrbit& orbit) {
  const auto& tr = orbit.trajectory;
  json samples = json::array();
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    samples.push_back({{"t", tr.times[i]}, {"q", to_json(tr.q[i])}, {"v", to_json(tr.v[i])}});
  }
  return {{"command", "brake-orbit"},
          {"potential", potential_summary(sys)},
          {"start", to_json(orbit.start)},
          {"end", to_json(orbit.end)},
          {"half_period", orbit.half_period},
          {"arc_length", tr.total_arc()},
          {"energy_residual", tr.energy_residual},
          {"samples", samples}};
}

std::string geodesic_csv(const PotentialSystem& sys, const JacobiGeodesic& geo) {
  std::string out = "s" + header_cols("x", sys.dim) + header_cols("xdot", sys.dim) + ",gap,conservation_residual\n";
  for (std::size_t i = 0; i < geo.s.size(); ++i) {
    const Vec& x = geo.points[i];
    const Vec& xd = geo.velocities[i];
    const double gap = sys.gap(x);
    const double c = 0.5 * gap * xd.dot(sys.metric(x) * xd);
    std::string row = format_double(geo.s[i]);
    append_vec(row, x);
    append_vec(row, xd);
    row += "," + format_double(gap) + "," + format_double(std::isfinite(c) ? std::abs(c - geo.c) / geo.c : NAN) + "\n";
    out += row;
  }
  return out;
}

json geodesic_json(const PotentialSystem& sys, const JacobiGeodesic& geo, const AsymptoticFit* fit) {
  json j = {{"command", "geodesic"},
            {"potential", potential_summary(sys)},
            {"start", to_json(geo.points.front())},
            {"end", to_json(geo.points.back())},
            {"length", geo.length()},
            {"boundary_start", geo.boundary_start},
            {"boundary_end", geo.boundary_end},
            {"truncated", geo.truncated},
            {"conservation_residual", geo.conservation_residual},
            {"nodes", geo.s.size()}};
  if (fit) {
    j["asymptotics"] = {{"alpha_ev", fit->alpha_ev},
                        {"alpha_speed", fit->alpha_speed},
                        {"sigma_ratio", fit->sigma_ratio},
                        {"s_fit", fit->s_fit}};
  }
  return j;
}

std::string staircase_csv(const ConjugateScan& scan) {
  std::string out = "s,index,nullity\n";
  for (const auto& st : scan.staircase) {
    out += format_double(st.s) + "," + std::to_string(st.index) + "," + std::to_string(st.nullity) + "\n";
  }
  return out;
}

json morse_json(const MorseReport& r, const BrokenJacobiResult* broken) {
  json points = json::array();
  for (const auto& p : r.scan.points) {
    points.push_back({{"s", p.s}, {"multiplicity", p.multiplicity}, {"nullity", p.nullity}, {"bracket", p.bracket}});
  }
  json stairs = json::array();
  for (const auto& st : r.scan.staircase) {
    stairs.push_back({{"s", st.s}, {"index", st.index}, {"nullity", st.nullity}});
  }
  json backends = json::array({r.backend});
  json j = {{"command", "morse"},
            {"a", r.a},
            {"index", r.index},
            {"nullity", r.nullity},
            {"tol_null", r.count.tol_null},
            {"gap", r.count.gap},
            {"ambiguous", r.count.ambiguous},
            {"smallest_eigenvalues", r.count.smallest},
            {"sturm_agrees", r.count.sturm_agrees},
            {"conjugate_points", points},
            {"multiplicity_sum", r.multiplicity_sum},
            {"mit_consistent", to_string(r.mit)},
            {"monotone", r.scan.monotone},
            {"jumps_match_nullity", r.scan.jumps_match_nullity},
            {"staircase", stairs}};
  if (broken) {
    backends.push_back("broken-jacobi");
    j["broken_jacobi"] = {{"index", broken->index},
                          {"nullity", broken->nullity},
                          {"dimension", broken->dimension},
                          {"subdivision", broken->subdivision_s},
                          {"retries", broken->retries_used},
                          {"agrees", broken->index == r.index && broken->nullity == r.nullity}};
  }
  j["backends"] = backends;
  return j;
}

json distance_json(const Vec& Q, const DistanceResult& r, const GradientResult* gradient) {
  json cands = json::array();
  for (const auto& c : r.candidates) {
    cands.push_back({{"value", c.value}, {"start", to_json(c.start)}, {"converged", c.converged}});
  }
  json j = {{"command", "distance"},
            {"query", to_json(Q)},
            {"backend", to_string(r.backend)},
            {"value", r.value},
            {"start", to_json(r.start)},
            {"velocity", r.velocity.size() ? to_json(r.velocity) : json::array()},
            {"time", r.time},
            {"unique", r.unique},
            {"spread", r.spread},
            {"distinct", r.distinct},
            {"endpoint_error", r.endpoint_error},
            {"candidates", cands}};
  if (gradient) {
    j["gradient"] = gradient->defined ? to_json(gradient->gradient) : json(nullptr);
    j["gradient_psi"] = gradient->defined ? to_json(gradient->gradient_psi) : json(nullptr);
    if (!gradient->warning.empty()) j["warning"] = gradient->warning;
  }
  return j;
}

std::string curve_csv(const DistanceResult& r) {
  const int n = static_cast<int>(r.start.size());
  std::string out = "tau" + header_cols("x", n) + "\n";
  if (!r.curve.x.empty()) {
    for (std::size_t i = 0; i < r.curve.x.size(); ++i) {
      std::string row = format_double(r.curve.tau[i]);
      append_vec(row, r.curve.x[i]);
      out += row + "\n";
    }
  } else if (!r.candidates.empty()) {
    // the best candidate carries equally spaced samples of the minimizer
    const DistanceCandidate* best = &r.candidates.front();
    for (const auto& c : r.candidates) {
      if (c.converged && c.value < best->value) best = &c;
    }
    const auto m = best->samples.size();
    for (std::size_t i = 0; i < m; ++i) {
      std::string row = format_double(m > 1 ? static_cast<double>(i) / static_cast<double>(m - 1) : 0.0);
      append_vec(row, best->samples[i]);
      out += row + "\n";
    }
  }
  return out;
}

std::string field_csv(const DistanceField& field) {
  std::string out = "x,y,d_V,unique,grad_x,grad_y\n";
  for (const auto& c : field.cells) {
    if (c.exterior || !c.ok) continue;
    const double y = c.q.size() > 1 ? c.q[1] : 0.0;
    out += format_double(c.q[0]) + "," + format_double(y) + "," + format_double(c.value) + "," +
           (c.unique ? "1" : "0") + ",";
    if (c.gradient.size()) {
      out += format_double(c.gradient[0]) + "," + (c.gradient.size() > 1 ? format_double(c.gradient[1]) : "0");
    } else {
      out += ",";
    }
    out += "\n";
  }
  return out;
}

json field_json(const DistanceField& field) {
  int interior = 0, ok = 0, unique = 0, failed = 0;
  double vmin = INFINITY, vmax = -INFINITY;
  json errors = json::array();
  for (const auto& c : field.cells) {
    if (c.exterior) continue;
    ++interior;
    if (!c.ok) {
      ++failed;
      errors.push_back({{"q", to_json(c.q)}, {"error", c.error}});
      continue;
    }
    ++ok;
    if (c.unique) ++unique;
    vmin = std::min(vmin, c.value);
    vmax = std::max(vmax, c.value);
  }
  return {{"command", "distance-field"},
          {"grid", {{"nx", field.grid.nx}, {"ny", field.grid.ny}, {"lo", to_json(field.grid.lo)}, {"hi", to_json(field.grid.hi)}}},
          {"cells", field.cells.size()},
          {"interior", interior},
          {"solved", ok},
          {"unique", unique},
          {"failed", failed},
          {"min", ok ? json(vmin) : json(nullptr)},
          {"max", ok ? json(vmax) : json(nullptr)},
          {"errors", errors}};
}

}  // namespace brakeorbit::io
