#pragma once

#include "brakeorbit/distance.hpp"
#include "brakeorbit/morse.hpp"

#include <json.hpp>

#include <string>

namespace brakeorbit::io {

using json = nlohmann::ordered_json;

// Potential spec:
//   {"name": ..., "dim": N, "kind": "polynomial" | "builtin", "energy": E,
//    "coefficients": [...], "box": [[lo, hi], ...], "metric": ..., "omega": [...]}
// Polynomial coefficients are either {"coef": c, "powers": [p_1, ..., p_N]}
// objects or flat arrays [c, p_1, ..., p_N].
PotentialSystem potential_from_json(const json& spec);
PotentialSystem load_potential_file(const std::string& path);

json read_json_file(const std::string& path);
void write_text(const std::string& path, const std::string& text);

json to_json(const Vec& v);
Vec vec_from_json(const json& j);
Vec parse_vec(const std::string& text);  // "1,0,0.5"

json potential_summary(const PotentialSystem& sys);

// CSV columns: t, q_1..q_N, v_1..v_N, energy_residual
std::string trajectory_csv(const PotentialSystem& sys, const NaturalTrajectory& traj);
json trajectory_json(const PotentialSystem& sys, const BrakeOrbit& orbit);

// CSV columns: s, x_1..x_N, xdot_1..xdot_N, gap, conservation_residual
std::string geodesic_csv(const PotentialSystem& sys, const JacobiGeodesic& geo);
json geodesic_json(const PotentialSystem& sys, const JacobiGeodesic& geo, const AsymptoticFit* fit);

// CSV columns: s, index, nullity
std::string staircase_csv(const ConjugateScan& scan);
json morse_json(const MorseReport& report, const BrokenJacobiResult* broken);

json distance_json(const Vec& Q, const DistanceResult& result, const GradientResult* gradient);
// CSV columns: tau, x_1..x_N (variational polygon or sampled minimizer)
std::string curve_csv(const DistanceResult& result);

// CSV columns: x, y, d_V, unique, grad_x, grad_y (empty when undefined)
std::string field_csv(const DistanceField& field);
json field_json(const DistanceField& field);

std::string format_double(double x);

}  // namespace brakeorbit::io
