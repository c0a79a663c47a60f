#pragma once

#include "brakeorbit/jacobi_geodesic.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace brakeorbit {

// Polygon x_0..x_m on the parameter grid tau_0 = 0 < ... < tau_m = 1, with x_0
// on the wall and x_m = Q. `value` is the discrete energy
// sum_i L_i^2 / (tau_{i+1} - tau_i), L_i the g*-length of segment i.
struct DiscretizedCurve {
  std::vector<double> tau;
  std::vector<Vec> x;
  double value = 0.0;
};

enum class DistanceBackend { variational, shooting };
const char* to_string(DistanceBackend b);
DistanceBackend parse_distance_backend(const std::string& name);

struct DistanceOptions {
  int nodes = 48;  // polygon segments
  int n_start = 8;
  double tol_opt = 1e-8;
  double tol_unique = 1e-3;
  double separation = 1e-2;
  double tol_hit = 1e-10;
  double horizon = 20.0;  // time budget for locating a shot's first pass near Q
  int max_iter = 200;
  unsigned long long seed = 0;
  bool build_geodesic = true;
};

struct DistanceCandidate {
  double value = 0.0;
  Vec start;
  bool converged = false;
  std::vector<Vec> samples;  // curve at equal fractions of its length
};

struct DistanceResult {
  double value = 0.0;
  DistanceBackend backend = DistanceBackend::variational;
  Vec start;      // boundary end of the minimizer
  Vec velocity;   // dq/dt of the Maupertuis lift at Q
  double time = 0.0;
  bool unique = true;
  double spread = 0.0;  // value gap to the nearest distinct candidate
  int distinct = 0;     // number of distinct near-optimal candidates besides the best
  std::vector<DistanceCandidate> candidates;
  DiscretizedCurve curve;              // variational backend only
  std::optional<JacobiGeodesic> minimizer;
  double endpoint_error = 0.0;         // |gamma(d) - Q| of the rebuilt geodesic
  int iterations = 0;
};

DiscretizedCurve initial_curve(const PotentialSystem& sys, const Vec& wall_point, const Vec& Q, int segments);

// Discrete energy of a polygon, +inf if the polygon leaves the well.
double discrete_energy(const PotentialSystem& sys, const DiscretizedCurve& curve);

DistanceResult minimize_variational(const PotentialSystem& sys, const Vec& Q, const DistanceOptions& opts = {});
DistanceResult minimize_variational(const PotentialSystem& sys, const Vec& Q, const DiscretizedCurve& init,
                                    const DistanceOptions& opts = {});

DistanceResult minimize_shooting(const PotentialSystem& sys, const Vec& Q, const DistanceOptions& opts = {});

DistanceResult distance(const PotentialSystem& sys, const Vec& Q, DistanceBackend backend,
                        const DistanceOptions& opts = {});

struct GradientResult {
  bool defined = false;
  Vec gradient;      // g-gradient of d_V
  Vec gradient_psi;  // g-gradient of d_V^2
  std::string warning;
  DistanceResult distance;
};

GradientResult grad_dV(const PotentialSystem& sys, const Vec& Q, DistanceBackend backend = DistanceBackend::shooting,
                       const DistanceOptions& opts = {});

struct GridSpec {
  int nx = 21;
  int ny = 21;
  Vec lo;  // lower corner in the first two coordinates
  Vec hi;
};

struct FieldCell {
  Vec q;
  bool exterior = false;
  bool ok = false;
  double value = 0.0;
  bool unique = false;
  Vec direction;  // unit direction of the minimizer at the cell center
  Vec gradient;   // empty unless unique
  std::string error;
};

struct DistanceField {
  GridSpec grid;
  std::vector<FieldCell> cells;  // row-major, x fastest
};

DistanceField distance_field(const PotentialSystem& sys, const GridSpec& grid, DistanceBackend backend,
                             const DistanceOptions& opts = {}, int threads = 1);

}  // namespace brakeorbit
