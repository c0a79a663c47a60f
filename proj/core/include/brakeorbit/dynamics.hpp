#pragma once

#include "brakeorbit/geometry.hpp"

#include <memory>
#include <vector>

namespace brakeorbit {

class JacobiGeodesic;

struct DynamicsOptions {
  OdeOptions ode{};
  double tol_v = 1e-7;
  double tol_E = 1e-8;
  double tol_rt = 1e-6;
  double t_max = 100.0;
  double t_min = 1e-3;
  bool energy_locked = false;
};

struct TrajectoryPoint {
  double t = 0.0;
  Vec q;
  Vec v;
  double s = 0.0;  // g*-arc accumulated from t = 0
};

// Time-parameterized solution of the Newton system. When `dense` is set it
// holds the augmented state [q, v, s] with s' = g(v, v) / 2; otherwise values
// between nodes come from cubic Hermite interpolation of the stored data.
class NaturalTrajectory {
 public:
  int dim = 1;
  std::vector<double> times;
  std::vector<Vec> q;
  std::vector<Vec> v;
  std::vector<Vec> accel;
  std::vector<double> arc;
  std::vector<double> arc_rate;
  double energy_residual = 0.0;
  std::shared_ptr<const DenseSolution> dense;

  TrajectoryPoint at(double t) const;
  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }
  double duration() const { return times.back() - times.front(); }
  double total_arc() const { return arc.back(); }
  // Inverse of the arc channel; requires arc to be nondecreasing in t.
  double time_at_arc(double s) const;
};

struct BrakeOrbit {
  NaturalTrajectory trajectory;
  double half_period = 0.0;
  Vec start;
  Vec end;
};

// Monotone table between the arc parameter s and the time t, with linear
// interpolation both ways so that each direction inverts the other.
struct ReparamMap {
  std::vector<double> s;
  std::vector<double> t;
  double c = 1.0;
  double time_at(double s_query) const;
  double arc_at(double t_query) const;
  double round_trip_error() const;
};

struct OrthcondProfile {
  std::vector<double> t;
  std::vector<double> r;
  std::vector<bool> taylor;
  int skipped = 0;
  double sup = 0.0;
};

// Right-hand side of the augmented Newton system [q, v, s].
Rhs newton_rhs(const PotentialSystem& sys);

NaturalTrajectory trajectory_from_dense(const PotentialSystem& sys,
                                        std::shared_ptr<const DenseSolution> dense);

NaturalTrajectory integrate_natural(const PotentialSystem& sys, const Vec& q0, const Vec& v0,
                                    double t_end, const DynamicsOptions& opts = {});

BrakeOrbit shoot_brake_orbit(const PotentialSystem& sys, const Vec& x0,
                             const DynamicsOptions& opts = {});

OrthcondProfile orthcond_profile(const PotentialSystem& sys, const BrakeOrbit& orbit,
                                 double t_probe = 0.0, int samples = 400);

ReparamMap time_of_arc(const PotentialSystem& sys, const JacobiGeodesic& geo, double c);

NaturalTrajectory orbit_from_geodesic(const PotentialSystem& sys, const JacobiGeodesic& geo);

JacobiGeodesic geodesic_from_orbit(const PotentialSystem& sys, const NaturalTrajectory& orbit);

}  // namespace brakeorbit
