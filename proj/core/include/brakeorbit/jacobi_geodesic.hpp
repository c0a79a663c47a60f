#pragma once

#include "brakeorbit/dynamics.hpp"

#include <limits>
#include <memory>
#include <vector>

namespace brakeorbit {

struct GeodesicPoint {
  double s = 0.0;
  double t = std::numeric_limits<double>::quiet_NaN();  // lift time, if known
  Vec q;
  Vec v;     // time velocity dq/dt (zero at a brake point)
  Vec gdot;  // arc velocity d gamma / ds (NaN on the boundary)
  double w = 0.0;  // E - V(q)
};

struct GeodesicGridOptions {
  double first_cell = 1e-8;  // relative to the arc length
  int uniform_cells = 200;
};

// Arc-parameterized g*-geodesic. Boundary-starting geodesics carry their
// Maupertuis lift, which is the accurate representation near the wall.
class JacobiGeodesic {
 public:
  int dim = 1;
  std::vector<double> s;
  std::vector<Vec> points;
  std::vector<Vec> velocities;
  double c = 1.0;
  bool boundary_start = false;
  bool boundary_end = false;
  bool truncated = false;
  double conservation_residual = 0.0;
  std::shared_ptr<const NaturalTrajectory> lift;
  std::shared_ptr<const DenseSolution> arc_dense;  // state [x, x'] in s
  double arc_direction = 1.0;  // arc_dense parameter = arc_direction * s

  double length() const { return s.empty() ? 0.0 : s.back(); }
  GeodesicPoint at_arc(const PotentialSystem& sys, double s_query) const;
  // Lift time at arc s (requires the lift).
  double time_at_arc(double s_query) const;
  double arc_at_time(double t) const;
};

struct InteriorOptions {
  OdeOptions ode{};
  double margin_factor = 1e-3;  // margin = margin_factor * reg_band
  int nodes = 200;
};

Rhs arc_geodesic_rhs(const PotentialSystem& sys);

JacobiGeodesic integrate_interior(const PotentialSystem& sys, const Vec& q0, const Vec& v0,
                                  double s_span, const InteriorOptions& opts = {});

JacobiGeodesic boundary_start(const PotentialSystem& sys, const Vec& x0, double a,
                              const DynamicsOptions& dyn = {}, const GeodesicGridOptions& grid = {});

// Builds the arc-parameterized geodesic on [0, a] from a time lift that
// starts at t = 0 (unit g*-speed).
JacobiGeodesic geodesic_from_lift(const PotentialSystem& sys,
                                  std::shared_ptr<const NaturalTrajectory> lift, double a,
                                  bool starts_on_boundary, const GeodesicGridOptions& grid = {});

std::vector<double> graded_arc_grid(double a, bool grade_end, const GeodesicGridOptions& grid);

struct AsymptoticFit {
  double alpha_ev = 0.0;
  double alpha_speed = 0.0;
  double sigma_ratio = 0.0;
  int nodes = 0;
  double s_fit = 0.0;
};

AsymptoticFit asymptotic_exponents(const PotentialSystem& sys, const JacobiGeodesic& geo);

}  // namespace brakeorbit
