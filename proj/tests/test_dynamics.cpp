#include "brakeorbit/dynamics.hpp"
#include "brakeorbit/errors.hpp"
#include "brakeorbit/jacobi_geodesic.hpp"
#include "brakeorbit/potentials.hpp"
#include "oracle_values.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace brakeorbit;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST(IntegrateNatural, HarmonicMatchesCosine) {
  const auto sys = make_harmonic(1, 0.5);
  const auto tr = integrate_natural(sys, vec({1.0}), vec({0.0}), M_PI);
  double err = 0;
  for (int k = 0; k <= 1000; ++k) {
    const double t = M_PI * k / 1000;
    err = std::max(err, std::abs(tr.at(t).q[0] - std::cos(t)));
  }
  EXPECT_LE(err, 1e-6);
  EXPECT_LE(tr.energy_residual, 1e-8);
}

TEST(IntegrateNatural, EquilibriumStaysPut) {
  const auto sys = make_harmonic(2, 0.5);
  const auto tr = integrate_natural(sys, vec({0.0, 0.0}), vec({0.0, 0.0}), 5.0);
  EXPECT_EQ(tr.at(3.3).q.norm(), 0.0);
}

TEST(IntegrateNatural, RadialOrbitIn2D) {
  const auto sys = make_harmonic(2, 0.5);
  const auto tr = integrate_natural(sys, vec({1.0, 0.0}), vec({0.0, 0.0}), M_PI);
  for (double t : {0.3, 1.0, 2.5}) {
    EXPECT_NEAR(tr.at(t).q[0], std::cos(t), 1e-8);
    EXPECT_NEAR(tr.at(t).q[1], 0.0, 1e-14);
  }
}

TEST(IntegrateNatural, Reversibility) {
  const auto sys = make_anisotropic(2, 0.5);
  const Vec q0 = vec({0.3, 0.2}), v0 = vec({0.5, -0.4});
  const auto fwd = integrate_natural(sys, q0, v0, 2.0);
  const auto end = fwd.at(2.0);
  const auto back = integrate_natural(sys, end.q, end.v, -2.0);
  const auto p = back.at(-2.0);
  EXPECT_LE((p.q - q0).norm(), 1e-7);
  EXPECT_LE((p.v - v0).norm(), 1e-7);
}

TEST(IntegrateNatural, EscapeIsReported) {
  const auto sys = make_harmonic(1, 0.5);
  try {
    integrate_natural(sys, vec({0.0}), vec({5.0}), 3.0);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.code(), ErrorCode::escape);
  }
}

TEST(IntegrateNatural, EnergyLockRejectsOffShellData) {
  const auto sys = make_harmonic(1, 0.5);
  DynamicsOptions o;
  o.energy_locked = true;
  EXPECT_THROW(integrate_natural(sys, vec({0.0}), vec({0.5}), 1.0, o), NumericalError);
}

TEST(BrakeOrbit, Harmonic1D) {
  const auto sys = make_harmonic(1, 0.5);
  const auto orbit = shoot_brake_orbit(sys, vec({1.0}));
  EXPECT_NEAR(orbit.half_period, M_PI, 1e-6);
  EXPECT_NEAR(orbit.end[0], -1.0, 1e-8);
  EXPECT_LE(orbit.trajectory.energy_residual, 1e-8);
  EXPECT_LE(orbit.trajectory.v.back().norm(), 1e-7);
}

TEST(BrakeOrbit, Harmonic2D) {
  const auto sys = make_harmonic(2, 0.5);
  const auto orbit = shoot_brake_orbit(sys, vec({1.0, 0.0}));
  EXPECT_NEAR(orbit.half_period, M_PI, 1e-6);
  EXPECT_NEAR((orbit.end - vec({-1.0, 0.0})).norm(), 0.0, 1e-8);
}

TEST(BrakeOrbit, DoubleWellRebrakesAtInnerTurningPoint) {
  const auto sys = make_double_well(1, 0.5);
  const auto orbit = shoot_brake_orbit(sys, vec({oracle::kDoubleWellOuter}));
  EXPECT_NEAR(orbit.end[0], oracle::kDoubleWellInner, 1e-8);
  EXPECT_NEAR(orbit.half_period, oracle::kDoubleWellHalfPeriod, 1e-7);
}

TEST(BrakeOrbit, StartOffBoundaryIsDomainError) {
  const auto sys = make_harmonic(1, 0.5);
  EXPECT_THROW(shoot_brake_orbit(sys, vec({0.9})), NumericalError);
}

TEST(BrakeOrbit, NoRebrakeBeforeTmax) {
  // Incommensurate frequencies: the orbit from a generic boundary point does
  // not come to rest again quickly.
  const auto sys = make_anisotropic(2, 0.5, {1.0, std::sqrt(2.0)});
  const Vec x0 = project_to_boundary(sys, vec({0.6, 0.5}));
  DynamicsOptions o;
  o.t_max = 20.0;
  try {
    shoot_brake_orbit(sys, x0, o);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_brake);
  }
}

TEST(Orthcond, CollinearCasesVanish) {
  const auto s1 = make_harmonic(1, 0.5);
  const auto p1 = orthcond_profile(s1, shoot_brake_orbit(s1, vec({1.0})));
  EXPECT_LE(p1.sup, 1e-9);
  const auto s2 = make_harmonic(2, 0.5);
  const auto p2 = orthcond_profile(s2, shoot_brake_orbit(s2, vec({1.0, 0.0})));
  EXPECT_LE(p2.sup, 1e-9);
}

TEST(Orthcond, AnisotropicSupIsStableUnderTolerance) {
  const auto sys = make_anisotropic(2, 0.5);
  const Vec x0 = project_to_boundary(sys, vec({0.8, 0.3}));
  DynamicsOptions coarse;
  DynamicsOptions fine;
  fine.ode.rtol = 0.5 * coarse.ode.rtol;
  fine.ode.atol = 0.5 * coarse.ode.atol;
  const auto a = orthcond_profile(sys, shoot_brake_orbit(sys, x0, coarse));
  const auto b = orthcond_profile(sys, shoot_brake_orbit(sys, x0, fine));
  EXPECT_TRUE(std::isfinite(a.sup));
  EXPECT_GT(a.sup, 0.0);
  EXPECT_LE(std::abs(a.sup - b.sup), 0.05 * a.sup);
}

TEST(Maupertuis, ArcLengthsOfHarmonicOrbit) {
  const auto sys = make_harmonic(1, 0.5);
  const auto orbit = shoot_brake_orbit(sys, vec({1.0}));
  EXPECT_NEAR(orbit.trajectory.total_arc(), oracle::kHarmonicHalfOrbitArc, 1e-9);
  EXPECT_NEAR(orbit.trajectory.at(M_PI / 2).s, oracle::kHarmonicQuarterOrbitArc, 1e-9);
}

TEST(Maupertuis, TimeOfArcOnCrossingGeodesic) {
  const auto sys = make_harmonic(1, 0.5);
  const auto geo = boundary_start(sys, vec({1.0}), oracle::kCrossingArc);
  const ReparamMap map = time_of_arc(sys, geo, 1.0);
  EXPECT_NEAR(map.t.back(), M_PI, 1e-6);
  EXPECT_NEAR(map.time_at(oracle::kHarmonicQuarterOrbitArc), M_PI / 2, 1e-6);
  EXPECT_LE(map.round_trip_error(), 1e-6);
}

TEST(Maupertuis, ConstantGapGivesLinearTime) {
  // A flat potential: E - V is the constant kappa everywhere.
  Polynomial flat(2, {{0.2, {0, 0}}});
  Box box{vec({-5, -5}), vec({5, 5})};
  const auto sys = make_polynomial_system("flat", flat, 0.7, box);
  const double kappa = 0.5;
  const Vec v0 = vec({1.0, 0.0}) * std::sqrt(2.0 / kappa);  // unit g*-speed
  const auto geo = integrate_interior(sys, vec({0.0, 0.0}), v0, 2.0);
  const ReparamMap map = time_of_arc(sys, geo, 1.0);
  for (std::size_t i = 0; i < map.s.size(); i += 17) EXPECT_NEAR(map.t[i], map.s[i] / kappa, 1e-12);
}

TEST(Maupertuis, RoundTripOrbitGeodesicOrbit) {
  const auto sys = make_harmonic(1, 0.5);
  const auto orbit = shoot_brake_orbit(sys, vec({1.0}));
  const auto geo = geodesic_from_orbit(sys, orbit.trajectory);
  EXPECT_NEAR(geo.length(), oracle::kHarmonicHalfOrbitArc, 1e-9);
  const auto back = orbit_from_geodesic(sys, geo);
  double err = 0;
  for (std::size_t i = 0; i < back.times.size(); ++i) {
    // The two ends agree only to round-off, so stay inside the original orbit.
    const double t = std::min(back.times[i], orbit.trajectory.t_end());
    err = std::max(err, (back.q[i] - orbit.trajectory.at(t).q).norm());
  }
  for (int k = 0; k <= 400; ++k) {
    const double t = std::min(back.t_end(), M_PI * k / 400);
    err = std::max(err, std::abs(back.at(t).q[0] - std::cos(t)));
  }
  EXPECT_LE(err, 1e-6);
  EXPECT_NEAR(back.t_end(), M_PI, 1e-6);
}

TEST(Maupertuis, RoundTripGeodesicOrbitGeodesic) {
  const auto sys = make_anisotropic(2, 0.5);
  const Vec q0 = vec({0.2, 0.1});
  const double w0 = sys.energy - sys.V(q0);
  const Vec v0 = vec({0.6, 0.8}) * std::sqrt(2.0 / w0);
  const auto geo = integrate_interior(sys, q0, v0, 0.2);
  const auto orbit = orbit_from_geodesic(sys, geo);
  const auto dense = integrate_natural(sys, q0, orbit.v.front(), orbit.t_end());
  const auto geo2 = geodesic_from_orbit(sys, dense);
  double err = 0;
  for (std::size_t i = 0; i < geo.s.size(); ++i) {
    err = std::max(err, (geo2.at_arc(sys, std::min(geo.s[i], geo2.length())).q - geo.points[i]).norm());
  }
  EXPECT_LE(err, 1e-6);
}

TEST(Maupertuis, DegenerateCurveRejected) {
  const auto sys = make_harmonic(1, 0.5);
  JacobiGeodesic g;
  g.s = {0.0};
  g.points = {vec({0.0})};
  g.velocities = {vec({0.0})};
  EXPECT_THROW(orbit_from_geodesic(sys, g), NumericalError);
}
