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

TEST(BoundaryStart, HarmonicReachesCenter) {
  const auto sys = make_harmonic(1, 0.5);
  const auto geo = boundary_start(sys, vec({1.0}), oracle::kHarmonicQuarterOrbitArc);
  EXPECT_NEAR(geo.points.back()[0], 0.0, 1e-8);
  EXPECT_EQ(geo.points.front()[0], 1.0);
  EXPECT_TRUE(geo.boundary_start);
  EXPECT_FALSE(geo.truncated);
  EXPECT_LE(geo.conservation_residual, 1e-6);
}

TEST(BoundaryStart, Radial2DReachesCenter) {
  const auto sys = make_harmonic(2, 0.5);
  const auto geo = boundary_start(sys, vec({1.0, 0.0}), oracle::kIsoConjugateArc);
  EXPECT_NEAR(geo.points.back().norm(), 0.0, 1e-8);
}

TEST(BoundaryStart, ZeroLengthDegenerates) {
  const auto sys = make_harmonic(2, 0.5);
  const auto geo = boundary_start(sys, vec({1.0, 0.0}), 0.0);
  ASSERT_EQ(geo.s.size(), 1u);
  EXPECT_EQ(geo.points.front(), vec({1.0, 0.0}));
}

TEST(BoundaryStart, TruncatesPastRebrake) {
  const auto sys = make_harmonic(1, 0.5);
  const auto geo = boundary_start(sys, vec({1.0}), 2.0);
  EXPECT_TRUE(geo.truncated);
  EXPECT_NEAR(geo.length(), oracle::kCrossingArc, 1e-9);
}

TEST(BoundaryStart, GradedGridNearWall) {
  const auto sys = make_harmonic(1, 0.5);
  const auto geo = boundary_start(sys, vec({1.0}), 0.5);
  EXPECT_EQ(geo.s[0], 0.0);
  EXPECT_NEAR(geo.s[1], 1e-8 * 0.5, 1e-20);
  EXPECT_NEAR(geo.s[2] / geo.s[1], 2.0, 1e-12);
  for (std::size_t i = 1; i < geo.s.size(); ++i) {
    EXPECT_GT(geo.s[i], geo.s[i - 1]);
    EXPECT_LT(sys.V(geo.points[i]), sys.energy);
  }
}

TEST(Interior, MatchesLiftedGeodesic) {
  const auto sys = make_harmonic(1, 0.5);
  const double w0 = 0.5;
  const Vec v0 = vec({-std::sqrt(2.0 / w0)});
  const auto inner = integrate_interior(sys, vec({0.0}), v0, 0.3);
  const auto crossing = boundary_start(sys, vec({1.0}), oracle::kCrossingArc);
  double err = 0;
  for (std::size_t i = 0; i < inner.s.size(); ++i) {
    const auto p = crossing.at_arc(sys, oracle::kHarmonicQuarterOrbitArc + inner.s[i]);
    err = std::max(err, (p.q - inner.points[i]).norm());
  }
  EXPECT_LE(err, 1e-6);
  EXPECT_LE(inner.conservation_residual, 1e-6);
}

TEST(Interior, ConstantGapGivesStraightLine) {
  Polynomial flat(2, {{0.2, {0, 0}}});
  Box box{vec({-5, -5}), vec({5, 5})};
  const auto sys = make_polynomial_system("flat", flat, 0.7, box);
  const auto geo = integrate_interior(sys, vec({0.0, 0.0}), vec({1.0, 2.0}), 1.5);
  for (std::size_t i = 0; i < geo.s.size(); ++i) {
    EXPECT_NEAR(geo.points[i][1], 2 * geo.points[i][0], 1e-12);
  }
}

TEST(Interior, ReversalTracesPathBackward) {
  const auto sys = make_anisotropic(2, 0.5);
  const Vec q0 = vec({0.1, 0.05}), v0 = vec({1.0, 0.7});
  const auto fwd = integrate_interior(sys, q0, v0, 0.15);
  const auto bwd = integrate_interior(sys, fwd.points.back(), -fwd.velocities.back(), 0.15);
  for (std::size_t i = 0; i < fwd.s.size(); ++i) {
    EXPECT_NEAR((fwd.points[i] - bwd.points[fwd.s.size() - 1 - i]).norm(), 0.0, 1e-8);
  }
}

TEST(Interior, HandoffNearBoundary) {
  const auto sys = make_harmonic(1, 0.5);
  try {
    integrate_interior(sys, vec({0.0}), vec({2.0}), 1.0);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.code(), ErrorCode::handoff);
  }
}

TEST(Asymptotics, HarmonicExponents1D) {
  const auto sys = make_harmonic(1, 0.5);
  const auto geo = boundary_start(sys, vec({1.0}), oracle::kHarmonicQuarterOrbitArc);
  const auto fit = asymptotic_exponents(sys, geo);
  EXPECT_GE(fit.alpha_ev, 0.62);
  EXPECT_LE(fit.alpha_ev, 0.72);
  EXPECT_GE(fit.alpha_speed, -0.38);
  EXPECT_LE(fit.alpha_speed, -0.28);
  EXPECT_LE(fit.sigma_ratio, 1e-6);
  EXPECT_GE(fit.nodes, 20);
}

TEST(Asymptotics, AnisotropicSigmaRatioMeshStable) {
  const auto sys = make_anisotropic(2, 0.5);
  const Vec x0 = project_to_boundary(sys, vec({0.8, 0.3}));
  GeodesicGridOptions fine;
  fine.first_cell = 1e-9;
  fine.uniform_cells = 400;
  const auto g1 = boundary_start(sys, x0, 0.4);
  const auto g2 = boundary_start(sys, x0, 0.4, {}, fine);
  const auto f1 = asymptotic_exponents(sys, g1);
  const auto f2 = asymptotic_exponents(sys, g2);
  EXPECT_TRUE(std::isfinite(f1.sigma_ratio));
  EXPECT_GT(f1.sigma_ratio, 0.0);
  EXPECT_LE(std::abs(f1.sigma_ratio - f2.sigma_ratio), 0.1 * f1.sigma_ratio);
}

TEST(Asymptotics, TooFewNodesIsSamplingError) {
  const auto sys = make_harmonic(1, 0.5);
  GeodesicGridOptions sparse;
  sparse.first_cell = 0.01;
  sparse.uniform_cells = 8;
  const auto geo = boundary_start(sys, vec({1.0}), 0.3, {}, sparse);
  try {
    asymptotic_exponents(sys, geo);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.code(), ErrorCode::sampling);
  }
}
