#include "brakeorbit/errors.hpp"
#include "brakeorbit/geometry.hpp"
#include "brakeorbit/potentials.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace brakeorbit;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

PotentialSystem with_metric(PotentialSystem sys, MetricKind kind) {
  set_metric(sys, kind);
  return sys;
}

}  // namespace

TEST(Christoffel, EuclideanIsZero) {
  const auto sys = make_harmonic(3, 0.5);
  const Christoffel G = christoffel(sys, vec({0.1, -0.2, 0.3}));
  for (const auto& m : G.g) EXPECT_EQ(m.norm(), 0.0);
}

TEST(Christoffel, QuadraticMetricAtCriticalPointIsZero) {
  const auto sys = with_metric(make_harmonic(2, 0.5), MetricKind::quadratic_x1);
  const Christoffel G = christoffel(sys, vec({0.0, 0.0}));
  for (const auto& m : G.g) EXPECT_LT(m.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Christoffel, ExponentialMetricClosedForm) {
  const auto sys = with_metric(make_harmonic(2, 0.5), MetricKind::exp_x1);
  const Christoffel G = christoffel(sys, vec({0.3, 0.0}));
  EXPECT_NEAR(G.g[0](0, 0), 1.0, 1e-8);
  EXPECT_NEAR(G.g[0](0, 1), 0.0, 1e-10);
  EXPECT_NEAR(G.g[0](1, 1), 0.0, 1e-10);
  EXPECT_NEAR(G.g[1].cwiseAbs().maxCoeff(), 0.0, 1e-10);
  for (const auto& m : G.g) EXPECT_NEAR((m - m.transpose()).norm(), 0.0, 1e-15);
}

TEST(Christoffel, OutsideBoxIsDomainError) {
  const auto sys = with_metric(make_harmonic(2, 0.5), MetricKind::sphere);
  try {
    christoffel(sys, vec({50.0, 0.0}));
    FAIL() << "expected a domain error";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.code(), ErrorCode::domain);
  }
}

TEST(Riemann, FlatIsZero) {
  const auto sys = make_harmonic(2, 0.5);
  const Vec X = vec({1, 0.3}), Y = vec({-0.2, 1});
  EXPECT_EQ(riemann_quadratic(sys, vec({0.1, 0.1}), X, Y, Y, X), 0.0);
}

TEST(Riemann, SphereSectionalCurvatureIsOne) {
  const auto sys = with_metric(make_harmonic(2, 0.5), MetricKind::sphere);
  const Vec q = vec({0.3, -0.2});
  const double scale = 2.0 / (1.0 + q.squaredNorm());
  const Vec X = vec({1.0, 0.0}) / scale, Y = vec({0.0, 1.0}) / scale;  // g-orthonormal
  EXPECT_NEAR(riemann_quadratic(sys, q, X, Y, Y, X), 1.0, 1e-4);
  EXPECT_NEAR(riemann_quadratic(sys, q, X, X, Y, Y), 0.0, 1e-12);
}

TEST(Riemann, SymmetriesOnCurvedMetric) {
  const auto sys = with_metric(make_harmonic(3, 0.5), MetricKind::sphere);
  const Vec q = vec({0.2, 0.1, -0.3});
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 5; ++k) {
    Vec X(3), Y(3), Z(3), W(3);
    for (int i = 0; i < 3; ++i) {
      X[i] = nd(rng);
      Y[i] = nd(rng);
      Z[i] = nd(rng);
      W[i] = nd(rng);
    }
    const double a = riemann_quadratic(sys, q, X, Y, Z, W);
    EXPECT_NEAR(a, -riemann_quadratic(sys, q, Y, X, Z, W), 1e-6 * (1 + std::abs(a)));
    EXPECT_NEAR(a, riemann_quadratic(sys, q, Z, W, X, Y), 1e-5 * (1 + std::abs(a)));
  }
}

TEST(Energy, Examples) {
  const auto sys = make_harmonic(1, 0.5);
  EXPECT_DOUBLE_EQ(energy(sys, vec({0.7}), vec({0.0})), sys.V(vec({0.7})));
  EXPECT_DOUBLE_EQ(energy(sys, vec({1.0}), vec({0.0})), 0.5);
  EXPECT_DOUBLE_EQ(energy(sys, vec({0.0}), vec({1.0})), 0.5);
}

TEST(Projection, OneDimensionalHarmonic) {
  const auto sys = make_harmonic(1, 0.5);
  const Vec p = project_to_boundary(sys, vec({0.9}));
  EXPECT_NEAR(p[0], 1.0, 1e-10);
  EXPECT_LE(std::abs(sys.V(p) - 0.5), 1e-10);
}

TEST(Projection, RadialInIsotropicWell) {
  const auto sys = make_harmonic(2, 0.5);
  const Vec q = vec({0.6, 0.6});
  const Vec p = project_to_boundary(sys, q);
  EXPECT_NEAR((p - q.normalized()).norm(), 0.0, 1e-9);
}

TEST(Projection, FixedPointAndIdempotent) {
  const auto sys = make_anisotropic(2, 0.5);
  const Vec p = project_to_boundary(sys, vec({0.5, 0.35}));
  const Vec pp = project_to_boundary(sys, p);
  EXPECT_EQ((p - pp).norm(), 0.0);
  EXPECT_LE(std::abs(sys.V(p) - 0.5), 1e-10);
}

TEST(Projection, OutsideRegularBandIsDomainError) {
  const auto sys = make_harmonic(1, 0.5);
  try {
    project_to_boundary(sys, vec({0.0}));
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.code(), ErrorCode::domain);
  }
}

TEST(Projection, CurvedMetricStillLandsOnLevelSet) {
  const auto sys = with_metric(make_anisotropic(2, 0.5), MetricKind::quadratic_x1);
  const Vec p = project_to_boundary(sys, vec({0.8, 0.3}));
  EXPECT_LE(std::abs(sys.V(p) - 0.5), 1e-10);
}

TEST(Potentials, AnalyticDerivativesMatchFiniteDifferences) {
  std::mt19937 rng(11);
  for (const auto& name : builtin_names()) {
    for (int dim : {1, 2, 3}) {
      const auto sys = make_builtin(name, dim, 0.5);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (int k = 0; k < 100; ++k) {
        Vec q(dim);
        for (int i = 0; i < dim; ++i) q[i] = u(rng) * sys.domain_box.hi[i] * 0.7;
        const Vec d = sys.dpotential(q);
        const Mat H = sys.d2potential(q);
        const double h = 1e-4 * (1 + q.norm());
        for (int i = 0; i < dim; ++i) {
          Vec qp = q, qm = q;
          qp[i] += h;
          qm[i] -= h;
          const double fd = (sys.V(qp) - sys.V(qm)) / (2 * h);
          EXPECT_LE(std::abs(fd - d[i]), 1e-5 * (1 + std::abs(d[i]))) << name;
          const Vec fdg = (sys.dpotential(qp) - sys.dpotential(qm)) / (2 * h);
          EXPECT_LE((fdg - H.col(i)).norm(), 1e-5 * (1 + H.col(i).norm())) << name;
        }
      }
    }
  }
}

TEST(Potentials, RegularValueOnBoundary) {
  for (const auto& name : builtin_names()) {
    const auto sys = make_builtin(name, 2, 0.5);
    const Vec center = name == "double_well" ? vec({1.0, 0.0}) : vec({0.0, 0.0});
    for (int k = 0; k < 16; ++k) {
      const double th = 2 * M_PI * k / 16;
      const Vec x = ray_cast_boundary(sys, center, vec({std::cos(th), std::sin(th)}));
      EXPECT_LE(std::abs(sys.V(x) - 0.5), 1e-10);
      EXPECT_GT(sys.grad_potential(x).norm(), 0.0);
      EXPECT_GT(metric_min_eigenvalue(sys, x), 0.0);
    }
  }
}

TEST(Potentials, PolynomialFromTerms) {
  Polynomial p(2, {{1.0, {2, 0}}, {3.0, {1, 1}}, {-2.0, {0, 3}}});
  const Vec q = vec({0.5, -0.4});
  EXPECT_NEAR(p.value(q), 0.25 + 3 * 0.5 * -0.4 - 2 * -0.064, 1e-15);
  EXPECT_NEAR(p.gradient(q)[0], 1.0 + 3 * -0.4, 1e-15);
  EXPECT_NEAR(p.gradient(q)[1], 1.5 - 6 * 0.16, 1e-15);
  EXPECT_NEAR(p.hessian(q)(0, 1), 3.0, 1e-15);
  EXPECT_NEAR(p.hessian(q)(1, 1), -12 * -0.4, 1e-15);
}

TEST(Potentials, UnknownBuiltinIsUsageError) {
  EXPECT_THROW(make_builtin("nope", 2, 0.5), UsageError);
}
