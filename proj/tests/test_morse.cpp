#include "brakeorbit/errors.hpp"
#include "brakeorbit/morse.hpp"
#include "brakeorbit/potentials.hpp"
#include "oracle_values.hpp"

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

Vec axis(int dim) {
  Vec x = Vec::Zero(dim);
  x[0] = 1.0;
  return x;
}

constexpr double kMitArc = 0.9 * oracle::kHarmonicHalfOrbitArc;

struct Radial {
  PotentialSystem sys;
  JacobiGeodesic geo;
  explicit Radial(int dim, double a = kMitArc)
      : sys(make_harmonic(dim, 0.5)), geo(boundary_start(sys, axis(dim), a)) {}
};

// Lowest eigenvector field, B-normalized, sampled at the mesh nodes.
double lowest_mode_sup(const PotentialSystem& sys, const IndexFormDiscretization& d) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(d.A, d.B);
  Vec c = es.eigenvectors().col(0);
  double sup = 0.0;
  for (double t : d.nodes_t) sup = std::max(sup, fe_field(sys, d, c, t).xi.norm());
  return sup;
}

}  // namespace

TEST(IndexForm, SymmetricWithPositiveGram) {
  Radial r(2);
  const auto d = assemble_index_form(r.sys, r.geo, 0.5);
  EXPECT_LE((d.A - d.A.transpose()).norm(), 1e-12 * d.A.norm());
  EXPECT_LE(d.asymmetry, 1e-12 * d.A.norm());
  Eigen::LLT<Mat> llt(d.B);
  EXPECT_EQ(llt.info(), Eigen::Success);
  EXPECT_EQ(d.ndof, 1 + (d.cells - 1) * 2);
}

TEST(IndexForm, BasisRespectsConstraints) {
  Radial r(3);
  const auto d = assemble_index_form(r.sys, r.geo, 0.3, {40});
  const Vec grad0 = r.sys.grad_potential(r.geo.points.front());
  for (int k = 0; k < d.ndof; ++k) {
    Vec c = Vec::Zero(d.ndof);
    c[k] = 1.0;
    EXPECT_NEAR(grad0.dot(fe_field(r.sys, d, c, 0.0).xi), 0.0, 1e-12);
    EXPECT_LE(fe_field(r.sys, d, c, d.t_end).xi.norm(), 1e-14);
  }
}

TEST(IndexForm, UniformArcMeshRefused) {
  Radial r(2);
  MeshSpec mesh;
  mesh.grading = MeshGrading::uniform_arc;
  try {
    assemble_index_form(r.sys, r.geo, 0.5, mesh);
    FAIL() << "uniform arc mesh accepted";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.code(), ErrorCode::refused_mesh);
  }
}

TEST(IndexForm, PositiveBeforeConjugatePoint) {
  Radial r(2);
  const auto mc = morse_index(assemble_index_form(r.sys, r.geo, 0.5 * oracle::kIsoConjugateArc));
  EXPECT_EQ(mc.index, 0);
  EXPECT_EQ(mc.nullity, 0);
  EXPECT_FALSE(mc.ambiguous);
  EXPECT_GT(mc.smallest.front(), 0.0);
}

TEST(IndexForm, LowestEigenvaluesMatchOracle) {
  Radial r(2);
  const auto at02 = morse_index(assemble_index_form(r.sys, r.geo, 0.2));
  const auto at05 = morse_index(assemble_index_form(r.sys, r.geo, 0.5));
  EXPECT_NEAR(at02.smallest.front(), oracle::kIsoLambdaMinAt02, 1e-3 * std::abs(oracle::kIsoLambdaMinAt02));
  EXPECT_NEAR(at05.smallest.front(), oracle::kIsoLambdaMinAt05, 1e-3 * std::abs(oracle::kIsoLambdaMinAt05));
  EXPECT_EQ(at05.index, 1);
  EXPECT_EQ(at05.nullity, 0);
  EXPECT_TRUE(at05.sturm_agrees);
}

TEST(IndexForm, RefinementMovesLowSpectrumLittle) {
  Radial r(2);
  const auto coarse = morse_index(assemble_index_form(r.sys, r.geo, 0.5, {80}));
  const auto fine = morse_index(assemble_index_form(r.sys, r.geo, 0.5, {160}));
  for (int k = 0; k < 5; ++k) {
    EXPECT_LE(std::abs(fine.smallest[k] - coarse.smallest[k]), 0.02 * std::abs(fine.smallest[k])) << k;
  }
}

TEST(IndexForm, EigenfieldsStayBounded) {
  Radial r(2);
  double prev = 0.0;
  for (int cells : {40, 80, 160}) {
    const double sup = lowest_mode_sup(r.sys, assemble_index_form(r.sys, r.geo, 0.5, {cells}));
    EXPECT_TRUE(std::isfinite(sup));
    if (prev > 0.0) {
      EXPECT_LE(sup, 2.0 * prev);
      EXPECT_GE(sup, 0.5 * prev);
    }
    prev = sup;
  }
}

TEST(IndexForm, ThreeDimensionalPastCenter) {
  Radial r(3);
  const auto mc = morse_index(assemble_index_form(r.sys, r.geo, kMitArc));
  EXPECT_EQ(mc.index, 2);
  EXPECT_EQ(mc.nullity, 0);
}

TEST(IndexForm, SturmCountMatchesEigencount) {
  Radial r(2);
  const auto d = assemble_index_form(r.sys, r.geo, 0.6, {60});
  const Eigen::VectorXd ev = generalized_eigenvalues(d.A, d.B);
  for (double sigma : {-1.0, 0.0, 0.5, 3.0}) {
    const int expected = static_cast<int>((ev.array() < sigma).count());
    EXPECT_EQ(sturm_count(d, sigma), expected) << sigma;
  }
}

TEST(Hessian, ZeroFieldVanishes) {
  Radial r(2);
  const auto d = assemble_index_form(r.sys, r.geo, 0.5, {40});
  EXPECT_EQ(hessian_quadratic(r.sys, d, Vec::Zero(d.ndof)), 0.0);
}

TEST(Hessian, QuadraticScaling) {
  Radial r(2);
  const auto d = assemble_index_form(r.sys, r.geo, 0.5, {40});
  std::mt19937 rng(11);
  std::normal_distribution<double> nd;
  Vec c(d.ndof);
  for (int i = 0; i < d.ndof; ++i) c[i] = nd(rng);
  const double h1 = hessian_quadratic(r.sys, d, c);
  EXPECT_NEAR(hessian_quadratic(r.sys, d, 2.0 * c), 4.0 * h1, 1e-12 * std::abs(h1));
}

TEST(Hessian, AgreesWithAssembledForm) {
  for (int dim : {1, 2}) {
    const auto sys = make_harmonic(dim, 0.5);
    const double a = dim == 1 ? oracle::kCrossingArc : 0.6;
    const auto geo = boundary_start(sys, axis(dim), a);
    const auto d = assemble_index_form(sys, geo, a);
    std::mt19937 rng(5 + dim);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 10; ++trial) {
      Vec c(d.ndof);
      for (int i = 0; i < d.ndof; ++i) c[i] = nd(rng);
      const double q = c.dot(d.A * c);
      EXPECT_NEAR(hessian_quadratic(sys, d, c), q, 1e-6 * std::abs(q)) << dim << " " << trial;
    }
  }
}

// Rotating the radial geodesic by eps * eta(s) keeps the start on the circle,
// and the energy of the rotated curves is available in closed form.
TEST(Hessian, RotatedFamilySecondVariation) {
  const auto sys = make_harmonic(2, 0.5);
  const double a = 0.3;
  const auto geo = boundary_start(sys, axis(2), a);
  const auto eta = [a](double s) { return 1.0 - s / a; };
  const double deta = -1.0 / a;
  const auto field = [&](double s) {
    const auto p = geo.at_arc(sys, s);
    const Vec J = vec({-p.q[1], p.q[0]});
    const Vec dJ = vec({-p.gdot[1], p.gdot[0]});
    return FieldValue{eta(s) * J, deta * J + eta(s) * dJ};
  };
  const auto d = assemble_index_form(sys, geo, a, {40});
  const double h = hessian_quadratic(sys, geo, field, d.nodes_s);

  double expected = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = (i + 0.5) / n;
    const double s = a * u * u * u;
    const auto p = geo.at_arc(sys, s);
    expected += (sys.energy - sys.potential(p.q)) * deta * deta * p.q.squaredNorm() * 3.0 * a * u * u / n;
  }
  EXPECT_NEAR(h, expected, 1e-6 * expected);
}

TEST(JacobiShoot, ZeroDataGivesZeroField) {
  Radial r(2);
  const auto sol = jacobi_field_shoot(r.sys, r.geo, 1e-3, Vec::Zero(2), Vec::Zero(2), 0.6, 20);
  for (const auto& x : sol.xi) EXPECT_EQ(x.norm(), 0.0);
  EXPECT_EQ(sol.residual, 0.0);
}

TEST(JacobiShoot, ReparameterizationFieldsSolve) {
  const auto sys = make_harmonic(1, 0.5);
  const double a = oracle::kCrossingArc;
  const auto geo = boundary_start(sys, vec({1.0}), a);
  std::vector<double> grid;
  for (int i = 1; i < 200; ++i) grid.push_back(a * i / 200.0);
  EXPECT_LE(sample_field(sys, geo, tangent_field(sys, geo), grid).residual, 1e-5);
  EXPECT_LE(sample_field(sys, geo, scaling_field(sys, geo), grid).residual, 1e-5);

  const double s0 = 1e-4 * a;
  const auto p = geo.at_arc(sys, s0);
  const auto shot = jacobi_field_shoot(sys, geo, s0, p.gdot, Vec::Zero(1), a - s0);
  EXPECT_LE(shot.residual, 1e-5);
}

TEST(JacobiShoot, TransverseFieldVanishesAtCenter) {
  Radial r(2, oracle::kIsoConjugateArc * 1.5);
  const double s0 = 1e-4;
  // the rotation field of the radial family, started off the wall
  const auto p = r.geo.at_arc(r.sys, s0);
  const auto sol = jacobi_field_shoot(r.sys, r.geo, s0, vec({0.0, p.q[0]}), vec({0.0, p.gdot[0]}),
                                      oracle::kIsoConjugateArc);
  EXPECT_LE(sol.residual, 1e-5);
  EXPECT_LE(sol.xi.back().norm(), 1e-3);
}

// The radial field sqrt(E - V) along the 1D crossing is not a Jacobi field.
TEST(JacobiShoot, RadialGapFieldIsNotJacobi) {
  const auto sys = make_harmonic(1, 0.5);
  const double a = oracle::kCrossingArc;
  const auto geo = boundary_start(sys, vec({1.0}), a);
  std::vector<double> grid;
  for (int i = 1; i < 200; ++i) grid.push_back(a * i / 200.0);
  EXPECT_GT(sample_field(sys, geo, radial_gap_field(sys, geo), grid).residual, 1e-2);
}

TEST(NullBoundary, ZeroFieldHasZeroResidual) {
  Radial r(2);
  std::vector<double> small{1e-4, 2e-4, 4e-4, 8e-4, 1.6e-3};
  const TimeField zero = [](double) { return FieldValue{Vec::Zero(2), Vec::Zero(2)}; };
  EXPECT_EQ(null_boundary_check(r.sys, r.geo, sample_field(r.sys, r.geo, zero, small)).residual, 0.0);
}

TEST(NullBoundary, ScalingFieldPasses) {
  Radial r(2);
  std::vector<double> small{1e-4, 2e-4, 4e-4, 8e-4, 1.6e-3};
  const auto nb = null_boundary_check(r.sys, r.geo, sample_field(r.sys, r.geo, scaling_field(r.sys, r.geo), small));
  EXPECT_LE(nb.residual, 1e-4);
}

TEST(NullBoundary, GenericTangentDataFails) {
  Radial r(2);
  const auto d = assemble_index_form(r.sys, r.geo, 0.5, {40});
  Vec c = Vec::Zero(d.ndof);
  c[0] = 1.0;
  c[d.node_offset(1) + 1] = 0.3;
  const TimeField hat = [&](double t) { return fe_field(r.sys, d, c, t); };
  std::vector<double> small{1e-4, 2e-4, 4e-4, 8e-4, 1.6e-3};
  EXPECT_GT(null_boundary_check(r.sys, r.geo, sample_field(r.sys, r.geo, hat, small)).residual, 1e-2);
}

TEST(Conjugate, RadialTwoDimensional) {
  Radial r(2);
  const auto scan = conjugate_points(r.sys, r.geo, kMitArc, 32);
  ASSERT_EQ(scan.points.size(), 1u);
  EXPECT_NEAR(scan.points[0].s, oracle::kIsoConjugateArc, 1e-3);
  EXPECT_EQ(scan.points[0].multiplicity, 1);
  EXPECT_EQ(scan.points[0].nullity, 1);
  EXPECT_TRUE(scan.monotone);
  EXPECT_TRUE(scan.jumps_match_nullity);
}

TEST(Conjugate, RadialThreeDimensional) {
  Radial r(3);
  const auto scan = conjugate_points(r.sys, r.geo, kMitArc, 32);
  ASSERT_EQ(scan.points.size(), 1u);
  EXPECT_NEAR(scan.points[0].s, oracle::kIsoConjugateArc, 1e-3);
  EXPECT_EQ(scan.points[0].multiplicity, 2);
}

TEST(Conjugate, NoneOnShortRange) {
  Radial r(2);
  const auto scan = conjugate_points(r.sys, r.geo, 0.3, 16);
  EXPECT_TRUE(scan.points.empty());
  for (const auto& st : scan.staircase) EXPECT_EQ(st.index, 0);
}

TEST(Mit, ConsistentPastConjugatePoint) {
  Radial r(2);
  const auto rep = mit_verify(r.sys, r.geo, kMitArc, 32);
  EXPECT_EQ(rep.index, 1);
  EXPECT_EQ(rep.multiplicity_sum, 1);
  EXPECT_EQ(rep.mit, Consistency::consistent);
}

TEST(Mit, ConsistentBeforeConjugatePoint) {
  Radial r(2);
  const auto rep = mit_verify(r.sys, r.geo, 0.3, 16);
  EXPECT_EQ(rep.index, 0);
  EXPECT_TRUE(rep.scan.points.empty());
  EXPECT_EQ(rep.mit, Consistency::consistent);
}

TEST(Mit, AnisotropicStaircase) {
  const auto sys = make_anisotropic(2, 0.5, {1.0, 2.0});
  const double a = 0.75;
  const auto geo = boundary_start(sys, axis(2), a);
  const auto rep = mit_verify(sys, geo, a, 48);
  ASSERT_EQ(rep.scan.points.size(), 2u);
  EXPECT_NEAR(rep.scan.points[0].s, oracle::kAnisoConjugateArc1, 1e-3);
  EXPECT_NEAR(rep.scan.points[1].s, oracle::kAnisoConjugateArc2, 1e-3);
  EXPECT_EQ(rep.index, 2);
  EXPECT_EQ(rep.mit, Consistency::consistent);
  EXPECT_TRUE(rep.scan.monotone);
  EXPECT_TRUE(rep.scan.jumps_match_nullity);
}

TEST(Positivity, SmallIntervalsArePositive) {
  Radial r(2);
  const auto pos = small_interval_positivity(r.sys, r.geo, kMitArc, 8);
  EXPECT_GT(pos.s_hat, 0.0);
  EXPECT_NEAR(pos.s_hat, oracle::kIsoConjugateArc, 1e-3);
  ASSERT_FALSE(pos.lambda_min.empty());
  for (double l : pos.lambda_min) EXPECT_GT(l, 0.0);
}

TEST(Broken, AgreesWithEigencount) {
  for (int dim : {2, 3}) {
    Radial r(dim);
    const auto br = broken_jacobi_index(r.sys, r.geo, kMitArc);
    const auto mc = morse_index(assemble_index_form(r.sys, r.geo, kMitArc));
    EXPECT_EQ(br.index, mc.index) << dim;
    EXPECT_EQ(br.nullity, mc.nullity) << dim;
    EXPECT_EQ(br.dimension, static_cast<int>(br.subdivision_t.size() - 2) * dim);
    EXPECT_LE(broken_orthogonality(r.sys, r.geo, br), 1e-6);
  }
}

TEST(Broken, NoConjugatePointsGivesZero) {
  Radial r(2);
  const auto br = broken_jacobi_index(r.sys, r.geo, 0.3);
  EXPECT_EQ(br.index, 0);
  EXPECT_EQ(br.nullity, 0);
}

TEST(Broken, RefinedSubdivisionKeepsIndex) {
  Radial r(2);
  const auto coarse = broken_jacobi_index(r.sys, r.geo, kMitArc);
  std::vector<double> fine;
  for (std::size_t i = 0; i + 1 < coarse.subdivision_s.size(); ++i) {
    fine.push_back(coarse.subdivision_s[i]);
    fine.push_back(0.5 * (coarse.subdivision_s[i] + coarse.subdivision_s[i + 1]));
  }
  fine.push_back(coarse.subdivision_s.back());
  const auto refined = broken_jacobi_index(r.sys, r.geo, kMitArc, fine);
  EXPECT_EQ(refined.index, coarse.index);
  EXPECT_EQ(refined.nullity, coarse.nullity);
  EXPECT_GT(refined.dimension, coarse.dimension);
}
