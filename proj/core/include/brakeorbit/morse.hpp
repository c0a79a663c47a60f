#pragma once

#include "brakeorbit/jacobi_geodesic.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace brakeorbit {

// Geometric data along the time lift of a geodesic. w = g(v, v) / 2, which is
// E - V on the energy shell and stays accurate next to the wall.
struct LiftSample {
  double t = 0.0;
  double s = 0.0;
  Vec q, v;
  double w = 0.0;
  Mat g;
  Christoffel gamma;
  Vec dV;    // covector dV
  Vec grad;  // g^{-1} dV
  Mat hess;  // covariant Hessian, lower indices
  Mat rv;    // xi -> R(v, xi) v
};

LiftSample sample_lift(const PotentialSystem& sys, const NaturalTrajectory& lift, double t);

// Index form integrand in lift time for (xi, D_t xi) against (eta, D_t eta).
double index_integrand(const LiftSample& p, const Vec& xi, const Vec& dxi, const Vec& eta, const Vec& deta);

enum class MeshGrading { lift_time, uniform_arc };

struct MeshSpec {
  int cells = 160;
  MeshGrading grading = MeshGrading::lift_time;
};

// Conforming piecewise-linear discretization of the index form on [0, s].
// Cells are uniform in the lift time, which is a cubic grading of the arc
// parameter at the wall. Node 0 carries the tangent directions of the level
// set, the last node is clamped to zero.
struct IndexFormDiscretization {
  int dim = 1;
  double s = 0.0;
  double t_end = 0.0;
  int cells = 0;
  std::vector<double> nodes_t;
  std::vector<double> nodes_s;
  Mat tangent_basis;  // dim x (dim - 1)
  int ndof = 0;
  Mat A;
  Mat B;
  Eigen::SparseMatrix<double> A_sparse;
  Eigen::SparseMatrix<double> B_sparse;
  int quad_points = 0;
  double asymmetry = 0.0;
  std::shared_ptr<const NaturalTrajectory> lift;

  int node_offset(int node) const;  // first dof of an interior node
  int node_dofs(int node) const;
};

IndexFormDiscretization assemble_index_form(const PotentialSystem& sys, const JacobiGeodesic& geo,
                                            double s, const MeshSpec& mesh = {});

struct FieldValue {
  Vec xi;
  Vec dxi;  // covariant derivative along the parameter in use
};

using ArcField = std::function<FieldValue(double s)>;   // xi(s), D xi / ds
using TimeField = std::function<FieldValue(double t)>;  // xi(t), D xi / dt

// Piecewise-linear field with the given coefficients, at lift time t.
FieldValue fe_field(const PotentialSystem& sys, const IndexFormDiscretization& disc, const Vec& coeffs,
                    double t);

// Second variation of the g*-energy along xi on [0, s_end], by quadrature in
// the arc parameter. Cells between consecutive breakpoints; the first ten use
// the substitution sigma = u^3.
double hessian_quadratic(const PotentialSystem& sys, const JacobiGeodesic& geo, const ArcField& xi,
                         const std::vector<double>& breakpoints);

double hessian_quadratic(const PotentialSystem& sys, const IndexFormDiscretization& disc,
                         const Vec& coeffs);

// |I_s(xi, e_k)| / |e_k| for every basis field e_k of the discretization.
std::vector<double> index_form_against_basis(const PotentialSystem& sys, const IndexFormDiscretization& disc,
                                             const TimeField& xi);

struct MorseCount {
  int index = 0;
  int nullity = 0;
  double tol_null = 1e-6;
  double gap = 0.0;  // distance of the closest eigenvalue to +-tol_null
  bool ambiguous = false;
  std::vector<double> smallest;  // up to 8 smallest generalized eigenvalues
  int sturm_index = 0;
  int sturm_nullity = 0;
  bool sturm_agrees = true;
};

MorseCount morse_index(const IndexFormDiscretization& disc, double tol_null = 1e-6);

// Number of generalized eigenvalues below sigma, via LDL^T inertia of A - sigma B.
int sturm_count(const IndexFormDiscretization& disc, double sigma);

Eigen::VectorXd generalized_eigenvalues(const Mat& A, const Mat& B);

struct JacobiFieldSolution {
  std::vector<double> s;
  std::vector<double> t;
  std::vector<Vec> xi;
  std::vector<Vec> dxi_ds;
  std::vector<Vec> dxi_dt;
  double residual = 0.0;  // max relative Jacobi residual over the grid
  double boundary_residual = std::numeric_limits<double>::quiet_NaN();
};

// Linear map M(t) with d/dt [xi; D_t xi] = M [xi; D_t xi] in coordinates.
Mat jacobi_system_matrix(const LiftSample& p);

// Relative residual of the Jacobi equation for a field given in lift time.
double jacobi_residual(const PotentialSystem& sys, const NaturalTrajectory& lift, const TimeField& xi,
                       double t);

JacobiFieldSolution jacobi_field_shoot(const PotentialSystem& sys, const JacobiGeodesic& geo, double s0,
                                       const Vec& xi0, const Vec& dxi0_ds, double s_end, int samples = 200);

JacobiFieldSolution sample_field(const PotentialSystem& sys, const JacobiGeodesic& geo,
                                 const TimeField& xi, const std::vector<double>& s_grid);

struct NullBoundaryResult {
  double residual = 0.0;
  bool inconclusive = false;
  std::vector<double> s;
  std::vector<double> values;
};

NullBoundaryResult null_boundary_check(const PotentialSystem& sys, const JacobiGeodesic& geo,
                                       const JacobiFieldSolution& xi);

// Radial field sqrt(E - V(gamma)) u along a straight boundary-start geodesic,
// u the unit direction of travel.
TimeField radial_gap_field(const PotentialSystem& sys, const JacobiGeodesic& geo);

// s(t) * gamma'(s) and gamma'(s), written in lift time.
TimeField scaling_field(const PotentialSystem& sys, const JacobiGeodesic& geo);
TimeField tangent_field(const PotentialSystem& sys, const JacobiGeodesic& geo);

// Jacobi fields of the boundary-start family: dim - 1 fields from moving the
// start along the level set and the scaling field. Columns of the returned
// values are the fields.
class WallFamily {
 public:
  WallFamily(const PotentialSystem& sys, std::shared_ptr<const NaturalTrajectory> lift, double t_end);
  int count() const { return count_; }
  void eval(double t, Mat& xi, Mat& dxi) const;

 private:
  PotentialSystem sys_;
  std::shared_ptr<const NaturalTrajectory> lift_;
  std::shared_ptr<const DenseSolution> dense_;
  Mat tangent_;
  int count_ = 0;
};

struct StaircaseSample {
  double s = 0.0;
  int index = 0;
  int nullity = 0;
};

struct ConjugatePoint {
  double s = 0.0;
  int multiplicity = 0;
  int nullity = 0;
  double bracket = 0.0;
};

struct MorseOptions {
  MeshSpec mesh{};
  double tol_null = 1e-6;
  double tol_s = 1e-4;
  double bisect_tol = 1e-10;
  int threads = 1;
};

struct ConjugateScan {
  std::vector<StaircaseSample> staircase;
  std::vector<ConjugatePoint> points;
  bool monotone = true;
  bool jumps_match_nullity = true;
};

ConjugateScan conjugate_points(const PotentialSystem& sys, const JacobiGeodesic& geo, double a,
                               int n_samples, const MorseOptions& opts = {});

enum class Consistency { consistent, inconsistent, undetermined };
const char* to_string(Consistency c);

struct MorseReport {
  double a = 0.0;
  int index = 0;
  int nullity = 0;
  MorseCount count;
  ConjugateScan scan;
  int multiplicity_sum = 0;
  Consistency mit = Consistency::undetermined;
  std::string backend = "fe-lift-time";
};

MorseReport mit_verify(const PotentialSystem& sys, const JacobiGeodesic& geo, double a, int n_samples = 64,
                       const MorseOptions& opts = {});

struct PositivityResult {
  double s_hat = 0.0;  // largest s with the discrete form still positive definite
  std::vector<double> s;
  std::vector<double> lambda_min;
};

PositivityResult small_interval_positivity(const PotentialSystem& sys, const JacobiGeodesic& geo, double a,
                                           int samples = 16, const MorseOptions& opts = {});

struct BrokenJacobiOptions {
  int initial_intervals = 4;
  int max_intervals = 64;
  int det_samples = 32;
  int retries = 3;
  double tol_null = 1e-6;
  int gram_panels = 16;
};

struct BrokenSpace;

struct BrokenJacobiResult {
  int index = 0;
  int nullity = 0;
  std::vector<double> subdivision_t;
  std::vector<double> subdivision_s;
  int dimension = 0;
  Mat Q;
  Mat B;
  std::vector<double> eigenvalues;
  double asymmetry = 0.0;
  int retries_used = 0;
  std::shared_ptr<const BrokenSpace> space;
};

BrokenJacobiResult broken_jacobi_index(const PotentialSystem& sys, const JacobiGeodesic& geo, double a,
                                       std::vector<double> subdivision_s = {},
                                       const BrokenJacobiOptions& opts = {});

// max over sampled xi in V- and hat fields eta in V+ (mesh aligned with the
// subdivision) of |I(xi, eta)| / (|xi| |eta|).
double broken_orthogonality(const PotentialSystem& sys, const JacobiGeodesic& geo,
                            const BrokenJacobiResult& broken, int cells_per_interval = 8, int samples = 4,
                            unsigned seed = 7);

}  // namespace brakeorbit
