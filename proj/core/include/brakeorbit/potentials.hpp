#pragma once

#include "brakeorbit/geometry.hpp"

#include <string>
#include <vector>

namespace brakeorbit {

// Monomial sum  sum_m c_m prod_i q_i^{p_mi}  with exact derivatives.
class Polynomial {
 public:
  struct Term {
    double coef = 0.0;
    std::vector<int> powers;
  };

  Polynomial(int dim, std::vector<Term> terms);

  int dim() const { return dim_; }
  const std::vector<Term>& terms() const { return terms_; }
  double value(const Vec& q) const;
  Vec gradient(const Vec& q) const;
  Mat hessian(const Vec& q) const;

 private:
  int dim_;
  std::vector<Term> terms_;
};

enum class MetricKind { euclidean, exp_x1, quadratic_x1, sphere };

MetricKind parse_metric_kind(const std::string& name);
const char* to_string(MetricKind kind);

// Attaches the metric to a system; flat_metric is set accordingly.
void set_metric(PotentialSystem& sys, MetricKind kind);

PotentialSystem make_polynomial_system(const std::string& name, const Polynomial& poly, double energy,
                                       const Box& box);

// V = |q|^2 / 2.
PotentialSystem make_harmonic(int dim, double energy);

// V = sum_i omega_i^2 q_i^2 / 2, default omega = (1, 2, 3, ...).
PotentialSystem make_anisotropic(int dim, double energy, std::vector<double> omega = {});

// V = (q_1^2 - 1)^2 + sum_{i>1} q_i^2 / 2.
PotentialSystem make_double_well(int dim, double energy);

// Builtin lookup by name: harmonic, anisotropic, double_well.
PotentialSystem make_builtin(const std::string& name, int dim, double energy);

std::vector<std::string> builtin_names();

}  // namespace brakeorbit
