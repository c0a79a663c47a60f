#pragma once

#include "brakeorbit/ode.hpp"

#include <functional>
#include <string>
#include <vector>

namespace brakeorbit {

struct Box {
  Vec lo;
  Vec hi;
  bool contains(const Vec& q) const;
};

// The potential well data (g, V, dV, d2V, E). `dpotential` and
// `d2potential` return coordinate partial derivatives; the g-gradient and
// the covariant Hessian are derived from them.
struct PotentialSystem {
  std::string name;
  int dim = 1;
  std::function<Mat(const Vec&)> metric;
  std::function<double(const Vec&)> potential;
  std::function<Vec(const Vec&)> dpotential;
  std::function<Mat(const Vec&)> d2potential;
  bool flat_metric = true;
  double energy = 0.0;
  Box domain_box;
  double reg_band = 0.05;

  double V(const Vec& q) const { return potential(q); }
  Vec grad_potential(const Vec& q) const;
  Mat hess_potential(const Vec& q) const;
  double gap(const Vec& q) const { return energy - potential(q); }
  void require_in_box(const Vec& q) const;
};

double default_reg_band(double energy);

// Gamma^k_{ij}, stored as dim matrices indexed [k](i, j).
struct Christoffel {
  std::vector<Mat> g;
  Vec contract(const Vec& u, const Vec& v) const;
  bool zero = false;
};

Christoffel christoffel(const PotentialSystem& sys, const Vec& q);

// Matrix of xi -> Gamma(v, xi).
Mat christoffel_along(const Christoffel& G, const Vec& v);

// R^l_{kij} with R(X,Y)Z = X^i Y^j Z^k R^l_{kij} and
// R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z.
struct RiemannTensor {
  int n = 0;
  std::vector<double> r;  // index ((l*n + k)*n + i)*n + j
  bool zero = false;
  double operator()(int l, int k, int i, int j) const { return r[((l * n + k) * n + i) * n + j]; }
  Vec apply(const Vec& X, const Vec& Y, const Vec& Z) const;
};

RiemannTensor riemann(const PotentialSystem& sys, const Vec& q);

// g(R(X,Y)Z, W).
double riemann_quadratic(const PotentialSystem& sys, const Vec& q, const Vec& X, const Vec& Y,
                         const Vec& Z, const Vec& W);

double energy(const PotentialSystem& sys, const Vec& q, const Vec& v);

double finite_difference_step(const Vec& q);

struct ProjectionOptions {
  double tol_proj = 1e-10;
  int max_iter = 50;
};

Vec project_to_boundary(const PotentialSystem& sys, const Vec& q, const ProjectionOptions& opts = {});

// Orthonormal (Euclidean) basis of the hyperplane {xi : dV(q) xi = 0}.
Mat boundary_tangent_basis(const PotentialSystem& sys, const Vec& q);

// First boundary crossing along the ray q + lambda u, lambda > 0.
Vec ray_cast_boundary(const PotentialSystem& sys, const Vec& q, const Vec& u,
                      const ProjectionOptions& opts = {});

// Smallest eigenvalue of g(q); used to check positive definiteness.
double metric_min_eigenvalue(const PotentialSystem& sys, const Vec& q);

}  // namespace brakeorbit
