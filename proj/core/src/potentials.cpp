#include "brakeorbit/potentials.hpp"

#include "brakeorbit/errors.hpp"

#include <cmath>

namespace brakeorbit {

namespace {

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

Box symmetric_box(const Vec& half_width) {
  Box b;
  b.hi = 1.25 * half_width.array() + 0.25;
  b.lo = -b.hi;
  return b;
}

}  // namespace

Polynomial::Polynomial(int dim, std::vector<Term> terms) : dim_(dim), terms_(std::move(terms)) {
  if (dim_ < 1) throw UsageError("polynomial dimension must be positive");
  for (const auto& t : terms_) {
    if (static_cast<int>(t.powers.size()) != dim_) {
      throw UsageError("polynomial term has wrong number of exponents");
    }
    for (int p : t.powers) {
      if (p < 0) throw UsageError("polynomial exponents must be non-negative");
    }
  }
}

double Polynomial::value(const Vec& q) const {
  double v = 0.0;
  for (const auto& t : terms_) {
    double m = t.coef;
    for (int i = 0; i < dim_; ++i) m *= ipow(q[i], t.powers[i]);
    v += m;
  }
  return v;
}

Vec Polynomial::gradient(const Vec& q) const {
  Vec g = Vec::Zero(dim_);
  for (const auto& t : terms_) {
    for (int d = 0; d < dim_; ++d) {
      if (t.powers[d] == 0) continue;
      double m = t.coef * t.powers[d];
      for (int i = 0; i < dim_; ++i) m *= ipow(q[i], t.powers[i] - (i == d ? 1 : 0));
      g[d] += m;
    }
  }
  return g;
}

Mat Polynomial::hessian(const Vec& q) const {
  Mat h = Mat::Zero(dim_, dim_);
  for (const auto& t : terms_) {
    for (int a = 0; a < dim_; ++a) {
      for (int b = a; b < dim_; ++b) {
        std::vector<int> p = t.powers;
        double m = t.coef;
        m *= p[a];
        p[a] -= 1;
        if (m == 0.0) continue;
        m *= p[b];
        p[b] -= 1;
        if (m == 0.0) continue;
        for (int i = 0; i < dim_; ++i) m *= ipow(q[i], p[i]);
        h(a, b) += m;
        if (a != b) h(b, a) += m;
      }
    }
  }
  return h;
}

MetricKind parse_metric_kind(const std::string& name) {
  if (name == "euclidean") return MetricKind::euclidean;
  if (name == "exp_x1") return MetricKind::exp_x1;
  if (name == "quadratic_x1") return MetricKind::quadratic_x1;
  if (name == "sphere") return MetricKind::sphere;
  throw UsageError("unknown metric '" + name + "'");
}

const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::euclidean: return "euclidean";
    case MetricKind::exp_x1: return "exp_x1";
    case MetricKind::quadratic_x1: return "quadratic_x1";
    case MetricKind::sphere: return "sphere";
  }
  return "euclidean";
}

void set_metric(PotentialSystem& sys, MetricKind kind) {
  const int n = sys.dim;
  switch (kind) {
    case MetricKind::euclidean:
      sys.metric = [n](const Vec&) { return Mat::Identity(n, n); };
      sys.flat_metric = true;
      return;
    case MetricKind::exp_x1:
      sys.metric = [n](const Vec& q) {
        Mat g = Mat::Identity(n, n);
        g(0, 0) = std::exp(2 * q[0]);
        return g;
      };
      sys.flat_metric = false;
      return;
    case MetricKind::quadratic_x1:
      sys.metric = [n](const Vec& q) {
        Mat g = Mat::Identity(n, n);
        g(0, 0) = 1 + q[0] * q[0];
        return g;
      };
      sys.flat_metric = false;
      return;
    case MetricKind::sphere:
      // Stereographic chart of the unit sphere.
      sys.metric = [n](const Vec& q) {
        const double f = 2.0 / (1.0 + q.squaredNorm());
        return Mat(f * f * Mat::Identity(n, n));
      };
      sys.flat_metric = false;
      return;
  }
}

PotentialSystem make_polynomial_system(const std::string& name, const Polynomial& poly, double energy,
                                       const Box& box) {
  PotentialSystem sys;
  sys.name = name;
  sys.dim = poly.dim();
  sys.potential = [poly](const Vec& q) { return poly.value(q); };
  sys.dpotential = [poly](const Vec& q) { return poly.gradient(q); };
  sys.d2potential = [poly](const Vec& q) { return poly.hessian(q); };
  sys.energy = energy;
  sys.domain_box = box;
  sys.reg_band = default_reg_band(energy);
  set_metric(sys, MetricKind::euclidean);
  if (box.lo.size() != sys.dim || box.hi.size() != sys.dim) {
    throw UsageError("domain box dimension does not match the potential");
  }
  return sys;
}

PotentialSystem make_harmonic(int dim, double energy) {
  return make_anisotropic(dim, energy, std::vector<double>(static_cast<std::size_t>(dim), 1.0));
}

PotentialSystem make_anisotropic(int dim, double energy, std::vector<double> omega) {
  if (dim < 1) throw UsageError("dimension must be positive");
  if (!(energy > 0)) throw UsageError("harmonic wells need positive energy");
  if (omega.empty()) {
    for (int i = 0; i < dim; ++i) omega.push_back(i + 1.0);
  }
  if (static_cast<int>(omega.size()) != dim) throw UsageError("omega has wrong length");
  std::vector<Polynomial::Term> terms;
  Vec half(dim);
  bool iso = true;
  for (int i = 0; i < dim; ++i) {
    Polynomial::Term t;
    t.coef = 0.5 * omega[static_cast<std::size_t>(i)] * omega[static_cast<std::size_t>(i)];
    t.powers.assign(static_cast<std::size_t>(dim), 0);
    t.powers[static_cast<std::size_t>(i)] = 2;
    terms.push_back(t);
    half[i] = std::sqrt(2 * energy) / omega[static_cast<std::size_t>(i)];
    iso = iso && omega[static_cast<std::size_t>(i)] == 1.0;
  }
  return make_polynomial_system(iso ? "harmonic" : "anisotropic", Polynomial(dim, terms), energy,
                                symmetric_box(half));
}

PotentialSystem make_double_well(int dim, double energy) {
  if (dim < 1) throw UsageError("dimension must be positive");
  if (!(energy > 0)) throw UsageError("double well needs positive energy");
  std::vector<Polynomial::Term> terms;
  auto mono = [dim](double c, int i, int p) {
    Polynomial::Term t;
    t.coef = c;
    t.powers.assign(static_cast<std::size_t>(dim), 0);
    if (i >= 0) t.powers[static_cast<std::size_t>(i)] = p;
    return t;
  };
  terms.push_back(mono(1.0, 0, 4));
  terms.push_back(mono(-2.0, 0, 2));
  terms.push_back(mono(1.0, -1, 0));
  Vec half(dim);
  half[0] = std::sqrt(1 + std::sqrt(energy));
  for (int i = 1; i < dim; ++i) {
    terms.push_back(mono(0.5, i, 2));
    half[i] = std::sqrt(2 * energy);
  }
  return make_polynomial_system("double_well", Polynomial(dim, terms), energy, symmetric_box(half));
}

PotentialSystem make_builtin(const std::string& name, int dim, double energy) {
  if (name == "harmonic") return make_harmonic(dim, energy);
  if (name == "anisotropic") return make_anisotropic(dim, energy);
  if (name == "double_well") return make_double_well(dim, energy);
  throw UsageError("unknown potential '" + name + "'");
}

std::vector<std::string> builtin_names() { return {"harmonic", "anisotropic", "double_well"}; }

}  // namespace brakeorbit
