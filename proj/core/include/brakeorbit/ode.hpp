#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <vector>

namespace brakeorbit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Right-hand side y' = f(t, y). Must be pure; dense evaluation may call it
// from several threads at once.
using Rhs = std::function<void(double t, const Vec& y, Vec& dy)>;

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-14;
  double initial_step = 0.0;  // 0 picks a step automatically
  double max_step = 0.0;      // 0 means unbounded
  long max_steps = 2'000'000;
};

// Sign-change event g(t, y). With direction +1 only crossings from negative to
// positive count, -1 the reverse, 0 both. When `accept` returns true at the
// located root the integration stops there.
struct OdeEvent {
  std::function<double(double, const Vec&)> g;
  int direction = 1;
  double t_min = 0.0;
  std::function<bool(double, const Vec&)> accept;
};

// Stored accepted steps of a Dormand-Prince 5(4) integration. Values between
// nodes come from one RK step taken from the left node, so the interpolant is
// exact at nodes and carries the same fifth-order accuracy as the steps.
class DenseSolution {
 public:
  DenseSolution(Rhs rhs, std::vector<double> t, std::vector<Vec> y);

  Vec operator()(double t) const;
  void eval(double t, Vec& out) const;

  double t_front() const { return t_.front(); }
  double t_back() const { return t_.back(); }
  int dim() const { return static_cast<int>(y_.front().size()); }
  const std::vector<double>& times() const { return t_; }
  const std::vector<Vec>& states() const { return y_; }
  const Rhs& rhs() const { return rhs_; }

 private:
  std::size_t locate(double t) const;

  Rhs rhs_;
  std::vector<double> t_;
  std::vector<Vec> y_;
  bool forward_ = true;
};

struct OdeResult {
  std::shared_ptr<const DenseSolution> solution;
  bool event_fired = false;
  double event_time = 0.0;
  long steps = 0;
  long rejected = 0;
};

// One explicit Dormand-Prince step of size h, returning the fifth-order
// solution and, if requested, the embedded error estimate.
void dopri5_step(const Rhs& f, double t, const Vec& y, double h, Vec& y_new, Vec* err = nullptr,
                 const Vec* k1_in = nullptr);

// Adaptive integration from t0 to t_end (either direction). `guard` is called
// on every accepted state; returning false raises an escape error.
OdeResult integrate(const Rhs& f, double t0, const Vec& y0, double t_end, const OdeOptions& opts,
                    const OdeEvent* event = nullptr,
                    const std::function<bool(const Vec&)>& guard = {});

}  // namespace brakeorbit
