#include "brakeorbit/ode.hpp"

#include "brakeorbit/errors.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace brakeorbit {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double error_norm(const Vec& err, const Vec& y0, const Vec& y1, const OdeOptions& o) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(1, err.size())));
}

double initial_step(const Rhs& f, double t0, const Vec& y0, const Vec& f0, double dir,
                    const OdeOptions& o) {
  Vec sc = (o.atol + o.rtol * y0.array().abs()).matrix();
  const double n = static_cast<double>(y0.size());
  const double d0 = std::sqrt((y0.array() / sc.array()).square().sum() / n);
  const double d1 = std::sqrt((f0.array() / sc.array()).square().sum() / n);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  Vec y1 = y0 + dir * h0 * f0;
  Vec f1(y0.size());
  f(t0 + dir * h0, y1, f1);
  const double d2 = std::sqrt(((f1 - f0).array() / sc.array()).square().sum() / n) / h0;
  const double m = std::max(d1, d2);
  const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
  return std::min(100.0 * h0, h1);
}

}  // namespace

void dopri5_step(const Rhs& f, double t, const Vec& y, double h, Vec& y_new, Vec* err,
                 const Vec* k1_in) {
  const Eigen::Index n = y.size();
  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), tmp(n);
  if (k1_in) {
    k1 = *k1_in;
  } else {
    f(t, y, k1);
  }
  tmp = y + h * a21 * k1;
  f(t + c2 * h, tmp, k2);
  tmp = y + h * (a31 * k1 + a32 * k2);
  f(t + c3 * h, tmp, k3);
  tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
  f(t + c4 * h, tmp, k4);
  tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
  f(t + c5 * h, tmp, k5);
  tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
  f(t + h, tmp, k6);
  y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  if (err) {
    Vec k7(n);
    f(t + h, y_new, k7);
    *err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  }
}

DenseSolution::DenseSolution(Rhs rhs, std::vector<double> t, std::vector<Vec> y)
    : rhs_(std::move(rhs)), t_(std::move(t)), y_(std::move(y)) {
  if (t_.empty() || t_.size() != y_.size()) {
    throw NumericalError(ErrorCode::interpolation, "dense solution needs matching nodes");
  }
  forward_ = t_.size() < 2 || t_.back() >= t_.front();
}

std::size_t DenseSolution::locate(double t) const {
  // Index k of the left node with t in [t_k, t_{k+1}] (in integration order).
  if (forward_) {
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t k = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
    return std::min(k, t_.size() - 1);
  }
  auto it = std::upper_bound(t_.begin(), t_.end(), t, std::greater<double>());
  std::size_t k = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
  return std::min(k, t_.size() - 1);
}

void DenseSolution::eval(double t, Vec& out) const {
  const double lo = std::min(t_.front(), t_.back());
  const double hi = std::max(t_.front(), t_.back());
  const double span = hi - lo;
  if (t < lo - 1e-12 * (1.0 + span) || t > hi + 1e-12 * (1.0 + span)) {
    std::ostringstream os;
    os << "requested t=" << t << " outside [" << lo << ", " << hi << "]";
    throw NumericalError(ErrorCode::interpolation, os.str());
  }
  const std::size_t k = locate(t);
  const double h = t - t_[k];
  if (h == 0.0) {
    out = y_[k];
    return;
  }
  dopri5_step(rhs_, t_[k], y_[k], h, out);
}

Vec DenseSolution::operator()(double t) const {
  Vec out;
  eval(t, out);
  return out;
}

OdeResult integrate(const Rhs& f, double t0, const Vec& y0, double t_end, const OdeOptions& opts,
                    const OdeEvent* event, const std::function<bool(const Vec&)>& guard) {
  const double dir = t_end >= t0 ? 1.0 : -1.0;
  std::vector<double> ts{t0};
  std::vector<Vec> ys{y0};
  OdeResult res;
  if (t_end == t0) {
    res.solution = std::make_shared<DenseSolution>(f, ts, ys);
    return res;
  }
  Vec k1(y0.size());
  f(t0, y0, k1);
  double h = opts.initial_step > 0 ? opts.initial_step : initial_step(f, t0, y0, k1, dir, opts);
  const double span = std::abs(t_end - t0);
  if (opts.max_step > 0) h = std::min(h, opts.max_step);
  h = std::min(h, span);

  double t = t0;
  Vec y = y0, y_new(y0.size()), err(y0.size());
  double g_prev = event ? event->g(t, y) : 0.0;
  double err_prev = 1e-4;

  while (dir * (t_end - t) > 0) {
    if (res.steps + res.rejected > opts.max_steps) {
      throw NumericalError(ErrorCode::stiffness, "step budget exhausted");
    }
    const double remaining = std::abs(t_end - t);
    if (h >= remaining * (1 - 1e-12)) h = remaining;
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      std::ostringstream os;
      os << "step size underflow at t=" << t;
      throw NumericalError(ErrorCode::stiffness, os.str());
    }
    dopri5_step(f, t, y, dir * h, y_new, &err, &k1);
    const double en = error_norm(err, y, y_new, opts);
    if (!std::isfinite(en)) {
      h *= 0.25;
      ++res.rejected;
      continue;
    }
    if (en <= 1.0) {
      const double t_new = (h == remaining) ? t_end : t + dir * h;
      if (guard && !guard(y_new)) {
        std::ostringstream os;
        os << "trajectory left the domain box near t=" << t_new;
        throw NumericalError(ErrorCode::escape, os.str());
      }
      ++res.steps;
      bool stop = false;
      if (event) {
        const double g_new = event->g(t_new, y_new);
        const bool up = g_prev < 0.0 && g_new >= 0.0;
        const bool down = g_prev > 0.0 && g_new <= 0.0;
        const bool crossing = (event->direction > 0 && up) || (event->direction < 0 && down) ||
                              (event->direction == 0 && (up || down));
        if (crossing && dir * (t_new - t0) > event->t_min) {
          const double t_left = t;
          const Vec y_left = y;
          auto gfun = [&](double tau) {
            if (tau == t_left) return g_prev;
            Vec yy;
            dopri5_step(f, t_left, y_left, tau - t_left, yy);
            return event->g(tau, yy);
          };
          double a = t_left, b = t_new;
          if (a > b) std::swap(a, b);
          double ga = gfun(a), gb = gfun(b);
          double root = t_new;
          if (ga == 0.0) {
            root = a;
          } else if (gb == 0.0) {
            root = b;
          } else if ((ga < 0) != (gb < 0)) {
            boost::uintmax_t it = 200;
            auto br = boost::math::tools::toms748_solve(
                gfun, a, b, ga, gb, boost::math::tools::eps_tolerance<double>(52), it);
            root = 0.5 * (br.first + br.second);
          }
          Vec y_root;
          dopri5_step(f, t_left, y_left, root - t_left, y_root);
          if (dir * (root - t0) > event->t_min && (!event->accept || event->accept(root, y_root))) {
            if (root != t_left) {
              ts.push_back(root);
              ys.push_back(y_root);
            }
            res.event_fired = true;
            res.event_time = root;
            stop = true;
          }
        }
        g_prev = g_new;
      }
      if (stop) break;
      t = t_new;
      y = y_new;
      ts.push_back(t);
      ys.push_back(y);
      f(t, y, k1);
      // PI step-size controller (Hairer-Wanner constants for DOPRI5).
      const double fac = 0.9 * std::pow(std::max(en, 1e-10), -0.7 / 5) *
                         std::pow(err_prev, 0.4 / 5);
      h *= std::clamp(fac, 0.2, 5.0);
      err_prev = std::max(en, 1e-4);
    } else {
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      ++res.rejected;
    }
    if (opts.max_step > 0) h = std::min(h, opts.max_step);
  }
  res.solution = std::make_shared<DenseSolution>(f, std::move(ts), std::move(ys));
  return res;
}

}  // namespace brakeorbit
