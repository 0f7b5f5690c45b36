#include "consonance/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace consonance {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kCurvature = 0.9;
constexpr int kMaxLineSearchSteps = 40;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct Trial {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;
  std::vector<double> x;
  std::vector<double> gradient;
};

class LineSearch {
 public:
  LineSearch(const Objective& f, std::span<const double> x, std::span<const double> direction, int& evaluations)
      : f_(f), x_(x), direction_(direction), evaluations_(evaluations) {}

  Trial evaluate(double step) const {
    Trial t;
    t.step = step;
    t.x.resize(x_.size());
    t.gradient.resize(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) t.x[i] = x_[i] + step * direction_[i];
    t.value = f_(t.x, t.gradient);
    t.slope = dot(t.gradient, direction_);
    ++evaluations_;
    return t;
  }

  // Strong-Wolfe search; falls back to the best decreasing trial.
  std::optional<Trial> run(const Trial& origin, double initial_step) const {
    Trial prev = origin;
    double step = initial_step;
    std::optional<Trial> best;
    for (int i = 0; i < kMaxLineSearchSteps; ++i) {
      Trial t = evaluate(step);
      if (!std::isfinite(t.value)) {
        step *= 0.5;
        continue;
      }
      if (t.value < origin.value && (!best || t.value < best->value)) best = t;
      if (t.value > origin.value + kArmijo * step * origin.slope || (i > 0 && t.value >= prev.value)) {
        return zoom(origin, prev, t, best);
      }
      if (std::abs(t.slope) <= -kCurvature * origin.slope) return t;
      if (t.slope >= 0.0) return zoom(origin, t, prev, best);
      prev = std::move(t);
      step *= 2.0;
    }
    return best;
  }

 private:
  std::optional<Trial> zoom(const Trial& origin, Trial lo, Trial hi, std::optional<Trial> best) const {
    for (int i = 0; i < kMaxLineSearchSteps; ++i) {
      const double step = interpolate(lo, hi);
      Trial t = evaluate(step);
      if (std::isfinite(t.value) && t.value < origin.value && (!best || t.value < best->value)) best = t;
      if (!std::isfinite(t.value) || t.value > origin.value + kArmijo * step * origin.slope ||
          t.value >= lo.value) {
        hi = std::move(t);
      } else {
        if (std::abs(t.slope) <= -kCurvature * origin.slope) return t;
        if (t.slope * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = std::move(t);
      }
      if (std::abs(hi.step - lo.step) <= 1e-16 * std::max(1.0, std::abs(lo.step))) break;
    }
    return best;
  }

  // Cubic interpolation of the two bracket ends, kept inside the middle 80%.
  static double interpolate(const Trial& a, const Trial& b) {
    const double lo = std::min(a.step, b.step);
    const double hi = std::max(a.step, b.step);
    const double margin = 0.1 * (hi - lo);
    double step = 0.5 * (lo + hi);
    if (std::isfinite(a.value) && std::isfinite(b.value)) {
      const double d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.step - b.step);
      const double disc = d1 * d1 - a.slope * b.slope;
      if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
        const double denom = b.slope - a.slope + 2.0 * d2;
        if (denom != 0.0) {
          const double c = b.step - (b.step - a.step) * (b.slope + d2 - d1) / denom;
          if (std::isfinite(c)) step = c;
        }
      }
    }
    return std::clamp(step, lo + margin, hi - margin);
  }

  const Objective& f_;
  std::span<const double> x_;
  std::span<const double> direction_;
  int& evaluations_;
};

}  // namespace

constexpr int kStallSteps = 3;

BfgsResult minimize_bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& options) {
  const std::size_t n = x0.size();
  BfgsResult result;
  result.x = std::move(x0);
  result.gradient.assign(n, 0.0);
  result.value = f(result.x, result.gradient);
  result.evaluations = 1;
  if (max_norm(result.gradient) < options.gradient_tolerance) {
    result.converged = true;
    return result;
  }

  // Inverse Hessian approximation, row-major.
  std::vector<double> h(n * n, 0.0);
  auto reset = [&](double scale) {
    std::fill(h.begin(), h.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) h[i * n + i] = scale;
  };
  reset(1.0);
  bool scaled = false;
  int stalled = 0;
  double best_gradient = max_norm(result.gradient);

  std::vector<double> direction(n);
  for (int it = 1; it <= options.max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s -= h[i * n + j] * result.gradient[j];
      direction[i] = s;
    }
    double slope = dot(direction, result.gradient);
    if (!(slope < 0.0)) {
      reset(1.0);
      scaled = false;
      for (std::size_t i = 0; i < n; ++i) direction[i] = -result.gradient[i];
      slope = dot(direction, result.gradient);
    }
    const double initial_step = scaled ? 1.0 : std::min(1.0, 1.0 / std::sqrt(dot(result.gradient, result.gradient)));

    Trial origin{0.0, result.value, slope, result.x, result.gradient};
    LineSearch search(f, result.x, direction, result.evaluations);
    std::optional<Trial> next = search.run(origin, initial_step);
    if (!next) break;

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = next->x[i] - result.x[i];
      y[i] = next->gradient[i] - result.gradient[i];
    }
    const double previous = result.value;
    result.x = std::move(next->x);
    result.gradient = std::move(next->gradient);
    result.value = next->value;
    result.iterations = it;

    const double gradient = max_norm(result.gradient);
    if (gradient < options.gradient_tolerance) {
      result.converged = true;
      break;
    }
    // Near the optimum the cost moves by roughly the squared gradient, so tiny
    // cost changes are normal while the gradient is still shrinking.
    const double scale = std::max({std::abs(previous), std::abs(result.value), 1.0});
    const bool flat = std::abs(previous - result.value) / scale < options.relative_cost_tolerance;
    stalled = flat && gradient >= best_gradient ? stalled + 1 : 0;
    best_gradient = std::min(best_gradient, gradient);
    if (stalled >= kStallSteps) break;

    const double sy = dot(s, y);
    if (!(sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y)))) continue;
    if (!scaled) {
      reset(sy / dot(y, y));
      scaled = true;
    }
    // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
    const double rho = 1.0 / sy;
    std::vector<double> hy(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) hy[i] += h[i * n + j] * y[j];
    }
    const double yhy = dot(y, hy);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        h[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
      }
    }
  }
  return result;
}

}  // namespace consonance
