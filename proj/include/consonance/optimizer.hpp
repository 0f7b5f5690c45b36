#pragma once

#include <functional>
#include <span>
#include <vector>

namespace consonance {

/// Returns f(x) and writes the gradient into grad.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct BfgsOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // max-norm
  double relative_cost_tolerance = 1e-10;
};

struct BfgsResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Quasi-Newton minimization with a strong-Wolfe line search. Converged
/// means the gradient max-norm fell below the tolerance. Three accepted steps
/// in a row with relative cost change below relative_cost_tolerance and no new
/// low in the gradient norm end the run as stalled, which is not converged.
BfgsResult minimize_bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& options = {});

}  // namespace consonance
