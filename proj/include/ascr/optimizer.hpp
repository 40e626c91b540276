#pragma once

#include <functional>
#include <vector>

namespace ascr {

struct OptimizerConfig {
  int max_iterations = 200;
  double gradient_tolerance = 1e-5;  // infinity norm on the transformed scale
  double function_tolerance = 1e-13; // relative change that counts as stalled
  int max_line_search = 60;
};

struct OptimizerResult {
  std::vector<double> x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// f(x, grad) returns the objective to MAXIMIZE; grad is resized to x.size() and filled.
using Objective = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;

/// BFGS ascent with a backtracking Armijo line search. Non-finite trial values are treated
/// as failures and shrink the step. Returns the best point visited.
OptimizerResult maximize_bfgs(const Objective& f, std::vector<double> x0, const OptimizerConfig& config = {});

/// Central differences of `value` at x with step h per coordinate.
std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& value,
                                       const std::vector<double>& x, double h);

}  // namespace ascr
