#pragma once

#include <Eigen/Dense>
#include <functional>

namespace alphait {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Derivative-free simplex search. Stops once the value spread across the
// simplex falls below value_tolerance, or after max_iterations.
NelderMeadResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& start, double initial_step, double value_tolerance,
    int max_iterations);

}  // namespace alphait
