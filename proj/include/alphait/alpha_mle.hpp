#pragma once

#include <map>
#include <utility>
#include <vector>

#include "alphait/composition.hpp"

namespace alphait {

// Maximum-likelihood Gaussian fit (divisor n) with a small ridge added to
// the covariance before use; see gaussian_loglik.
struct GaussianFit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  int n = 0;
};

struct AlphaEstimate {
  double alpha_hat = 0.0;
  double loglik_at_hat = 0.0;
  std::vector<std::pair<double, double>> profile;
  std::map<ZeroPattern, int> pattern_counts;
  std::vector<ZeroPattern> skipped_patterns;
};

// Fits a Gaussian by maximum likelihood and returns the fit together with
// the profiled log-likelihood -(n/2) ln|S| - (1/2) sum of quadratic forms
// (no 2*pi constant). The covariance gets a ridge of 1e-10 trace/k on the
// diagonal so near-collinear samples do not abort a scan.
std::pair<GaussianFit, double> gaussian_loglik(
    const std::vector<Eigen::VectorXd>& zs);

// Log-likelihood of alpha for strictly positive compositions: Gaussian
// log-likelihood of the transformed sample plus the log-Jacobian sum.
double loglik_alpha(const std::vector<Composition>& xs, double alpha);

// Decomposed log-likelihood for samples with zeros: compositions are grouped
// by their zero pattern, each group large enough is scored on its own
// sub-simplex, and the group values are summed. Groups with fewer members
// than positive parts are ignored.
double loglik_alpha_with_zeros(const std::vector<Composition>& xs,
                               double alpha);

// Profile scan over [grid_step, alpha_max] followed by golden-section
// refinement of the grid maximum to 1e-4 in alpha.
AlphaEstimate estimate_alpha(const std::vector<Composition>& xs,
                             double alpha_max = 1.5, double grid_step = 0.01);

}  // namespace alphait
