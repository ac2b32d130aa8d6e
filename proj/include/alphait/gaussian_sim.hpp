#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "alphait/composition.hpp"

namespace alphait {

// Parsimonious bivariate Whittle-Matern model: direct and cross covariances
// share one smoothness and one scale, C_ab(h) = c_ab W_nu(|h|/s). Valid
// whenever |c_12| <= c_11 = c_22.
struct BivariateMaternParams {
  double direct_sill = 1.0;
  double cross_sill = 0.8;
  double smoothness = 0.5;
  double scale = 1.0;
};

struct ScenarioConfig {
  double alpha0 = 0.2;
  std::string pattern = "center";
  Eigen::Vector2d shift = Eigen::Vector2d::Zero();
  double scale = 1.0;
  int n_points = 2000;
  Eigen::Vector2d domain_min{0.0, 0.0};
  Eigen::Vector2d domain_max{10.0, 10.0};
  BivariateMaternParams model;
  std::uint64_t seed = 0;
};

// Presets named "<pattern>-<alpha0>" with pattern in {center, border, corner}
// and alpha0 in {0, 0.2, 0.6, 1}, e.g. "center-0.2" or "corner-1". Shift and
// scale pairs follow the simulation protocol table; everything else keeps the
// defaults above.
ScenarioConfig scenario_preset(const std::string& name, std::uint64_t seed = 0);

// Mixes a stream tag into a base seed (splitmix64 finalizer) so locations,
// field values, zero injection and independent replicates each get their own
// decorrelated generator while staying reproducible from one user seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

struct GaussianField {
  Eigen::MatrixXd locations;  // n x 2
  Eigen::MatrixXd scores;     // n x 2
};

// n points drawn uniformly in the rectangle, one row per point.
Eigen::MatrixXd uniform_locations(int n, const Eigen::Vector2d& lower,
                                  const Eigen::Vector2d& upper,
                                  std::uint64_t seed);

// Factorizes the stacked 2n x 2n covariance of the bivariate field at fixed
// locations once (dense Cholesky, jitter 1e-10 times the mean diagonal), so
// replicate draws at the same locations cost one triangular product each.
class GrfSampler {
 public:
  GrfSampler(Eigen::MatrixXd locations, const BivariateMaternParams& model);
  const Eigen::MatrixXd& locations() const { return locations_; }
  Eigen::MatrixXd draw(std::uint64_t seed) const;

 private:
  Eigen::MatrixXd locations_;
  Eigen::MatrixXd cholesky_;
};

// Draws n uniform locations in the domain and one realization of the
// bivariate Gaussian random field with the configured covariance.
// Deterministic given config.seed.
GaussianField simulate_grf(const ScenarioConfig& config);

// Shift/scale map z -> scale * (z - shift), applied row-wise. For alpha0 > 0
// every mapped point is verified to lie in the alpha0 codomain (inverse
// residual <= 1e-8); a point outside raises with its index and coordinates.
Eigen::MatrixXd apply_scenario(const Eigen::MatrixXd& scores,
                               const ScenarioConfig& config);

// Back-transforms each score row to a 3-part composition with the inverse
// alpha0 transformation (ILR inverse below the small-alpha switch).
CompositionalField to_compositions(const Eigen::MatrixXd& locations,
                                   const Eigen::MatrixXd& scores,
                                   double alpha0);

// Relative weights of one-zero versus two-zero rows among the affected
// subset; only the ratio matters, so proportions of the whole field (say
// 0.31 and 0.12) can be passed as-is alongside fraction 0.43.
struct ZeroInjectionMix {
  double one_zero = 1.0;
  double two_zero = 0.0;
};

// Zeroes the smallest one or two parts of a random subset of round(fraction
// * n) compositions, re-closing each. Points that cannot lose the requested
// number of parts while keeping at least two positive ones are passed over
// and another candidate is drawn; a two-zero draw on a too-small composition
// downgrades to one zero. Deterministic given seed.
CompositionalField inject_zeros(const CompositionalField& field,
                                double fraction, const ZeroInjectionMix& mix,
                                std::uint64_t seed);

}  // namespace alphait
