#pragma once

#include <vector>

#include "alphait/composition.hpp"

namespace alphait {

// Prediction scores over a set of (truth, prediction) pairs. hellinger_mean
// and total_variation_mean are plain averages, alpha_it_rmse is a root mean
// square. sigma is a caller-supplied normalisation (NaN when not set).
struct ScoreReport {
  double hellinger_mean = 0.0;
  double total_variation_mean = 0.0;
  double alpha_it_rmse = 0.0;
  double alpha_used = 0.0;
  double sigma = std::numeric_limits<double>::quiet_NaN();
  int n_pairs = 0;

  double normalized_rmse() const { return alpha_it_rmse / sigma; }
};

double hellinger(const Composition& p, const Composition& q);
double total_variation(const Composition& p, const Composition& q);

// Euclidean distance between isometric alpha-transform images.
double alpha_it_distance(const Composition& x, const Composition& y,
                         double alpha);

// Back-transform of the average transformed image. When the average lies
// outside the transform's codomain the inverse's constrained search returns
// the closest attainable composition, which is the minimizer of the mean
// squared transform-space distance.
Composition frechet_mean(const std::vector<Composition>& xs, double alpha);

ScoreReport score_predictions(const std::vector<Composition>& truth,
                              const std::vector<Composition>& predicted,
                              double alpha);
ScoreReport score_predictions(const std::vector<Composition>& truth,
                              const std::vector<Composition>& predicted,
                              double alpha, double sigma);

// Pooled standard deviation across the coordinates of a set of transformed
// vectors: per-coordinate variances about their own means, pooled into one
// scalar (denominator k*(n-1)).
double pooled_sigma(const std::vector<Eigen::VectorXd>& coords);

}  // namespace alphait
