#include "alphait/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "alphait/transforms.hpp"

namespace alphait {

namespace {

void check_same_dimension(const Composition& p, const Composition& q,
                          const char* what) {
  if (p.dimension() != q.dimension()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  }
}

}  // namespace

double hellinger(const Composition& p, const Composition& q) {
  check_same_dimension(p, q, "hellinger");
  double sum = 0.0;
  for (int i = 0; i < p.dimension(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    sum += d * d;
  }
  return std::sqrt(0.5 * sum);
}

double total_variation(const Composition& p, const Composition& q) {
  check_same_dimension(p, q, "total_variation");
  double sum = 0.0;
  for (int i = 0; i < p.dimension(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

double alpha_it_distance(const Composition& x, const Composition& y,
                         double alpha) {
  check_same_dimension(x, y, "alpha_it_distance");
  if (alpha <= 0.0) {
    throw std::invalid_argument("alpha_it_distance: alpha must be positive");
  }
  return (alpha_it(x, alpha).coords - alpha_it(y, alpha).coords).norm();
}

Composition frechet_mean(const std::vector<Composition>& xs, double alpha) {
  if (xs.empty()) {
    throw std::invalid_argument("frechet_mean: empty sample");
  }
  const int d = xs.front().dimension();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d - 1);
  for (const Composition& x : xs) {
    check_same_dimension(xs.front(), x, "frechet_mean");
    mean += alpha_it(x, alpha).coords;
  }
  mean /= static_cast<double>(xs.size());
  return alpha_it_inverse(mean, alpha).value;
}

ScoreReport score_predictions(const std::vector<Composition>& truth,
                              const std::vector<Composition>& predicted,
                              double alpha) {
  return score_predictions(truth, predicted, alpha,
                           std::numeric_limits<double>::quiet_NaN());
}

ScoreReport score_predictions(const std::vector<Composition>& truth,
                              const std::vector<Composition>& predicted,
                              double alpha, double sigma) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw std::invalid_argument(
        "score_predictions: need equally many truths and predictions");
  }
  ScoreReport report;
  report.alpha_used = alpha;
  report.sigma = sigma;
  report.n_pairs = static_cast<int>(truth.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    report.hellinger_mean += hellinger(truth[i], predicted[i]);
    report.total_variation_mean += total_variation(truth[i], predicted[i]);
    const double d = alpha_it_distance(truth[i], predicted[i], alpha);
    sq += d * d;
  }
  const double n = static_cast<double>(truth.size());
  report.hellinger_mean /= n;
  report.total_variation_mean /= n;
  report.alpha_it_rmse = std::sqrt(sq / n);
  return report;
}

double pooled_sigma(const std::vector<Eigen::VectorXd>& coords) {
  const long n = static_cast<long>(coords.size());
  if (n < 2) {
    throw std::invalid_argument("pooled_sigma: need at least two vectors");
  }
  const long k = coords.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
  for (const Eigen::VectorXd& v : coords) {
    if (v.size() != k) {
      throw std::invalid_argument("pooled_sigma: ragged coordinates");
    }
    mean += v;
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (const Eigen::VectorXd& v : coords) {
    ss += (v - mean).squaredNorm();
  }
  return std::sqrt(ss / static_cast<double>(k * (n - 1)));
}

}  // namespace alphait
