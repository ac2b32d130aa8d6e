#include "alphait/alpha_mle.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "alphait/transforms.hpp"

namespace alphait {

namespace {

constexpr double kRidge = 1e-10;

bool lexicographic_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

// Canonical sample order so the likelihood is exactly permutation invariant.
std::vector<Composition> sorted_sample(const std::vector<Composition>& xs) {
  std::vector<Composition> out(xs);
  std::sort(out.begin(), out.end(),
            [](const Composition& a, const Composition& b) {
              return lexicographic_less(a.parts(), b.parts());
            });
  return out;
}

std::map<ZeroPattern, std::vector<Composition>> group_by_pattern(
    const std::vector<Composition>& xs) {
  std::map<ZeroPattern, std::vector<Composition>> groups;
  for (const Composition& x : xs) {
    const ZeroPattern pattern = zero_pattern(x);
    if (!pattern.admissible()) continue;
    groups[pattern].push_back(x);
  }
  return groups;
}

double group_loglik(const ZeroPattern& pattern,
                    const std::vector<Composition>& members, double alpha) {
  if (pattern.none()) return loglik_alpha(members, alpha);
  std::vector<Composition> sub;
  sub.reserve(members.size());
  for (const Composition& x : members) sub.push_back(subcompose(x, pattern));
  return loglik_alpha(sub, alpha);
}

}  // namespace

std::pair<GaussianFit, double> gaussian_loglik(
    const std::vector<Eigen::VectorXd>& zs) {
  const int n = static_cast<int>(zs.size());
  if (n == 0) throw std::invalid_argument("gaussian_loglik: empty sample");
  const int k = static_cast<int>(zs.front().size());
  if (n < k + 1) {
    throw std::invalid_argument(
        "gaussian_loglik: need at least k+1 observations for a full-rank fit");
  }
  GaussianFit fit;
  fit.n = n;
  fit.mean = Eigen::VectorXd::Zero(k);
  for (const Eigen::VectorXd& z : zs) {
    if (z.size() != k) {
      throw std::invalid_argument("gaussian_loglik: ragged sample");
    }
    fit.mean += z;
  }
  fit.mean /= static_cast<double>(n);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
  for (const Eigen::VectorXd& z : zs) {
    const Eigen::VectorXd c = z - fit.mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= static_cast<double>(n);
  double mean_sq = 0.0;
  for (const Eigen::VectorXd& z : zs) mean_sq += z.squaredNorm();
  mean_sq /= static_cast<double>(n);
  const double trace = cov.trace();
  // a trace at rounding-noise level means the sample is constant
  if (!(trace > 1e-28 * std::max(1.0, mean_sq))) {
    throw std::runtime_error("gaussian_loglik: singular covariance");
  }
  cov.diagonal().array() += kRidge * trace / k;
  fit.covariance = cov;

  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("gaussian_loglik: covariance not positive definite");
  }
  double logdet = 0.0;
  for (int i = 0; i < k; ++i) logdet += std::log(llt.matrixL()(i, i));
  logdet *= 2.0;

  double quad = 0.0;
  for (const Eigen::VectorXd& z : zs) {
    const Eigen::VectorXd c = z - fit.mean;
    quad += c.dot(llt.solve(c));
  }
  const double loglik = -0.5 * n * logdet - 0.5 * quad;
  if (!std::isfinite(loglik)) {
    throw std::runtime_error("gaussian_loglik: non-finite log-likelihood");
  }
  return {fit, loglik};
}

double loglik_alpha(const std::vector<Composition>& xs, double alpha) {
  const int n = static_cast<int>(xs.size());
  if (n == 0) throw std::invalid_argument("loglik_alpha: empty sample");
  const int d = xs.front().dimension();
  if (n < d) {
    throw std::invalid_argument("loglik_alpha: need at least D observations");
  }
  const std::vector<Composition> sorted = sorted_sample(xs);
  std::vector<Eigen::VectorXd> zs;
  zs.reserve(sorted.size());
  double jacobian_sum = 0.0;
  for (const Composition& x : sorted) {
    if (x.dimension() != d) {
      throw std::invalid_argument("loglik_alpha: mixed dimensions");
    }
    if (!x.strictly_positive()) {
      throw std::domain_error(
          "loglik_alpha: sample must be strictly positive; use the "
          "zero-pattern decomposition for data with zeros");
    }
    zs.push_back(alpha_it(x, alpha).coords);
    const double logdet = alpha_it_jacobian_logdet(x, alpha);
    if (!std::isfinite(logdet)) {
      throw std::runtime_error("loglik_alpha: degenerate Jacobian");
    }
    jacobian_sum += logdet;
  }
  return gaussian_loglik(zs).second + jacobian_sum;
}

double loglik_alpha_with_zeros(const std::vector<Composition>& xs,
                               double alpha) {
  if (xs.empty()) {
    throw std::invalid_argument("loglik_alpha_with_zeros: empty sample");
  }
  const auto groups = group_by_pattern(xs);
  double total = 0.0;
  bool any = false;
  for (const auto& [pattern, members] : groups) {
    if (static_cast<int>(members.size()) < pattern.positive_count()) continue;
    total += group_loglik(pattern, members, alpha);
    any = true;
  }
  if (!any) {
    throw std::runtime_error(
        "loglik_alpha_with_zeros: every zero-pattern group is too small");
  }
  return total;
}

AlphaEstimate estimate_alpha(const std::vector<Composition>& xs,
                             double alpha_max, double grid_step) {
  if (!(grid_step > 0.0) || !(alpha_max >= grid_step)) {
    throw std::invalid_argument("estimate_alpha: bad grid");
  }
  AlphaEstimate est;
  const auto groups = group_by_pattern(xs);
  std::vector<std::pair<ZeroPattern, std::vector<Composition>>> usable;
  for (const auto& [pattern, members] : groups) {
    est.pattern_counts[pattern] = static_cast<int>(members.size());
    if (static_cast<int>(members.size()) < pattern.positive_count()) {
      est.skipped_patterns.push_back(pattern);
    } else {
      usable.emplace_back(pattern, members);
    }
  }
  if (usable.empty()) {
    throw std::runtime_error("estimate_alpha: no usable zero-pattern group");
  }

  const auto profile_at = [&](double alpha) {
    double total = 0.0;
    for (const auto& [pattern, members] : usable) {
      total += group_loglik(pattern, members, alpha);
    }
    return total;
  };
  const auto profile_or_ninf = [&](double alpha) {
    try {
      return profile_at(alpha);
    } catch (const std::exception&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  const int points = static_cast<int>(alpha_max / grid_step + 1e-9);
  int best_index = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= points; ++i) {
    const double alpha = grid_step * i;
    const double value = profile_or_ninf(alpha);
    est.profile.emplace_back(alpha, value);
    if (value > best_value) {
      best_value = value;
      best_index = i - 1;
    }
  }
  if (best_index < 0 || !std::isfinite(best_value)) {
    throw std::runtime_error("estimate_alpha: likelihood undefined on grid");
  }

  double lo = est.profile[std::max(0, best_index - 1)].first;
  double hi = est.profile[std::min<int>(est.profile.size() - 1, best_index + 1)]
                  .first;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = profile_or_ninf(x1);
  double f2 = profile_or_ninf(x2);
  while (hi - lo > 1e-4) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = profile_or_ninf(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = profile_or_ninf(x1);
    }
  }
  const double refined = 0.5 * (lo + hi);
  const double refined_value = profile_or_ninf(refined);
  if (refined_value >= best_value) {
    est.alpha_hat = refined;
    est.loglik_at_hat = refined_value;
  } else {
    est.alpha_hat = est.profile[best_index].first;
    est.loglik_at_hat = best_value;
  }
  return est;
}

}  // namespace alphait
