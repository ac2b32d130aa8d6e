#include "alphait/gaussian_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "alphait/bessel.hpp"
#include "alphait/transforms.hpp"

namespace alphait {

namespace {

constexpr std::uint64_t kLocationStream = 0x1001;
constexpr std::uint64_t kValueStream = 0x1002;
constexpr std::uint64_t kZeroStream = 0x1003;

constexpr double kCodomainResidualTol = 1e-8;

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ScenarioConfig scenario_preset(const std::string& name, std::uint64_t seed) {
  const auto dash = name.find('-');
  const std::string pattern = name.substr(0, dash);
  const std::string alpha_token =
      dash == std::string::npos ? std::string() : name.substr(dash + 1);

  int column;
  if (alpha_token == "0") {
    column = 0;
  } else if (alpha_token == "0.2") {
    column = 1;
  } else if (alpha_token == "0.6") {
    column = 2;
  } else if (alpha_token == "1") {
    column = 3;
  } else {
    throw std::invalid_argument(
        "scenario_preset: unknown preset \"" + name +
        "\"; expected <pattern>-<alpha0> with pattern in {center, border, "
        "corner} and alpha0 in {0, 0.2, 0.6, 1}");
  }

  static const double kAlpha[4] = {0.0, 0.2, 0.6, 1.0};
  static const double kSigmaCenterBorder[4] = {1.0, 0.50, 0.15, 0.065};
  static const double kSigmaCorner[4] = {1.0, 0.38, 0.11, 0.045};

  ScenarioConfig config;
  config.seed = seed;
  config.alpha0 = kAlpha[column];
  config.pattern = pattern;
  if (pattern == "center") {
    config.shift = Eigen::Vector2d(0.0, 0.0);
    config.scale = kSigmaCenterBorder[column];
  } else if (pattern == "border") {
    config.shift = Eigen::Vector2d(-2.3, 1.0);
    config.scale = kSigmaCenterBorder[column];
  } else if (pattern == "corner") {
    config.shift = Eigen::Vector2d(4.0, -3.0);
    config.scale = kSigmaCorner[column];
  } else {
    throw std::invalid_argument(
        "scenario_preset: unknown pattern \"" + pattern +
        "\"; expected center, border or corner");
  }
  return config;
}

Eigen::MatrixXd uniform_locations(int n, const Eigen::Vector2d& lower,
                                  const Eigen::Vector2d& upper,
                                  std::uint64_t seed) {
  if (n < 1) {
    throw std::invalid_argument("uniform_locations: n must be positive");
  }
  if (!(upper.x() > lower.x()) || !(upper.y() > lower.y())) {
    throw std::invalid_argument("uniform_locations: domain rectangle is empty");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(lower.x(), upper.x());
  std::uniform_real_distribution<double> uy(lower.y(), upper.y());
  Eigen::MatrixXd locations(n, 2);
  for (int i = 0; i < n; ++i) {
    locations(i, 0) = ux(rng);
    locations(i, 1) = uy(rng);
  }
  return locations;
}

GrfSampler::GrfSampler(Eigen::MatrixXd locations,
                       const BivariateMaternParams& m)
    : locations_(std::move(locations)) {
  const int n = static_cast<int>(locations_.rows());
  if (n < 1 || locations_.cols() != 2) {
    throw std::invalid_argument("GrfSampler: locations must be n x 2, n >= 1");
  }
  if (n > 5000) {
    throw std::invalid_argument(
        "GrfSampler: point count exceeds the dense-Cholesky bound of 5000");
  }
  if (!(m.direct_sill > 0.0) || !(m.smoothness > 0.0) || !(m.scale > 0.0)) {
    throw std::invalid_argument(
        "GrfSampler: direct sill, smoothness and scale must be positive");
  }
  if (!(std::abs(m.cross_sill) <= m.direct_sill)) {
    throw std::invalid_argument(
        "GrfSampler: |cross sill| must not exceed the direct sill, otherwise "
        "the model is not positive definite");
  }

  // Datum-major stacking: row 2i + a holds variable a at location i.
  Eigen::MatrixXd cov(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double r =
          (locations_.row(i) - locations_.row(j)).norm() / m.scale;
      const double w = whittle_matern(r, m.smoothness);
      const double direct = m.direct_sill * w;
      const double cross = m.cross_sill * w;
      cov(2 * i, 2 * j) = direct;
      cov(2 * i + 1, 2 * j + 1) = direct;
      cov(2 * i, 2 * j + 1) = cross;
      cov(2 * i + 1, 2 * j) = cross;
      if (j != i) {
        cov(2 * j, 2 * i) = direct;
        cov(2 * j + 1, 2 * i + 1) = direct;
        cov(2 * j + 1, 2 * i) = cross;
        cov(2 * j, 2 * i + 1) = cross;
      }
    }
  }
  const double jitter = 1e-10 * cov.diagonal().mean();
  cov.diagonal().array() += jitter;

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error(
        "GrfSampler: covariance matrix is not positive definite after jitter");
  }
  cholesky_ = llt.matrixL();
}

Eigen::MatrixXd GrfSampler::draw(std::uint64_t seed) const {
  const int n = static_cast<int>(locations_.rows());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd eps(2 * n);
  for (int i = 0; i < 2 * n; ++i) {
    eps[i] = gauss(rng);
  }
  const Eigen::VectorXd stacked = cholesky_ * eps;
  Eigen::MatrixXd scores(n, 2);
  for (int i = 0; i < n; ++i) {
    scores(i, 0) = stacked[2 * i];
    scores(i, 1) = stacked[2 * i + 1];
  }
  return scores;
}

GaussianField simulate_grf(const ScenarioConfig& config) {
  GaussianField field;
  field.locations =
      uniform_locations(config.n_points, config.domain_min, config.domain_max,
                        derive_seed(config.seed, kLocationStream));
  const GrfSampler sampler(field.locations, config.model);
  field.scores = sampler.draw(derive_seed(config.seed, kValueStream));
  return field;
}

Eigen::MatrixXd apply_scenario(const Eigen::MatrixXd& scores,
                               const ScenarioConfig& config) {
  if (scores.cols() != 2) {
    throw std::invalid_argument("apply_scenario: scores must have 2 columns");
  }
  if (!(config.scale > 0.0)) {
    throw std::invalid_argument("apply_scenario: scale must be positive");
  }
  Eigen::MatrixXd mapped =
      config.scale * (scores.rowwise() - config.shift.transpose());

  if (config.alpha0 >= kIlrSwitchAlpha) {
    for (Eigen::Index i = 0; i < mapped.rows(); ++i) {
      const InverseResult inverse =
          alpha_it_inverse(mapped.row(i).transpose(), config.alpha0);
      if (!(inverse.residual <= kCodomainResidualTol)) {
        char buffer[224];
        std::snprintf(buffer, sizeof(buffer),
                      "apply_scenario: point %ld at z = (%.6g, %.6g) lies "
                      "outside the alpha = %.6g codomain; reduce the scale or "
                      "move the shift",
                      static_cast<long>(i), mapped(i, 0), mapped(i, 1),
                      config.alpha0);
        throw std::invalid_argument(buffer);
      }
    }
  }
  return mapped;
}

CompositionalField to_compositions(const Eigen::MatrixXd& locations,
                                   const Eigen::MatrixXd& scores,
                                   double alpha0) {
  if (locations.rows() != scores.rows()) {
    throw std::invalid_argument(
        "to_compositions: locations and scores must have the same number of "
        "rows");
  }
  std::vector<Composition> compositions;
  compositions.reserve(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const Eigen::VectorXd z = scores.row(i).transpose();
    if (alpha0 < kIlrSwitchAlpha) {
      compositions.push_back(ilr_inverse(z));
      continue;
    }
    const InverseResult inverse = alpha_it_inverse(z, alpha0);
    if (!inverse.converged) {
      throw std::runtime_error(
          "to_compositions: inverse transformation failed at point " +
          std::to_string(i));
    }
    compositions.push_back(inverse.value);
  }
  return CompositionalField(locations, std::move(compositions));
}

CompositionalField inject_zeros(const CompositionalField& field,
                                double fraction, const ZeroInjectionMix& mix,
                                std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("inject_zeros: fraction must lie in [0, 1)");
  }
  if (mix.one_zero < 0.0 || mix.two_zero < 0.0 ||
      !(mix.one_zero + mix.two_zero > 0.0)) {
    throw std::invalid_argument(
        "inject_zeros: mix weights must be non-negative and not both zero");
  }

  const int n = field.size();
  std::vector<Composition> compositions = field.compositions;
  const int affected = static_cast<int>(std::lround(fraction * n));
  if (affected == 0) {
    return CompositionalField(field.locations, std::move(compositions));
  }

  int remaining_two = static_cast<int>(
      std::lround(affected * mix.two_zero / (mix.one_zero + mix.two_zero)));
  int remaining_one = affected - remaining_two;

  std::mt19937_64 rng(derive_seed(seed, kZeroStream));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  for (int idx : order) {
    if (remaining_one + remaining_two == 0) {
      break;
    }
    const Eigen::VectorXd& parts = compositions[idx].parts();
    std::vector<std::pair<double, int>> positive;
    for (int i = 0; i < parts.size(); ++i) {
      if (parts[i] > 0.0) {
        positive.emplace_back(parts[i], i);
      }
    }
    const int positives = static_cast<int>(positive.size());

    int zeros_to_add = 0;
    if (remaining_two > 0 && positives >= 4) {
      zeros_to_add = 2;
      --remaining_two;
    } else if (positives >= 3) {
      // Either a regular one-zero draw, or a two-zero draw downgraded
      // because this composition cannot keep two positive parts otherwise.
      zeros_to_add = 1;
      if (remaining_one > 0) {
        --remaining_one;
      } else {
        --remaining_two;
      }
    } else {
      continue;  // cannot zero anything here; the next candidate replaces it
    }

    std::sort(positive.begin(), positive.end());
    Eigen::VectorXd updated = parts;
    for (int k = 0; k < zeros_to_add; ++k) {
      updated[positive[k].second] = 0.0;
    }
    compositions[idx] = closure(updated);
  }
  return CompositionalField(field.locations, std::move(compositions));
}

}  // namespace alphait
