#include "alphait/composition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace alphait {

namespace {

constexpr double kSumTolerance = 1e-9;
constexpr double kZeroSnap = 1e-15;

Eigen::VectorXd validated_parts(Eigen::VectorXd p) {
  if (p.size() < 2) {
    throw std::invalid_argument("Composition: needs at least 2 parts, got " +
                                std::to_string(p.size()));
  }
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < 0.0) {
      throw std::invalid_argument("Composition: part " + std::to_string(i) +
                                  " is negative or non-finite (" +
                                  std::to_string(p[i]) + ")");
    }
  }
  const double sum = p.sum();
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw std::invalid_argument("Composition: parts sum to " +
                                std::to_string(sum) +
                                ", outside tolerance 1e-9");
  }
  p /= sum;
  // Snap float dust to structural zeros, then re-close the survivors.
  bool snapped = false;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0 && p[i] < kZeroSnap) {
      p[i] = 0.0;
      snapped = true;
    }
  }
  if (snapped) {
    const double s = p.sum();
    if (s <= 0.0) throw std::invalid_argument("Composition: all parts vanish");
    p /= s;
  }
  return p;
}

}  // namespace

Composition::Composition(Eigen::VectorXd parts)
    : parts_(validated_parts(std::move(parts))) {}

Composition::Composition(std::initializer_list<double> parts)
    : Composition(Eigen::Map<const Eigen::VectorXd>(parts.begin(),
                                                    parts.size())) {}

int ZeroPattern::positive_count() const {
  return static_cast<int>(std::count(mask.begin(), mask.end(), false));
}

bool ZeroPattern::none() const {
  return std::none_of(mask.begin(), mask.end(), [](bool b) { return b; });
}

CompositionalField::CompositionalField(Eigen::MatrixXd locs,
                                       std::vector<Composition> comps)
    : locations(std::move(locs)), compositions(std::move(comps)) {
  if (compositions.empty()) {
    throw std::invalid_argument("CompositionalField: empty field");
  }
  if (locations.rows() != static_cast<Eigen::Index>(compositions.size()) ||
      locations.cols() != 2) {
    throw std::invalid_argument(
        "CompositionalField: locations must be n x 2 aligned with "
        "compositions");
  }
  const int d = compositions.front().dimension();
  for (const auto& c : compositions) {
    if (c.dimension() != d) {
      throw std::invalid_argument(
          "CompositionalField: compositions have mixed dimensions");
    }
  }
  std::vector<int> order(compositions.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (locations(a, 0) != locations(b, 0))
      return locations(a, 0) < locations(b, 0);
    return locations(a, 1) < locations(b, 1);
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const int a = order[k - 1], b = order[k];
    if (locations(a, 0) == locations(b, 0) &&
        locations(a, 1) == locations(b, 1)) {
      throw std::invalid_argument(
          "CompositionalField: duplicate location at rows " +
          std::to_string(a) + " and " + std::to_string(b));
    }
  }
}

Composition closure(const Eigen::VectorXd& v) {
  if (v.size() < 2) {
    throw std::invalid_argument("closure: needs at least 2 entries");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0.0) {
      throw std::invalid_argument("closure: entry " + std::to_string(i) +
                                  " is negative or non-finite");
    }
    sum += v[i];
  }
  if (sum <= 0.0) {
    throw std::invalid_argument("closure: all entries are zero");
  }
  return Composition(v / sum);
}

namespace {

Eigen::VectorXd log_parts_checked(const Composition& x, const char* who) {
  if (!x.strictly_positive()) {
    for (int i = 0; i < x.dimension(); ++i) {
      if (x[i] == 0.0) {
        throw std::domain_error(std::string(who) + ": part " +
                                std::to_string(i) +
                                " is zero; operation needs strictly "
                                "positive compositions");
      }
    }
  }
  return x.parts().array().log();
}

Composition close_from_logs(const Eigen::VectorXd& logs) {
  // exp after subtracting the max keeps skewed compositions from underflowing
  const Eigen::VectorXd shifted =
      (logs.array() - logs.maxCoeff()).exp();
  return Composition(shifted / shifted.sum());
}

}  // namespace

Composition perturb(const Composition& x, const Composition& y) {
  if (x.dimension() != y.dimension()) {
    throw std::invalid_argument("perturb: dimension mismatch");
  }
  return close_from_logs(log_parts_checked(x, "perturb") +
                         log_parts_checked(y, "perturb"));
}

Composition power(double a, const Composition& x) {
  return close_from_logs(a * log_parts_checked(x, "power"));
}

double aitchison_distance(const Composition& x, const Composition& y) {
  if (x.dimension() != y.dimension()) {
    throw std::invalid_argument("aitchison_distance: dimension mismatch");
  }
  Eigen::VectorXd lx = log_parts_checked(x, "aitchison_distance");
  Eigen::VectorXd ly = log_parts_checked(y, "aitchison_distance");
  lx.array() -= lx.mean();
  ly.array() -= ly.mean();
  return (lx - ly).norm();
}

double geometric_mean(const Composition& x) {
  return std::exp(log_parts_checked(x, "geometric_mean").mean());
}

ZeroPattern zero_pattern(const Composition& x) {
  ZeroPattern p;
  p.mask.resize(x.dimension());
  for (int i = 0; i < x.dimension(); ++i) p.mask[i] = (x[i] == 0.0);
  return p;
}

Composition subcompose(const Composition& x, const ZeroPattern& p) {
  if (p.dimension() != x.dimension()) {
    throw std::invalid_argument("subcompose: pattern dimension mismatch");
  }
  if (p.positive_count() < 2) {
    throw std::invalid_argument(
        "subcompose: pattern leaves fewer than 2 positive parts");
  }
  Eigen::VectorXd sub(p.positive_count());
  int k = 0;
  for (int i = 0; i < x.dimension(); ++i) {
    if ((x[i] == 0.0) != p.mask[i]) {
      throw std::invalid_argument("subcompose: zero pattern mismatch at part " +
                                  std::to_string(i));
    }
    if (!p.mask[i]) sub[k++] = x[i];
  }
  // Removed parts are exact zeros, so the survivors already sum to 1.
  return Composition(std::move(sub));
}

Composition uniform_composition(int dimension) {
  if (dimension < 2) {
    throw std::invalid_argument("uniform_composition: dimension must be >= 2");
  }
  return Composition(
      Eigen::VectorXd::Constant(dimension, 1.0 / dimension));
}

}  // namespace alphait
