#pragma once

#include <Eigen/Dense>
#include <random>

#include "alphait/composition.hpp"

namespace testutil {

// Dirichlet draw; concentration > 1 keeps parts away from the border.
inline alphait::Composition random_composition(std::mt19937_64& rng, int d,
                                               double concentration = 1.0) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  Eigen::VectorXd v(d);
  for (;;) {
    for (int i = 0; i < d; ++i) v[i] = gamma(rng);
    if (v.minCoeff() > 1e-12 * v.sum()) break;
  }
  return alphait::closure(v);
}

// Random composition with a prescribed number of zero parts.
inline alphait::Composition random_composition_with_zeros(std::mt19937_64& rng,
                                                          int d, int zeros) {
  alphait::Composition x = random_composition(rng, d, 1.0);
  Eigen::VectorXd v = x.parts();
  std::vector<int> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (int k = 0; k < zeros; ++k) v[idx[k]] = 0.0;
  return alphait::closure(v);
}

inline Eigen::VectorXd random_gaussian(std::mt19937_64& rng, int d,
                                       double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace testutil
