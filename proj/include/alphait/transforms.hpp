#pragma once

#include <Eigen/Dense>
#include <random>

#include "alphait/composition.hpp"

namespace alphait {

// Forward formulas lose roughly alpha*ln^2(x) digits to cancellation, so
// below this alpha the transforms delegate to the analytic CLR/ILR limit.
constexpr double kIlrSwitchAlpha = 1e-6;

class TransformBasis {
 public:
  explicit TransformBasis(int dimension);
  int dimension() const { return static_cast<int>(helmert_.cols()); }
  // (D-1) x D matrix with orthonormal rows, each orthogonal to the ones
  // vector. Sign convention: row i carries i leading entries 1/sqrt(i(i+1))
  // followed by -i/sqrt(i(i+1)), then zeros.
  const Eigen::MatrixXd& helmert() const { return helmert_; }
  const Eigen::MatrixXd& centering() const { return centering_; }  // I - J/D

 private:
  Eigen::MatrixXd helmert_;
  Eigen::MatrixXd centering_;
};

// Cached per dimension, one cache per thread.
const TransformBasis& transform_basis(int dimension);

struct EuclideanScores {
  double alpha;
  Eigen::VectorXd coords;
};

Eigen::VectorXd clr(const Composition& x);
Eigen::VectorXd ilr(const Composition& x);
Composition ilr_inverse(const Eigen::VectorXd& z);

EuclideanScores alpha_ct(const Composition& x, double alpha);
EuclideanScores alpha_it(const Composition& x, double alpha);

struct InverseResult {
  Composition value;
  // Distance between the target and the image of the returned composition;
  // positive residual means the target lies outside the codomain and the
  // minimum sits on the border of the simplex.
  double residual;
  bool converged;
};

InverseResult alpha_it_inverse(const Eigen::VectorXd& z, double alpha,
                               std::mt19937_64& rng);
InverseResult alpha_it_inverse(const Eigen::VectorXd& z, double alpha);

// log|det| of the Jacobian of the isometric alpha-transformation in the
// chart (x_1, ..., x_{D-1}); returns -inf for a singular Jacobian.
double alpha_it_jacobian_logdet(const Composition& x, double alpha);

Eigen::VectorXd tsagris_alpha(const Composition& x, double alpha);
Eigen::VectorXd alr_boxcox(const Composition& x, double alpha);

}  // namespace alphait
