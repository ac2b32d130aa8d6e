#pragma once

#include <Eigen/Dense>
#include <vector>

namespace alphait {

// A point of the simplex: D non-negative parts summing to one. Zeros are
// permitted; strictly_positive() tells interior points from border ones.
class Composition {
 public:
  explicit Composition(Eigen::VectorXd parts);
  Composition(std::initializer_list<double> parts);

  int dimension() const { return static_cast<int>(parts_.size()); }
  const Eigen::VectorXd& parts() const { return parts_; }
  double operator[](int i) const { return parts_[i]; }
  bool strictly_positive() const { return parts_.minCoeff() > 0.0; }

 private:
  Eigen::VectorXd parts_;
};

struct ZeroPattern {
  std::vector<bool> mask;  // true = part is exactly zero

  int dimension() const { return static_cast<int>(mask.size()); }
  int positive_count() const;
  bool none() const;
  // Patterns leaving fewer than two positive parts are excluded from any
  // likelihood computation.
  bool admissible() const { return positive_count() >= 2; }
  bool operator==(const ZeroPattern&) const = default;
  bool operator<(const ZeroPattern& o) const { return mask < o.mask; }
};

// n planar locations with one composition each. Locations must be pairwise
// distinct and all compositions share the same D.
struct CompositionalField {
  Eigen::MatrixXd locations;  // n x 2
  std::vector<Composition> compositions;

  CompositionalField(Eigen::MatrixXd locs, std::vector<Composition> comps);
  int size() const { return static_cast<int>(compositions.size()); }
  int dimension() const { return compositions.front().dimension(); }
};

Composition closure(const Eigen::VectorXd& v);
Composition perturb(const Composition& x, const Composition& y);
Composition power(double a, const Composition& x);
double aitchison_distance(const Composition& x, const Composition& y);
double geometric_mean(const Composition& x);
ZeroPattern zero_pattern(const Composition& x);
Composition subcompose(const Composition& x, const ZeroPattern& p);

Composition uniform_composition(int dimension);

}  // namespace alphait
