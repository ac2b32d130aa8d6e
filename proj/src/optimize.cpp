#include "alphait/optimize.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace alphait {

NelderMeadResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& start, double initial_step, double value_tolerance,
    int max_iterations) {
  const int n = static_cast<int>(start.size());
  if (n < 1) throw std::invalid_argument("nelder_mead: empty start point");

  std::vector<Eigen::VectorXd> pts(n + 1, start);
  std::vector<double> vals(n + 1);
  for (int i = 1; i <= n; ++i) pts[i][i - 1] += initial_step;
  for (int i = 0; i <= n; ++i) vals[i] = objective(pts[i]);

  std::vector<int> ord(n + 1);
  NelderMeadResult out;
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(),
              [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = ord[0], worst = ord[n], second = ord[n - 1];
    if (vals[worst] - vals[best] <= value_tolerance) {
      out.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += pts[i];
    centroid /= n;

    const Eigen::VectorXd reflected = centroid + (centroid - pts[worst]);
    const double fr = objective(reflected);
    if (fr < vals[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = objective(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    if (fr < vals[worst]) {
      const Eigen::VectorXd outside = centroid + 0.5 * (reflected - centroid);
      const double fo = objective(outside);
      if (fo <= fr) {
        pts[worst] = outside;
        vals[worst] = fo;
        continue;
      }
    } else {
      const Eigen::VectorXd inside = centroid - 0.5 * (centroid - pts[worst]);
      const double fi = objective(inside);
      if (fi < vals[worst]) {
        pts[worst] = inside;
        vals[worst] = fi;
        continue;
      }
    }
    for (int i = 0; i <= n; ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = objective(pts[i]);
    }
  }

  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (vals[i] < vals[best]) best = i;
  out.x = pts[best];
  out.value = vals[best];
  out.iterations = iter;
  return out;
}

}  // namespace alphait
