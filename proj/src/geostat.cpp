#include "alphait/geostat.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "alphait/bessel.hpp"
#include "alphait/transforms.hpp"

namespace alphait {

namespace {

constexpr double kZeroLag = 1e-12;

void check_locations(const Eigen::MatrixXd& locations) {
  if (locations.cols() != 2) {
    throw std::invalid_argument("expected planar locations with two columns");
  }
}

Eigen::MatrixXd psd_projection(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * clipped.asDiagonal() *
         es.eigenvectors().transpose();
}

// Ordered pair list (both orientations; self-pairs for lag 0) within
// tolerance of the requested lag.
std::vector<std::pair<int, int>> pairs_at_lag(const Eigen::MatrixXd& locations,
                                              double lag, double tolerance) {
  const int n = static_cast<int>(locations.rows());
  std::vector<std::pair<int, int>> pairs;
  if (lag <= kZeroLag) {
    for (int i = 0; i < n; ++i) pairs.emplace_back(i, i);
    return pairs;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double h = (locations.row(i) - locations.row(j)).norm();
      if (std::abs(h - lag) <= tolerance) {
        pairs.emplace_back(i, j);
        pairs.emplace_back(j, i);
      }
    }
  }
  return pairs;
}

// Cross-moment of two stacked score matrices over a pair set, centering each
// endpoint by its own mean across the pairs.
Eigen::MatrixXd paired_cross_moment(const Eigen::MatrixXd& scores,
                                    const std::vector<std::pair<int, int>>& pairs) {
  const int q = static_cast<int>(scores.cols());
  Eigen::VectorXd mean_first = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd mean_second = Eigen::VectorXd::Zero(q);
  for (const auto& [a, b] : pairs) {
    mean_first += scores.row(a).transpose();
    mean_second += scores.row(b).transpose();
  }
  mean_first /= static_cast<double>(pairs.size());
  mean_second /= static_cast<double>(pairs.size());
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(q, q);
  for (const auto& [a, b] : pairs) {
    cross.noalias() += (scores.row(a).transpose() - mean_first) *
                       (scores.row(b) - mean_second.transpose());
  }
  return cross / static_cast<double>(pairs.size());
}

// Variation matrix estimator over the same pair set: the variance of
// ln x_i(s) - ln x_j(s') about its pair-set mean.
Eigen::MatrixXd paired_variation(const Eigen::MatrixXd& logs,
                                 const std::vector<std::pair<int, int>>& pairs) {
  const int d = static_cast<int>(logs.cols());
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(d, d);
  for (const auto& [a, b] : pairs) {
    mean += logs.row(a).transpose().replicate(1, d) -
            logs.row(b).replicate(d, 1);
  }
  mean /= static_cast<double>(pairs.size());
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(d, d);
  for (const auto& [a, b] : pairs) {
    const Eigen::MatrixXd dev = logs.row(a).transpose().replicate(1, d) -
                                logs.row(b).replicate(d, 1) - mean;
    var += dev.cwiseProduct(dev);
  }
  return var / static_cast<double>(pairs.size());
}

struct KrigingSystem {
  Eigen::MatrixXd matrix;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  int n = 0;
  int p = 0;
};

KrigingSystem build_system(const CovarianceModel& model,
                           const Eigen::MatrixXd& locations) {
  check_locations(locations);
  if (model.structures.empty()) {
    throw std::invalid_argument("cokrige: empty covariance model");
  }
  KrigingSystem sys;
  sys.n = static_cast<int>(locations.rows());
  sys.p = model.variables();
  const int np = sys.n * sys.p;
  sys.matrix = Eigen::MatrixXd::Zero(np + sys.p, np + sys.p);
  for (int i = 0; i < sys.n; ++i) {
    for (int j = i; j < sys.n; ++j) {
      const double h = (locations.row(i) - locations.row(j)).norm();
      const Eigen::MatrixXd c = model.cross_covariance(h);
      sys.matrix.block(i * sys.p, j * sys.p, sys.p, sys.p) = c;
      sys.matrix.block(j * sys.p, i * sys.p, sys.p, sys.p) = c.transpose();
    }
  }
  for (int j = 0; j < sys.n; ++j) {
    for (int l = 0; l < sys.p; ++l) {
      sys.matrix(j * sys.p + l, np + l) = 1.0;
      sys.matrix(np + l, j * sys.p + l) = 1.0;
    }
  }
  sys.lu.compute(sys.matrix);
  if (!(sys.lu.rcond() >= 1e-14)) {
    throw std::runtime_error(
        "cokrige: singular kriging system (duplicate locations?)");
  }
  return sys;
}

Eigen::MatrixXd build_rhs(const CovarianceModel& model,
                          const Eigen::MatrixXd& locations,
                          const Eigen::RowVector2d& target, int p) {
  const int n = static_cast<int>(locations.rows());
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n * p + p, p);
  for (int j = 0; j < n; ++j) {
    const double h = (locations.row(j) - target).norm();
    rhs.block(j * p, 0, p, p) = model.cross_covariance(h);
  }
  rhs.block(n * p, 0, p, p).setIdentity();
  return rhs;
}

}  // namespace

CovarianceFunction CovarianceFunction::nugget() {
  CovarianceFunction f;
  f.kind = Kind::kNugget;
  return f;
}

CovarianceFunction CovarianceFunction::matern(double smoothness, double scale) {
  if (!(smoothness > 0.0) || !(scale > 0.0)) {
    throw std::invalid_argument(
        "matern structure needs positive smoothness and scale");
  }
  CovarianceFunction f;
  f.kind = Kind::kWhittleMatern;
  f.smoothness = smoothness;
  f.scale = scale;
  return f;
}

double CovarianceFunction::operator()(double r) const {
  if (r < 0.0) throw std::domain_error("covariance: negative lag");
  if (kind == Kind::kNugget) return r < kZeroLag ? 1.0 : 0.0;
  return whittle_matern(r / scale, smoothness);
}

int CovarianceModel::variables() const {
  if (structures.empty()) return 0;
  return static_cast<int>(structures.front().coefficient.rows());
}

Eigen::MatrixXd CovarianceModel::cross_covariance(double r) const {
  const int p = variables();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p, p);
  for (const Structure& s : structures) c += s.coefficient * s.function(r);
  return c;
}

EmpiricalVariogram empirical_cross_variogram(const Eigen::MatrixXd& locations,
                                             const Eigen::MatrixXd& scores,
                                             int bins, double max_lag) {
  check_locations(locations);
  const int n = static_cast<int>(locations.rows());
  if (scores.rows() != n) {
    throw std::invalid_argument("variogram: scores do not match locations");
  }
  if (n < 2 || bins < 1) {
    throw std::invalid_argument("variogram: need at least two points");
  }
  if (max_lag <= 0.0) {
    double max_dist = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        max_dist =
            std::max(max_dist, (locations.row(i) - locations.row(j)).norm());
      }
    }
    max_lag = 0.5 * max_dist;
  }
  if (!(max_lag > 0.0)) {
    throw std::invalid_argument("variogram: degenerate location set");
  }

  const int p = static_cast<int>(scores.cols());
  const double width = max_lag / bins;
  EmpiricalVariogram ev;
  ev.bin_centers = Eigen::VectorXd::Zero(bins);
  for (int b = 0; b < bins; ++b) ev.bin_centers[b] = (b + 0.5) * width;
  ev.pair_counts.assign(bins, 0);
  ev.semivariance.assign(bins, Eigen::MatrixXd::Zero(p, p));

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double h = (locations.row(i) - locations.row(j)).norm();
      if (h > max_lag) continue;
      const int b = std::min(bins - 1, static_cast<int>(h / width));
      const Eigen::VectorXd diff = (scores.row(i) - scores.row(j)).transpose();
      ev.semivariance[b].noalias() += diff * diff.transpose();
      ++ev.pair_counts[b];
    }
  }
  bool any = false;
  ev.sparse_bin.assign(bins, true);
  for (int b = 0; b < bins; ++b) {
    if (ev.pair_counts[b] > 0) {
      ev.semivariance[b] /= 2.0 * ev.pair_counts[b];
      any = true;
    }
    ev.sparse_bin[b] = ev.pair_counts[b] < 30;
  }
  if (!any) {
    throw std::runtime_error("variogram: every lag bin is empty");
  }
  return ev;
}

std::vector<LagCovariances> lag_covariance_matrices(
    const CompositionalField& field, double alpha,
    const std::vector<double>& lags, double tolerance) {
  if (lags.empty()) {
    throw std::invalid_argument("lag_covariance_matrices: no lags requested");
  }
  const int n = field.size();
  const int d = field.dimension();
  if (tolerance <= 0.0) {
    std::vector<double> sorted(lags);
    std::sort(sorted.begin(), sorted.end());
    double gap = sorted.back() > 0.0 ? sorted.back() : 1.0;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      gap = std::min(gap, sorted[i] - sorted[i - 1]);
    }
    tolerance = 0.5 * gap;
  }

  Eigen::MatrixXd logs(n, d);
  Eigen::MatrixXd clr_scores(n, d);
  Eigen::MatrixXd alpha_scores(n, d);
  for (int i = 0; i < n; ++i) {
    const Composition& x = field.compositions[i];
    if (!x.strictly_positive()) {
      throw std::domain_error(
          "lag_covariance_matrices: log-ratio matrices need strictly "
          "positive parts");
    }
    for (int k = 0; k < d; ++k) logs(i, k) = std::log(x[k]);
    clr_scores.row(i) = clr(x).transpose();
    alpha_scores.row(i) = alpha_ct(x, alpha).coords.transpose();
  }

  const Eigen::MatrixXd helmert = transform_basis(d).helmert();
  std::vector<LagCovariances> out;
  out.reserve(lags.size());
  for (const double lag : lags) {
    const auto pairs = pairs_at_lag(field.locations, lag, tolerance);
    if (pairs.empty()) {
      throw std::invalid_argument(
          "lag_covariance_matrices: no location pairs at lag " +
          std::to_string(lag));
    }
    LagCovariances lc;
    lc.lag = lag;
    lc.n_pairs = static_cast<long>(pairs.size());
    lc.variation = paired_variation(logs, pairs);
    lc.clr_cov = paired_cross_moment(clr_scores, pairs);
    lc.ilr_cov = helmert * lc.clr_cov * helmert.transpose();
    lc.alpha_clr_cov = paired_cross_moment(alpha_scores, pairs);
    lc.alpha_ilr_cov = helmert * lc.alpha_clr_cov * helmert.transpose();
    out.push_back(std::move(lc));
  }
  return out;
}

CovarianceModel fit_lmc(const EmpiricalVariogram& ev,
                        const std::vector<CovarianceFunction>& structures,
                        int max_iterations, double relative_tolerance) {
  const int bins = static_cast<int>(ev.bin_centers.size());
  const int m = static_cast<int>(structures.size());
  if (m == 0) throw std::invalid_argument("fit_lmc: no structures");
  std::vector<int> usable;
  for (int b = 0; b < bins; ++b) {
    if (ev.pair_counts[b] > 0) usable.push_back(b);
  }
  if (usable.size() < 2) {
    throw std::invalid_argument("fit_lmc: need at least two usable lag bins");
  }
  const int p = static_cast<int>(ev.semivariance[usable.front()].rows());

  // unit-sill variogram value of each structure at each usable bin
  Eigen::MatrixXd g(usable.size(), m);
  Eigen::VectorXd w(usable.size());
  for (std::size_t k = 0; k < usable.size(); ++k) {
    const int b = usable[k];
    w[k] = static_cast<double>(ev.pair_counts[b]);
    for (int s = 0; s < m; ++s) {
      g(k, s) = 1.0 - structures[s](ev.bin_centers[b]);
    }
  }
  for (int s = 0; s < m; ++s) {
    for (int t = s + 1; t < m; ++t) {
      const Eigen::VectorXd a = g.col(s).cwiseProduct(w.cwiseSqrt());
      const Eigen::VectorXd b = g.col(t).cwiseProduct(w.cwiseSqrt());
      const double denom = a.norm() * b.norm();
      if (denom <= 0.0 || a.dot(b) / denom > 1.0 - 1e-10) {
        throw std::invalid_argument(
            "fit_lmc: structures are not identifiable over these bins");
      }
    }
  }

  std::vector<Eigen::MatrixXd> coeff(m, Eigen::MatrixXd::Zero(p, p));
  const auto wss = [&]() {
    double total = 0.0;
    for (std::size_t k = 0; k < usable.size(); ++k) {
      Eigen::MatrixXd r = ev.semivariance[usable[k]];
      for (int s = 0; s < m; ++s) r -= coeff[s] * g(k, s);
      total += w[k] * r.squaredNorm();
    }
    return total;
  };

  double previous = wss();
  for (int it = 0; it < max_iterations; ++it) {
    for (int s = 0; s < m; ++s) {
      Eigen::MatrixXd numerator = Eigen::MatrixXd::Zero(p, p);
      double denominator = 0.0;
      for (std::size_t k = 0; k < usable.size(); ++k) {
        Eigen::MatrixXd r = ev.semivariance[usable[k]];
        for (int t = 0; t < m; ++t) {
          if (t != s) r -= coeff[t] * g(k, t);
        }
        numerator += w[k] * g(k, s) * r;
        denominator += w[k] * g(k, s) * g(k, s);
      }
      if (denominator > 0.0) {
        coeff[s] = psd_projection(numerator / denominator);
      }
    }
    const double current = wss();
    if (previous - current <= relative_tolerance * previous) {
      previous = current;
      break;
    }
    previous = current;
  }

  CovarianceModel model;
  for (int s = 0; s < m; ++s) {
    model.structures.push_back({structures[s], coeff[s]});
  }
  model.fitted_wss = previous;
  return model;
}

CovarianceModel fit_default_model(const EmpiricalVariogram& ev,
                                  double smoothness, bool include_nugget) {
  const int bins = static_cast<int>(ev.bin_centers.size());
  double h_min = -1.0, h_max = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (ev.pair_counts[b] == 0) continue;
    if (h_min < 0.0) h_min = ev.bin_centers[b];
    h_max = ev.bin_centers[b];
  }
  if (h_min <= 0.0 || h_max <= h_min) {
    throw std::invalid_argument("fit_default_model: degenerate variogram");
  }
  CovarianceModel best;
  double best_wss = std::numeric_limits<double>::infinity();
  const int steps = 25;
  const double lo = std::log(0.5 * h_min), hi = std::log(2.0 * h_max);
  for (int i = 0; i < steps; ++i) {
    const double scale = std::exp(lo + (hi - lo) * i / (steps - 1));
    std::vector<CovarianceFunction> structures;
    if (include_nugget) {
      structures.push_back(CovarianceFunction::nugget());
    }
    structures.push_back(CovarianceFunction::matern(smoothness, scale));
    try {
      CovarianceModel candidate = fit_lmc(ev, structures);
      if (candidate.fitted_wss < best_wss) {
        best_wss = candidate.fitted_wss;
        best = std::move(candidate);
      }
    } catch (const std::invalid_argument&) {
      // a scale collapsing onto the nugget shape is skipped
    }
  }
  if (best.structures.empty()) {
    throw std::runtime_error("fit_default_model: no admissible scale");
  }
  return best;
}

Eigen::MatrixXd cokrige_weights(const CovarianceModel& model,
                                const Eigen::MatrixXd& data_locations,
                                const Eigen::RowVector2d& target) {
  const KrigingSystem sys = build_system(model, data_locations);
  return sys.lu.solve(build_rhs(model, data_locations, target, sys.p));
}

KrigingResult cokrige(const CovarianceModel& model,
                      const Eigen::MatrixXd& data_locations,
                      const Eigen::MatrixXd& data_scores,
                      const Eigen::MatrixXd& targets) {
  check_locations(targets);
  const KrigingSystem sys = build_system(model, data_locations);
  if (data_scores.rows() != data_locations.rows() ||
      data_scores.cols() != sys.p) {
    throw std::invalid_argument("cokrige: scores shape mismatch");
  }
  const int m = static_cast<int>(targets.rows());
  const Eigen::MatrixXd sill = model.cross_covariance(0.0);

  KrigingResult result;
  result.predictions = Eigen::MatrixXd::Zero(m, sys.p);
  result.variances = Eigen::MatrixXd::Zero(m, sys.p);
  Eigen::VectorXd stacked(sys.n * sys.p);
  for (int j = 0; j < sys.n; ++j) {
    stacked.segment(j * sys.p, sys.p) = data_scores.row(j).transpose();
  }
  for (int t = 0; t < m; ++t) {
    const Eigen::MatrixXd rhs =
        build_rhs(model, data_locations, targets.row(t), sys.p);
    const Eigen::MatrixXd solution = sys.lu.solve(rhs);
    for (int l = 0; l < sys.p; ++l) {
      result.predictions(t, l) =
          stacked.dot(solution.col(l).head(sys.n * sys.p));
      const double variance = sill(l, l) - rhs.col(l).dot(solution.col(l));
      result.variances(t, l) = std::max(0.0, variance);
    }
  }
  return result;
}

}  // namespace alphait
