#pragma once

#include <vector>

#include "alphait/composition.hpp"

namespace alphait {

// Unit-sill correlation structure: either a Whittle-Matern correlation or a
// pure nugget (1 at lag zero, 0 elsewhere).
struct CovarianceFunction {
  enum class Kind { kWhittleMatern, kNugget };
  Kind kind = Kind::kNugget;
  double smoothness = 0.0;
  double scale = 0.0;

  static CovarianceFunction nugget();
  static CovarianceFunction matern(double smoothness, double scale);
  double operator()(double r) const;
};

// Linear model of coregionalization: C(h) = sum_m B_m f_m(h) with PSD
// coefficient matrices B_m.
struct CovarianceModel {
  struct Structure {
    CovarianceFunction function;
    Eigen::MatrixXd coefficient;
  };
  std::vector<Structure> structures;
  double fitted_wss = std::numeric_limits<double>::quiet_NaN();

  int variables() const;
  bool proportional() const { return structures.size() == 1; }
  Eigen::MatrixXd cross_covariance(double r) const;
};

struct EmpiricalVariogram {
  Eigen::VectorXd bin_centers;
  std::vector<long> pair_counts;
  std::vector<Eigen::MatrixXd> semivariance;
  std::vector<bool> sparse_bin;  // fewer than 30 pairs
};

struct LagCovariances {
  double lag = 0.0;
  long n_pairs = 0;
  Eigen::MatrixXd variation;      // T(h), DxD
  Eigen::MatrixXd clr_cov;        // Xi(h), DxD
  Eigen::MatrixXd ilr_cov;        // Phi(h) = H Xi H^T
  Eigen::MatrixXd alpha_clr_cov;  // Xi_alpha(h)
  Eigen::MatrixXd alpha_ilr_cov;  // Phi_alpha(h) = H Xi_alpha H^T
};

struct KrigingResult {
  Eigen::MatrixXd predictions;  // m x p
  Eigen::MatrixXd variances;    // m x p
};

// Omnidirectional cross-variogram over equal-width lag bins. A non-positive
// max_lag selects half the maximum pairwise distance.
EmpiricalVariogram empirical_cross_variogram(const Eigen::MatrixXd& locations,
                                             const Eigen::MatrixXd& scores,
                                             int bins = 15,
                                             double max_lag = -1.0);

// Method-of-moments lag covariance matrices of the log-ratio and alpha
// transformed field. Each lag uses one shared pair set (both orientations,
// self-pairs at lag 0) and endpoint means, which makes the relation
// Xi + Xi^T = -G T G^T hold algebraically. A non-positive tolerance selects
// half the smallest gap between requested lags.
std::vector<LagCovariances> lag_covariance_matrices(
    const CompositionalField& field, double alpha,
    const std::vector<double>& lags, double tolerance = -1.0);

// Iterative weighted least squares (weights = pair counts) with projection
// of every coefficient matrix onto the PSD cone each sweep.
CovarianceModel fit_lmc(const EmpiricalVariogram& ev,
                        const std::vector<CovarianceFunction>& structures,
                        int max_iterations = 500,
                        double relative_tolerance = 1e-8);

// Default pipeline model: nugget plus one Whittle-Matern structure whose
// scale is profiled over a log-spaced grid spanning the variogram lags.
// Dropping the nugget leaves a single Matern structure (proportional model).
CovarianceModel fit_default_model(const EmpiricalVariogram& ev,
                                  double smoothness = 0.5,
                                  bool include_nugget = true);

// Ordinary cokriging weights for one target: the (n*p + p) x p solution of
// the cokriging system (Lagrange multipliers in the last p rows).
Eigen::MatrixXd cokrige_weights(const CovarianceModel& model,
                                const Eigen::MatrixXd& data_locations,
                                const Eigen::RowVector2d& target);

// Global ordinary cokriging of every target location. The system matrix is
// factorized once and reused across targets.
KrigingResult cokrige(const CovarianceModel& model,
                      const Eigen::MatrixXd& data_locations,
                      const Eigen::MatrixXd& data_scores,
                      const Eigen::MatrixXd& targets);

}  // namespace alphait
