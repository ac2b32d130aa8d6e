#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alphait/composition.hpp"

namespace alphait {

inline constexpr const char* kSoftwareVersion = "alphait 1.0.0";

// Flat key=value experiment description. Unknown or duplicate keys are
// rejected so a typo cannot silently fall back to a default.
struct ExperimentConfig {
  std::string mode;  // study | cv | estimate | krige-map
  std::vector<std::string> alpha_grid;  // numeric tokens, or "ml" for the MLE
  int replicates = 20;
  int train_size = 200;
  int test_size = 400;
  std::string scenario = "center-0.2";  // study only
  std::string input;                    // field CSV for cv/estimate/krige-map
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<std::string> metric_alphas;  // extra fixed-metric score columns
  double mle_alpha_max = 1.5;
  double mle_grid_step = 0.01;
  // With zero-laden data, the "0" grid token is refused unless this flag
  // substitutes 0.01 for it.
  bool substitute_zero_alpha = false;
  // krige-map: transformation parameter; NaN means use the MLE.
  double krige_alpha = std::numeric_limits<double>::quiet_NaN();
  int grid_nx = 25;
  int grid_ny = 25;
  bool model_nugget = true;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Manifest text for a run: software version, then every config field in a
// fixed order. Deliberately carries no timestamp so reruns are comparable
// byte-for-byte.
std::string run_manifest(const ExperimentConfig& config);

struct LoadedField {
  CompositionalField field;
  std::vector<std::string> part_names;
  std::map<int, int> zero_census;  // zero-part count -> number of rows
};

// CSV with header x,y,<part columns...>; parts are renormalized within the
// simplex tolerance and float dust is snapped to structural zeros. Malformed
// rows, out-of-tolerance sums and duplicate coordinates are reported with
// their line numbers.
LoadedField load_field(const std::string& path);

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> test;
};

// Disjoint random train/test subsets of {0, ..., available-1}, each sorted
// ascending. Deterministic given seed.
SplitIndices random_split(int available, int train_size, int test_size,
                          std::uint64_t seed);

struct ResultRow {
  int replicate = 0;
  std::string alpha_label;  // grid token as configured ("0.3", "ml", ...)
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double delta_h = std::numeric_limits<double>::quiet_NaN();
  double delta_tv = std::numeric_limits<double>::quiet_NaN();
  double delta_alpha = std::numeric_limits<double>::quiet_NaN();
  double delta_alpha_norm = std::numeric_limits<double>::quiet_NaN();
  long n_outside = -1;  // test predictions with inverse residual > 1e-6
  double alpha_hat = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> metric_norm;  // one per configured metric alpha
  bool ok = false;
  std::string note;  // failure reason when not ok
};

struct ResultTable {
  std::vector<std::string> alpha_labels;   // grid order
  std::vector<std::string> metric_labels;  // extra metric columns, config order
  std::vector<ResultRow> rows;             // replicate-major, grid order

  // Detail rows followed by per-label mean and sd rows, every float with 17
  // significant digits. Summaries average the ok rows in row order, so they
  // are exactly recomputable from the emitted details.
  std::string csv() const;
};

ResultTable run_simulation_study(const ExperimentConfig& config);
ResultTable run_cross_validation(const ExperimentConfig& config,
                                 const CompositionalField& field);

struct KrigeMapResult {
  double alpha = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> part_names;
  Eigen::MatrixXd grid;         // m x 2 node coordinates, scanline order
  Eigen::MatrixXd compositions; // m x D back-transformed predictions
  Eigen::VectorXd residuals;    // inverse residual per node
  std::vector<bool> outside;    // residual > 1e-6
  long out_of_codomain = 0;

  std::string csv() const;
};

KrigeMapResult krige_map(const ExperimentConfig& config,
                         const CompositionalField& field,
                         const std::vector<std::string>& part_names = {});

void write_text_file(const std::string& path, const std::string& content);

// Writes <name>-results.csv and <name>-manifest.txt under config.out_dir,
// creating the directory if needed; returns the CSV path.
std::string emit_results(const ExperimentConfig& config,
                         const ResultTable& table, const std::string& name);

}  // namespace alphait
