#include "alphait/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "alphait/alpha_mle.hpp"
#include "alphait/gaussian_sim.hpp"
#include "alphait/geostat.hpp"
#include "alphait/metrics.hpp"
#include "alphait/transforms.hpp"

namespace alphait {

namespace {

constexpr std::uint64_t kStudyLocationStream = 0x2001;
constexpr std::uint64_t kStudySplitStream = 0x2002;
constexpr std::uint64_t kReplicateDrawStream = 0x10000;
constexpr std::uint64_t kCvSplitStream = 0x20000;

constexpr double kOutsideResidual = 1e-6;

std::string format_float(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream stream(s);
  while (std::getline(stream, item, sep)) {
    out.push_back(item);
  }
  if (!s.empty() && s.back() == sep) {
    out.push_back("");
  }
  return out;
}

bool parse_double(const std::string& token, double& value) {
  const std::string t = trim(token);
  if (t.empty()) return false;
  char* end = nullptr;
  value = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(value);
}

long parse_integer(const std::string& token, const std::string& key) {
  const std::string t = trim(token);
  char* end = nullptr;
  const long value = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw std::invalid_argument("config: " + key + " must be an integer, got \"" +
                                token + "\"");
  }
  return value;
}

bool parse_bool(const std::string& token, const std::string& key) {
  const std::string t = trim(token);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw std::invalid_argument("config: " + key + " must be true or false, got \"" +
                              token + "\"");
}

std::vector<std::string> parse_token_list(const std::string& value) {
  std::vector<std::string> tokens;
  for (const std::string& raw : split(value, ',')) {
    const std::string t = trim(raw);
    if (!t.empty()) tokens.push_back(t);
  }
  return tokens;
}

double require_alpha_token(const std::string& token) {
  double value = 0.0;
  if (!parse_double(token, value) || value < 0.0) {
    throw std::invalid_argument("config: alpha token \"" + token +
                                "\" is neither a non-negative number nor \"ml\"");
  }
  return value;
}

std::string sanitize_note(std::string note) {
  for (char& c : note) {
    if (c == ',') c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return note;
}

// ILR below the small-alpha switch, isometric alpha-transformation above it.
Eigen::MatrixXd transform_matrix(const std::vector<Composition>& comps,
                                 double alpha) {
  const int n = static_cast<int>(comps.size());
  const int p = comps.front().dimension() - 1;
  Eigen::MatrixXd scores(n, p);
  for (int i = 0; i < n; ++i) {
    scores.row(i) = alpha < kIlrSwitchAlpha
                        ? ilr(comps[i]).transpose()
                        : alpha_it(comps[i], alpha).coords.transpose();
  }
  return scores;
}

double metric_dist(const Composition& a, const Composition& b, double alpha) {
  return alpha < kIlrSwitchAlpha ? aitchison_distance(a, b)
                                 : alpha_it_distance(a, b, alpha);
}

double pooled_sigma_rows(const Eigen::MatrixXd& scores) {
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    rows.push_back(scores.row(i).transpose());
  }
  return pooled_sigma(rows);
}

struct CellScores {
  double delta_h = 0.0;
  double delta_tv = 0.0;
  double delta_alpha = 0.0;
  double delta_alpha_norm = 0.0;
  long n_outside = 0;
  std::vector<double> metric_norm;
};

// One (replicate, alpha) pipeline pass: transform the training slice, fit
// the model to its empirical variogram, cokrige the test locations,
// back-transform and score against the held-out truth.
CellScores evaluate_cell(const CompositionalField& field,
                         const SplitIndices& split, double alpha,
                         const std::vector<double>& metric_alphas,
                         bool model_nugget) {
  const int n_train = static_cast<int>(split.train.size());
  const int n_test = static_cast<int>(split.test.size());
  Eigen::MatrixXd train_locations(n_train, 2);
  Eigen::MatrixXd test_locations(n_test, 2);
  std::vector<Composition> train_comps;
  std::vector<Composition> test_comps;
  train_comps.reserve(n_train);
  test_comps.reserve(n_test);
  for (int i = 0; i < n_train; ++i) {
    train_locations.row(i) = field.locations.row(split.train[i]);
    train_comps.push_back(field.compositions[split.train[i]]);
  }
  for (int i = 0; i < n_test; ++i) {
    test_locations.row(i) = field.locations.row(split.test[i]);
    test_comps.push_back(field.compositions[split.test[i]]);
  }

  const Eigen::MatrixXd train_scores = transform_matrix(train_comps, alpha);
  const EmpiricalVariogram ev =
      empirical_cross_variogram(train_locations, train_scores);
  const CovarianceModel model = fit_default_model(ev, 0.5, model_nugget);
  const KrigingResult kriged =
      cokrige(model, train_locations, train_scores, test_locations);

  CellScores cell;
  std::vector<Composition> predicted;
  predicted.reserve(n_test);
  for (int i = 0; i < n_test; ++i) {
    const Eigen::VectorXd z = kriged.predictions.row(i).transpose();
    if (alpha < kIlrSwitchAlpha) {
      predicted.push_back(ilr_inverse(z));
      continue;
    }
    const InverseResult inverse = alpha_it_inverse(z, alpha);
    if (inverse.residual > kOutsideResidual) {
      ++cell.n_outside;
    }
    predicted.push_back(inverse.value);
  }

  double sq_sum = 0.0;
  for (int i = 0; i < n_test; ++i) {
    cell.delta_h += hellinger(test_comps[i], predicted[i]);
    cell.delta_tv += total_variation(test_comps[i], predicted[i]);
    const double d = metric_dist(test_comps[i], predicted[i], alpha);
    sq_sum += d * d;
  }
  cell.delta_h /= n_test;
  cell.delta_tv /= n_test;
  cell.delta_alpha = std::sqrt(sq_sum / n_test);
  cell.delta_alpha_norm = cell.delta_alpha / pooled_sigma_rows(train_scores);

  for (double a : metric_alphas) {
    double metric_sq = 0.0;
    for (int i = 0; i < n_test; ++i) {
      const double d = metric_dist(test_comps[i], predicted[i], a);
      metric_sq += d * d;
    }
    const double sigma_a = pooled_sigma_rows(transform_matrix(train_comps, a));
    cell.metric_norm.push_back(std::sqrt(metric_sq / n_test) / sigma_a);
  }
  return cell;
}

void run_parallel(int jobs, int workers, const std::function<void(int)>& job) {
  workers = std::max(1, std::min(workers, jobs));
  if (workers == 1) {
    for (int b = 0; b < jobs; ++b) job(b);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    while (true) {
      const int b = next.fetch_add(1);
      if (b >= jobs) return;
      try {
        job(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct GridEntry {
  std::string label;
  bool is_ml = false;
  double alpha = std::numeric_limits<double>::quiet_NaN();
};

// Resolves grid tokens against the data: "ml" defers to the per-replicate
// estimate; an exact 0 on zero-laden data is either refused or substituted
// with 0.01 depending on the config flag.
std::vector<GridEntry> resolve_grid(const ExperimentConfig& config,
                                    bool has_zeros) {
  if (config.alpha_grid.empty()) {
    throw std::invalid_argument("config: alpha_grid must not be empty");
  }
  std::vector<GridEntry> entries;
  for (const std::string& token : config.alpha_grid) {
    GridEntry entry;
    entry.label = token;
    if (token == "ml") {
      entry.is_ml = true;
    } else {
      entry.alpha = require_alpha_token(token);
      if (entry.alpha < kIlrSwitchAlpha && has_zeros) {
        if (!config.substitute_zero_alpha) {
          throw std::invalid_argument(
              "alpha 0 (analytic log-ratio limit) is undefined on data with "
              "zero parts; set substitute_zero_alpha=true to run 0.01 as an "
              "approximation of 0 instead");
        }
        entry.alpha = 0.01;
      }
    }
    entries.push_back(entry);
  }
  return entries;
}

std::vector<double> metric_alpha_values(const ExperimentConfig& config) {
  std::vector<double> values;
  for (const std::string& token : config.metric_alphas) {
    values.push_back(require_alpha_token(token));
  }
  return values;
}

std::string csv_cell(double v) {
  return std::isfinite(v) ? format_float(v) : std::string();
}

void append_summary_rows(std::string& out, const ResultTable& table,
                         const std::string& label, int n_metrics) {
  std::vector<const ResultRow*> ok_rows;
  for (const ResultRow& row : table.rows) {
    if (row.ok && row.alpha_label == label) ok_rows.push_back(&row);
  }
  const int k = static_cast<int>(ok_rows.size());

  const auto mean_of = [&](const std::function<double(const ResultRow&)>& get) {
    double sum = 0.0;
    int count = 0;
    for (const ResultRow* row : ok_rows) {
      const double v = get(*row);
      if (std::isfinite(v)) {
        sum += v;
        ++count;
      }
    }
    return count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
  };
  const auto sd_of = [&](const std::function<double(const ResultRow&)>& get) {
    const double mean = mean_of(get);
    if (!std::isfinite(mean)) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    int count = 0;
    for (const ResultRow* row : ok_rows) {
      const double v = get(*row);
      if (std::isfinite(v)) {
        sum += (v - mean) * (v - mean);
        ++count;
      }
    }
    return count > 1 ? std::sqrt(sum / (count - 1))
                     : std::numeric_limits<double>::quiet_NaN();
  };

  std::vector<std::function<double(const ResultRow&)>> getters = {
      [](const ResultRow& r) { return r.alpha; },
      [](const ResultRow& r) { return r.delta_h; },
      [](const ResultRow& r) { return r.delta_tv; },
      [](const ResultRow& r) { return r.delta_alpha; },
      [](const ResultRow& r) { return r.delta_alpha_norm; },
      [](const ResultRow& r) { return static_cast<double>(r.n_outside); },
      [](const ResultRow& r) { return r.alpha_hat; },
  };
  for (int m = 0; m < n_metrics; ++m) {
    getters.push_back(
        [m](const ResultRow& r) { return r.metric_norm[m]; });
  }

  for (const char* stat : {"mean", "sd"}) {
    out += stat;
    out += ',';
    out += label;
    for (const auto& get : getters) {
      out += ',';
      const double v =
          std::string(stat) == "mean" ? mean_of(get) : sd_of(get);
      out += csv_cell(v);
    }
    out += ",summary:";
    out += std::to_string(k);
    out += '\n';
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::istringstream stream(text);
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_number) +
                                  ": expected key=value, got \"" + stripped +
                                  "\"");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw std::invalid_argument("config line " + std::to_string(line_number) +
                                  ": duplicate key \"" + key + "\"");
    }

    if (key == "mode") {
      config.mode = value;
    } else if (key == "alpha_grid") {
      config.alpha_grid = parse_token_list(value);
      for (const std::string& token : config.alpha_grid) {
        if (token != "ml") require_alpha_token(token);
      }
    } else if (key == "metric_alphas") {
      config.metric_alphas = parse_token_list(value);
      for (const std::string& token : config.metric_alphas) {
        require_alpha_token(token);
      }
    } else if (key == "replicates") {
      config.replicates = static_cast<int>(parse_integer(value, key));
    } else if (key == "train_size") {
      config.train_size = static_cast<int>(parse_integer(value, key));
    } else if (key == "test_size") {
      config.test_size = static_cast<int>(parse_integer(value, key));
    } else if (key == "scenario") {
      config.scenario = value;
    } else if (key == "input") {
      config.input = value;
    } else if (key == "out_dir") {
      config.out_dir = value;
    } else if (key == "seed") {
      config.seed = static_cast<std::uint64_t>(parse_integer(value, key));
    } else if (key == "workers") {
      config.workers = static_cast<int>(parse_integer(value, key));
    } else if (key == "mle_alpha_max") {
      if (!parse_double(value, config.mle_alpha_max)) {
        throw std::invalid_argument("config: mle_alpha_max must be a number");
      }
    } else if (key == "mle_grid_step") {
      if (!parse_double(value, config.mle_grid_step)) {
        throw std::invalid_argument("config: mle_grid_step must be a number");
      }
    } else if (key == "substitute_zero_alpha") {
      config.substitute_zero_alpha = parse_bool(value, key);
    } else if (key == "krige_alpha") {
      if (value == "ml") {
        config.krige_alpha = std::numeric_limits<double>::quiet_NaN();
      } else {
        config.krige_alpha = require_alpha_token(value);
      }
    } else if (key == "grid_nx") {
      config.grid_nx = static_cast<int>(parse_integer(value, key));
    } else if (key == "grid_ny") {
      config.grid_ny = static_cast<int>(parse_integer(value, key));
    } else if (key == "model_nugget") {
      config.model_nugget = parse_bool(value, key);
    } else {
      throw std::invalid_argument(
          "config line " + std::to_string(line_number) + ": unknown key \"" +
          key +
          "\" (known: mode, alpha_grid, metric_alphas, replicates, "
          "train_size, test_size, scenario, input, out_dir, seed, workers, "
          "mle_alpha_max, mle_grid_step, substitute_zero_alpha, krige_alpha, "
          "grid_nx, grid_ny, model_nugget)");
    }
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config file " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string run_manifest(const ExperimentConfig& config) {
  std::string out;
  out += "version=";
  out += kSoftwareVersion;
  out += '\n';
  const auto field = [&out](const std::string& key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  const auto join = [](const std::vector<std::string>& tokens) {
    std::string joined;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i > 0) joined += ',';
      joined += tokens[i];
    }
    return joined;
  };
  field("mode", config.mode);
  field("scenario", config.scenario);
  field("input", config.input);
  field("alpha_grid", join(config.alpha_grid));
  field("metric_alphas", join(config.metric_alphas));
  field("replicates", std::to_string(config.replicates));
  field("train_size", std::to_string(config.train_size));
  field("test_size", std::to_string(config.test_size));
  field("seed", std::to_string(config.seed));
  field("workers", std::to_string(config.workers));
  field("mle_alpha_max", format_float(config.mle_alpha_max));
  field("mle_grid_step", format_float(config.mle_grid_step));
  field("substitute_zero_alpha",
        config.substitute_zero_alpha ? "true" : "false");
  field("krige_alpha", std::isfinite(config.krige_alpha)
                           ? format_float(config.krige_alpha)
                           : std::string("ml"));
  field("grid_nx", std::to_string(config.grid_nx));
  field("grid_ny", std::to_string(config.grid_ny));
  field("model_nugget", config.model_nugget ? "true" : "false");
  field("out_dir", config.out_dir);
  return out;
}

LoadedField load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open field file " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument(path + ": empty file");
  }
  std::vector<std::string> header = split(line, ',');
  for (std::string& name : header) name = trim(name);
  if (header.size() < 4 || header[0] != "x" || header[1] != "y") {
    throw std::invalid_argument(
        path + ": header must be x,y followed by at least two part columns");
  }
  const int d = static_cast<int>(header.size()) - 2;
  std::vector<std::string> part_names(header.begin() + 2, header.end());

  std::vector<Eigen::Vector2d> points;
  std::vector<Composition> compositions;
  std::map<std::pair<double, double>, int> first_line_of;
  std::map<int, int> census;

  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const std::string where = path + ":" + std::to_string(line_number);
    const std::vector<std::string> cells = split(line, ',');
    if (static_cast<int>(cells.size()) != d + 2) {
      throw std::invalid_argument(where + ": expected " + std::to_string(d + 2) +
                                  " columns, got " +
                                  std::to_string(cells.size()));
    }
    Eigen::VectorXd values(d + 2);
    for (int i = 0; i < d + 2; ++i) {
      if (!parse_double(cells[i], values[i])) {
        throw std::invalid_argument(where + ": cannot parse \"" + cells[i] +
                                    "\" in column " + std::to_string(i + 1));
      }
    }
    const auto key = std::make_pair(values[0], values[1]);
    const auto inserted = first_line_of.emplace(key, line_number);
    if (!inserted.second) {
      throw std::invalid_argument(
          where + ": duplicate coordinates, first seen on line " +
          std::to_string(inserted.first->second));
    }
    try {
      compositions.emplace_back(values.tail(d));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + ": " + e.what());
    }
    points.emplace_back(values[0], values[1]);
    int zeros = 0;
    for (int i = 0; i < d; ++i) {
      if (compositions.back()[i] == 0.0) ++zeros;
    }
    ++census[zeros];
  }
  if (compositions.empty()) {
    throw std::invalid_argument(path + ": no data rows");
  }

  Eigen::MatrixXd locations(points.size(), 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    locations.row(i) = points[i].transpose();
  }
  return LoadedField{CompositionalField(std::move(locations),
                                        std::move(compositions)),
                     std::move(part_names), std::move(census)};
}

SplitIndices random_split(int available, int train_size, int test_size,
                          std::uint64_t seed) {
  if (train_size < 1 || test_size < 1) {
    throw std::invalid_argument("random_split: sizes must be positive");
  }
  if (train_size + test_size > available) {
    throw std::invalid_argument(
        "random_split: train + test = " +
        std::to_string(train_size + test_size) + " exceeds the " +
        std::to_string(available) + " available points");
  }
  std::vector<int> order(available);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + train_size);
  split.test.assign(order.begin() + train_size,
                    order.begin() + train_size + test_size);
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::string ResultTable::csv() const {
  std::string out = "replicate,alpha_label,alpha,delta_h,delta_tv,delta_alpha,"
                    "delta_alpha_norm,n_outside,alpha_hat";
  for (const std::string& label : metric_labels) {
    out += ",delta_norm_at_" + label;
  }
  out += ",status\n";

  for (const ResultRow& row : rows) {
    out += std::to_string(row.replicate);
    out += ',';
    out += row.alpha_label;
    out += ',';
    out += csv_cell(row.alpha);
    out += ',';
    out += row.ok ? csv_cell(row.delta_h) : std::string();
    out += ',';
    out += row.ok ? csv_cell(row.delta_tv) : std::string();
    out += ',';
    out += row.ok ? csv_cell(row.delta_alpha) : std::string();
    out += ',';
    out += row.ok ? csv_cell(row.delta_alpha_norm) : std::string();
    out += ',';
    out += row.ok ? std::to_string(row.n_outside) : std::string();
    out += ',';
    out += csv_cell(row.alpha_hat);
    for (std::size_t m = 0; m < metric_labels.size(); ++m) {
      out += ',';
      out += row.ok && m < row.metric_norm.size()
                 ? csv_cell(row.metric_norm[m])
                 : std::string();
    }
    out += ',';
    out += row.ok ? "ok" : "failed: " + sanitize_note(row.note);
    out += '\n';
  }

  for (const std::string& label : alpha_labels) {
    append_summary_rows(out, *this, label,
                        static_cast<int>(metric_labels.size()));
  }
  return out;
}

ResultTable run_simulation_study(const ExperimentConfig& config) {
  if (config.replicates < 1) {
    throw std::invalid_argument("config: replicates must be >= 1");
  }
  if (config.train_size < 100) {
    throw std::invalid_argument(
        "config: the study protocol keeps train_size >= 100");
  }
  if (config.test_size < 1) {
    throw std::invalid_argument("config: test_size must be >= 1");
  }
  const int n = config.train_size + config.test_size;

  ScenarioConfig scenario = scenario_preset(config.scenario, config.seed);
  scenario.n_points = n;

  // Interior simulated data never contains zeros, so the grid resolves
  // without the zero-substitution rule.
  const std::vector<GridEntry> grid = resolve_grid(config, false);
  const std::vector<double> metric_values = metric_alpha_values(config);
  const bool needs_ml =
      std::any_of(grid.begin(), grid.end(),
                  [](const GridEntry& e) { return e.is_ml; });
  const int n_grid = static_cast<int>(grid.size());

  const Eigen::MatrixXd locations =
      uniform_locations(n, scenario.domain_min, scenario.domain_max,
                        derive_seed(config.seed, kStudyLocationStream));
  const GrfSampler sampler(locations, scenario.model);
  // One split shared by every replicate: the training and test locations are
  // fixed, only the field values are redrawn.
  const SplitIndices split = random_split(
      n, config.train_size, config.test_size,
      derive_seed(config.seed, kStudySplitStream));

  ResultTable table;
  for (const GridEntry& entry : grid) table.alpha_labels.push_back(entry.label);
  table.metric_labels = config.metric_alphas;
  table.rows.resize(static_cast<std::size_t>(config.replicates) * n_grid);

  const auto job = [&](int b) {
    const std::uint64_t draw_seed =
        derive_seed(config.seed, kReplicateDrawStream + b);
    for (int g = 0; g < n_grid; ++g) {
      ResultRow& row = table.rows[static_cast<std::size_t>(b) * n_grid + g];
      row.replicate = b;
      row.alpha_label = grid[g].label;
    }

    std::unique_ptr<CompositionalField> field;
    std::string replicate_note;
    try {
      const Eigen::MatrixXd scores =
          apply_scenario(sampler.draw(draw_seed), scenario);
      field = std::make_unique<CompositionalField>(
          to_compositions(locations, scores, scenario.alpha0));
    } catch (const std::exception& e) {
      replicate_note = e.what();
    }

    double alpha_hat = std::numeric_limits<double>::quiet_NaN();
    std::string ml_note;
    if (field && needs_ml) {
      try {
        std::vector<Composition> train_comps;
        train_comps.reserve(split.train.size());
        for (int i : split.train) {
          train_comps.push_back(field->compositions[i]);
        }
        alpha_hat = estimate_alpha(train_comps, config.mle_alpha_max,
                                   config.mle_grid_step)
                        .alpha_hat;
      } catch (const std::exception& e) {
        ml_note = e.what();
      }
    }

    for (int g = 0; g < n_grid; ++g) {
      ResultRow& row = table.rows[static_cast<std::size_t>(b) * n_grid + g];
      row.alpha_hat = alpha_hat;
      if (!field) {
        row.note = replicate_note;
        continue;
      }
      if (grid[g].is_ml && !std::isfinite(alpha_hat)) {
        row.note = "alpha estimation failed: " + ml_note;
        continue;
      }
      row.alpha = grid[g].is_ml ? alpha_hat : grid[g].alpha;
      try {
        const CellScores cell = evaluate_cell(*field, split, row.alpha,
                                              metric_values,
                                              config.model_nugget);
        row.delta_h = cell.delta_h;
        row.delta_tv = cell.delta_tv;
        row.delta_alpha = cell.delta_alpha;
        row.delta_alpha_norm = cell.delta_alpha_norm;
        row.n_outside = cell.n_outside;
        row.metric_norm = cell.metric_norm;
        row.ok = true;
      } catch (const std::exception& e) {
        row.note = e.what();
      }
    }
  };
  run_parallel(config.replicates, config.workers, job);
  return table;
}

ResultTable run_cross_validation(const ExperimentConfig& config,
                                 const CompositionalField& field) {
  if (config.replicates < 1) {
    throw std::invalid_argument("config: replicates must be >= 1");
  }
  const int available = field.size();
  if (config.train_size + config.test_size > available) {
    throw std::invalid_argument(
        "config: train_size + test_size exceeds the " +
        std::to_string(available) + " points of the field");
  }

  bool has_zeros = false;
  for (const Composition& x : field.compositions) {
    has_zeros = has_zeros || !x.strictly_positive();
  }
  const std::vector<GridEntry> grid = resolve_grid(config, has_zeros);
  const std::vector<double> metric_values = metric_alpha_values(config);
  const int n_grid = static_cast<int>(grid.size());

  ResultTable table;
  for (const GridEntry& entry : grid) table.alpha_labels.push_back(entry.label);
  table.metric_labels = config.metric_alphas;
  table.rows.resize(static_cast<std::size_t>(config.replicates) * n_grid);

  const auto job = [&](int b) {
    const SplitIndices split = random_split(
        available, config.train_size, config.test_size,
        derive_seed(config.seed, kCvSplitStream + b));

    double alpha_hat = std::numeric_limits<double>::quiet_NaN();
    std::string ml_note;
    try {
      std::vector<Composition> train_comps;
      train_comps.reserve(split.train.size());
      for (int i : split.train) train_comps.push_back(field.compositions[i]);
      alpha_hat = estimate_alpha(train_comps, config.mle_alpha_max,
                                 config.mle_grid_step)
                      .alpha_hat;
    } catch (const std::exception& e) {
      ml_note = e.what();
    }

    for (int g = 0; g < n_grid; ++g) {
      ResultRow& row = table.rows[static_cast<std::size_t>(b) * n_grid + g];
      row.replicate = b;
      row.alpha_label = grid[g].label;
      row.alpha_hat = alpha_hat;
      if (grid[g].is_ml && !std::isfinite(alpha_hat)) {
        row.note = "alpha estimation failed: " + ml_note;
        continue;
      }
      row.alpha = grid[g].is_ml ? alpha_hat : grid[g].alpha;
      try {
        const CellScores cell = evaluate_cell(field, split, row.alpha,
                                              metric_values,
                                              config.model_nugget);
        row.delta_h = cell.delta_h;
        row.delta_tv = cell.delta_tv;
        row.delta_alpha = cell.delta_alpha;
        row.delta_alpha_norm = cell.delta_alpha_norm;
        row.n_outside = cell.n_outside;
        row.metric_norm = cell.metric_norm;
        row.ok = true;
      } catch (const std::exception& e) {
        row.note = e.what();
      }
    }
  };
  run_parallel(config.replicates, config.workers, job);
  return table;
}

std::string KrigeMapResult::csv() const {
  std::string out = "x,y";
  for (const std::string& name : part_names) {
    out += ',';
    out += name;
  }
  out += ",inverse_residual,outside_codomain\n";
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    out += format_float(grid(i, 0));
    out += ',';
    out += format_float(grid(i, 1));
    for (Eigen::Index j = 0; j < compositions.cols(); ++j) {
      out += ',';
      out += format_float(compositions(i, j));
    }
    out += ',';
    out += format_float(residuals[i]);
    out += ',';
    out += outside[static_cast<std::size_t>(i)] ? '1' : '0';
    out += '\n';
  }
  return out;
}

KrigeMapResult krige_map(const ExperimentConfig& config,
                         const CompositionalField& field,
                         const std::vector<std::string>& part_names) {
  if (config.grid_nx < 2 || config.grid_ny < 2) {
    throw std::invalid_argument("config: grid_nx and grid_ny must be >= 2");
  }
  const int d = field.dimension();
  if (!part_names.empty() && static_cast<int>(part_names.size()) != d) {
    throw std::invalid_argument(
        "krige_map: part name count does not match the field dimension");
  }

  bool has_zeros = false;
  for (const Composition& x : field.compositions) {
    has_zeros = has_zeros || !x.strictly_positive();
  }

  KrigeMapResult result;
  if (std::isfinite(config.krige_alpha)) {
    result.alpha = config.krige_alpha;
  } else {
    result.alpha = estimate_alpha(field.compositions, config.mle_alpha_max,
                                  config.mle_grid_step)
                       .alpha_hat;
  }
  if (result.alpha < kIlrSwitchAlpha && has_zeros) {
    if (!config.substitute_zero_alpha) {
      throw std::invalid_argument(
          "alpha 0 (analytic log-ratio limit) is undefined on data with zero "
          "parts; set substitute_zero_alpha=true to run 0.01 instead");
    }
    result.alpha = 0.01;
  }

  result.part_names = part_names;
  if (result.part_names.empty()) {
    for (int j = 0; j < d; ++j) {
      result.part_names.push_back("part" + std::to_string(j + 1));
    }
  }

  const Eigen::MatrixXd scores =
      transform_matrix(field.compositions, result.alpha);
  const EmpiricalVariogram ev =
      empirical_cross_variogram(field.locations, scores);
  const CovarianceModel model =
      fit_default_model(ev, 0.5, config.model_nugget);

  const double x_min = field.locations.col(0).minCoeff();
  const double x_max = field.locations.col(0).maxCoeff();
  const double y_min = field.locations.col(1).minCoeff();
  const double y_max = field.locations.col(1).maxCoeff();
  const int m = config.grid_nx * config.grid_ny;
  result.grid.resize(m, 2);
  int node = 0;
  for (int iy = 0; iy < config.grid_ny; ++iy) {
    const double y =
        y_min + (y_max - y_min) * iy / (config.grid_ny - 1);
    for (int ix = 0; ix < config.grid_nx; ++ix, ++node) {
      result.grid(node, 0) =
          x_min + (x_max - x_min) * ix / (config.grid_nx - 1);
      result.grid(node, 1) = y;
    }
  }

  const KrigingResult kriged =
      cokrige(model, field.locations, scores, result.grid);

  result.compositions.resize(m, d);
  result.residuals.resize(m);
  result.outside.assign(m, false);
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd z = kriged.predictions.row(i).transpose();
    if (result.alpha < kIlrSwitchAlpha) {
      result.compositions.row(i) = ilr_inverse(z).parts().transpose();
      result.residuals[i] = 0.0;
      continue;
    }
    const InverseResult inverse = alpha_it_inverse(z, result.alpha);
    result.compositions.row(i) = inverse.value.parts().transpose();
    result.residuals[i] = inverse.residual;
    if (inverse.residual > kOutsideResidual) {
      result.outside[i] = true;
      ++result.out_of_codomain;
    }
  }
  return result;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  out << content;
  if (!out) {
    throw std::runtime_error("failed writing " + path);
  }
}

std::string emit_results(const ExperimentConfig& config,
                         const ResultTable& table, const std::string& name) {
  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path dir(config.out_dir);
  const std::string csv_path = (dir / (name + "-results.csv")).string();
  write_text_file(csv_path, table.csv());
  write_text_file((dir / (name + "-manifest.txt")).string(),
                  run_manifest(config));
  return csv_path;
}

}  // namespace alphait
