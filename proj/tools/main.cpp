#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "alphait/alpha_mle.hpp"
#include "alphait/gaussian_sim.hpp"
#include "alphait/geostat.hpp"
#include "alphait/pipeline.hpp"
#include "alphait/transforms.hpp"

using namespace alphait;

namespace {

std::string fmt(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

void print_or_write(const std::string& target, const std::string& content) {
  if (target == "-") {
    std::cout << content;
    return;
  }
  write_text_file(target, content);
  std::cout << "wrote " << target << "\n";
}

struct NumericTable {
  std::vector<std::string> names;
  Eigen::MatrixXd values;
};

// Plain numeric CSV: a header line, then rows of numbers. Column names are
// not interpreted here beyond the x,y prefix check.
NumericTable read_numeric_csv(const std::string& path, int min_columns) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument(path + ": empty file");
  }
  NumericTable table;
  {
    std::string cell;
    std::istringstream header(line);
    while (std::getline(header, cell, ',')) {
      const auto begin = cell.find_first_not_of(" \t\r");
      const auto end = cell.find_last_not_of(" \t\r");
      table.names.push_back(begin == std::string::npos
                                ? ""
                                : cell.substr(begin, end - begin + 1));
    }
  }
  const int cols = static_cast<int>(table.names.size());
  if (cols < min_columns || table.names[0] != "x" || table.names[1] != "y") {
    throw std::invalid_argument(path + ": header must be x,y followed by " +
                                std::to_string(min_columns - 2) +
                                " or more value columns");
  }
  std::vector<Eigen::VectorXd> rows;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Eigen::VectorXd row(cols);
    std::istringstream cells(line);
    std::string cell;
    int j = 0;
    while (std::getline(cells, cell, ',')) {
      if (j >= cols) break;
      char* end = nullptr;
      row[j] = std::strtod(cell.c_str(), &end);
      bool consumed = end != cell.c_str();
      for (; consumed && *end != '\0'; ++end) {
        consumed = *end == ' ' || *end == '\t' || *end == '\r';
      }
      if (!consumed || !std::isfinite(row[j])) {
        throw std::invalid_argument(path + ":" + std::to_string(line_number) +
                                    ": cannot parse \"" + cell + "\"");
      }
      ++j;
    }
    if (j != cols) {
      throw std::invalid_argument(path + ":" + std::to_string(line_number) +
                                  ": expected " + std::to_string(cols) +
                                  " columns, got " + std::to_string(j));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw std::invalid_argument(path + ": no data rows");
  }
  table.values.resize(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    table.values.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return table;
}

// Numeric token or "ml", which estimates the parameter from the data.
double resolve_alpha(const std::string& token,
                     const std::vector<Composition>& comps, double alpha_max,
                     double grid_step) {
  if (token == "ml") {
    const AlphaEstimate estimate = estimate_alpha(comps, alpha_max, grid_step);
    std::cout << "alpha_hat=" << fmt(estimate.alpha_hat) << "\n";
    return estimate.alpha_hat;
  }
  char* end = nullptr;
  const double value = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size() ||
      !std::isfinite(value) || value < 0.0) {
    throw std::invalid_argument("--alpha must be a non-negative number or "
                                "\"ml\", got \"" +
                                token + "\"");
  }
  return value;
}

void require_positive_parts(const CompositionalField& field, double alpha) {
  if (alpha >= kIlrSwitchAlpha) return;
  for (int i = 0; i < field.size(); ++i) {
    if (!field.compositions[i].strictly_positive()) {
      throw std::invalid_argument(
          "alpha 0 (analytic log-ratio limit) requires strictly positive "
          "parts, but row " +
          std::to_string(i + 1) + " contains a zero; use a positive alpha");
    }
  }
}

Eigen::MatrixXd transform_field(const CompositionalField& field,
                                double alpha) {
  const int p = field.dimension() - 1;
  Eigen::MatrixXd scores(field.size(), p);
  for (int i = 0; i < field.size(); ++i) {
    scores.row(i) = alpha < kIlrSwitchAlpha
                        ? ilr(field.compositions[i]).transpose()
                        : alpha_it(field.compositions[i], alpha)
                              .coords.transpose();
  }
  return scores;
}

std::string field_csv(const CompositionalField& field,
                      const std::vector<std::string>& names) {
  std::string out = "x,y";
  for (const std::string& name : names) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (int i = 0; i < field.size(); ++i) {
    out += fmt(field.locations(i, 0));
    out += ',';
    out += fmt(field.locations(i, 1));
    for (int j = 0; j < field.dimension(); ++j) {
      out += ',';
      out += fmt(field.compositions[i][j]);
    }
    out += '\n';
  }
  return out;
}

std::string sill_line(const Eigen::MatrixXd& b) {
  std::string out;
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    if (i > 0) out += ';';
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      if (j > 0) out += ',';
      out += fmt(b(i, j));
    }
  }
  return out;
}

// Shared experiment options: a config file, if given, supplies the base
// values and explicit flags override it.
struct RunFlags {
  std::string config_path;
  std::vector<std::string> alpha_grid;
  std::vector<std::string> metric_alphas;
  int replicates = 0;
  int train_size = 0;
  int test_size = 0;
  std::string scenario;
  std::string input;
  std::string out_dir;
  std::uint64_t seed = 0;
  int workers = 0;
  double mle_alpha_max = 0.0;
  double mle_grid_step = 0.0;
  bool substitute_zero_alpha = false;
  bool no_nugget = false;
};

void add_run_flags(CLI::App* sub, RunFlags& flags, bool with_grid) {
  sub->add_option("--config", flags.config_path,
                  "key=value config file; explicit flags override it");
  if (with_grid) {
    sub->add_option("--alpha-grid", flags.alpha_grid,
                    "comma-separated alpha values, \"ml\" for the estimate")
        ->delimiter(',');
    sub->add_option("--metric-alphas", flags.metric_alphas,
                    "extra fixed-metric normalised score columns")
        ->delimiter(',');
    sub->add_option("-B,--replicates", flags.replicates, "replicate count");
    sub->add_option("--train-size", flags.train_size, "training points");
    sub->add_option("--test-size", flags.test_size, "held-out points");
  }
  sub->add_option("--out-dir", flags.out_dir, "output directory");
  sub->add_option("--seed", flags.seed, "base RNG seed");
  sub->add_option("--workers", flags.workers, "concurrent replicate workers");
  sub->add_option("--mle-alpha-max", flags.mle_alpha_max,
                  "upper end of the likelihood scan");
  sub->add_option("--mle-grid-step", flags.mle_grid_step,
                  "likelihood scan step");
  sub->add_flag("--substitute-zero-alpha", flags.substitute_zero_alpha,
                "run alpha=0.01 in place of a refused alpha=0");
  sub->add_flag("--no-nugget", flags.no_nugget,
                "fit the spatial model without a nugget structure");
}

ExperimentConfig merge_config(const CLI::App* sub, const RunFlags& flags,
                              const std::string& mode) {
  ExperimentConfig config = flags.config_path.empty()
                                ? ExperimentConfig{}
                                : load_config(flags.config_path);
  config.mode = mode;
  const auto given = [sub](const std::string& name) {
    const CLI::Option* option = sub->get_option_no_throw(name);
    return option != nullptr && option->count() > 0;
  };
  if (given("--alpha-grid")) config.alpha_grid = flags.alpha_grid;
  if (given("--metric-alphas")) config.metric_alphas = flags.metric_alphas;
  if (given("--replicates")) config.replicates = flags.replicates;
  if (given("--train-size")) config.train_size = flags.train_size;
  if (given("--test-size")) config.test_size = flags.test_size;
  if (given("--out-dir")) config.out_dir = flags.out_dir;
  if (given("--seed")) config.seed = flags.seed;
  if (given("--workers")) config.workers = flags.workers;
  if (given("--mle-alpha-max")) config.mle_alpha_max = flags.mle_alpha_max;
  if (given("--mle-grid-step")) config.mle_grid_step = flags.mle_grid_step;
  if (flags.substitute_zero_alpha) config.substitute_zero_alpha = true;
  if (flags.no_nugget) config.model_nugget = false;
  return config;
}

void print_census(const LoadedField& loaded) {
  for (const auto& [zeros, count] : loaded.zero_census) {
    std::cout << "census: " << zeros << " zero parts -> " << count << " rows ("
              << fmt(100.0 * count / loaded.field.size()) << "%)\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geostatistics for compositional data via the isometric "
               "alpha-transformation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kSoftwareVersion);

  // transform
  {
    auto opts = std::make_shared<std::tuple<std::string, std::string,
                                            std::string>>("", "0.5", "-");
    CLI::App* sub = app.add_subcommand(
        "transform", "Map a compositional field to transformed scores");
    sub->add_option("--input", std::get<0>(*opts), "field CSV (x,y,parts...)")
        ->required();
    sub->add_option("--alpha", std::get<1>(*opts),
                    "transformation parameter, or \"ml\"");
    sub->add_option("--output", std::get<2>(*opts), "output CSV, - for stdout");
    sub->callback([opts] {
      const LoadedField loaded = load_field(std::get<0>(*opts));
      const double alpha =
          resolve_alpha(std::get<1>(*opts), loaded.field.compositions, 1.5,
                        0.01);
      require_positive_parts(loaded.field, alpha);
      const Eigen::MatrixXd scores = transform_field(loaded.field, alpha);
      std::string out = "x,y";
      for (int j = 0; j < scores.cols(); ++j) {
        out += ",z" + std::to_string(j + 1);
      }
      out += '\n';
      for (int i = 0; i < scores.rows(); ++i) {
        out += fmt(loaded.field.locations(i, 0));
        out += ',';
        out += fmt(loaded.field.locations(i, 1));
        for (int j = 0; j < scores.cols(); ++j) {
          out += ',';
          out += fmt(scores(i, j));
        }
        out += '\n';
      }
      print_or_write(std::get<2>(*opts), out);
    });
  }

  // inverse
  {
    auto opts =
        std::make_shared<std::tuple<std::string, double, std::string>>(
            "", 0.5, "-");
    CLI::App* sub = app.add_subcommand(
        "inverse", "Map transformed scores back to compositions");
    sub->add_option("--input", std::get<0>(*opts), "scores CSV (x,y,z...)")
        ->required();
    sub->add_option("--alpha", std::get<1>(*opts), "transformation parameter")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--output", std::get<2>(*opts), "output CSV, - for stdout");
    sub->callback([opts] {
      const NumericTable table = read_numeric_csv(std::get<0>(*opts), 3);
      const double alpha = std::get<1>(*opts);
      const int p = static_cast<int>(table.names.size()) - 2;
      std::string out = "x,y";
      for (int j = 0; j <= p; ++j) {
        out += ",part" + std::to_string(j + 1);
      }
      out += ",inverse_residual,outside_codomain\n";
      for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
        const Eigen::VectorXd z = table.values.row(i).tail(p).transpose();
        Composition x = uniform_composition(p + 1);
        double residual = 0.0;
        if (alpha < kIlrSwitchAlpha) {
          x = ilr_inverse(z);
        } else {
          const InverseResult inverse = alpha_it_inverse(z, alpha);
          x = inverse.value;
          residual = inverse.residual;
        }
        out += fmt(table.values(i, 0));
        out += ',';
        out += fmt(table.values(i, 1));
        for (int j = 0; j <= p; ++j) {
          out += ',';
          out += fmt(x[j]);
        }
        out += ',';
        out += fmt(residual);
        out += residual > 1e-6 ? ",1\n" : ",0\n";
      }
      print_or_write(std::get<2>(*opts), out);
    });
  }

  // estimate-alpha
  {
    struct EstimateOpts {
      std::string input;
      double alpha_max = 1.5;
      double step = 0.01;
      std::string profile;
    };
    auto opts = std::make_shared<EstimateOpts>();
    CLI::App* sub = app.add_subcommand(
        "estimate-alpha",
        "Maximum-likelihood estimate of the transformation parameter");
    sub->add_option("--input", opts->input, "field CSV")->required();
    sub->add_option("--alpha-max", opts->alpha_max, "upper end of the scan");
    sub->add_option("--step", opts->step, "scan step");
    sub->add_option("--profile", opts->profile,
                    "also write the profiled log-likelihood CSV here");
    sub->callback([opts] {
      const LoadedField loaded = load_field(opts->input);
      print_census(loaded);
      const AlphaEstimate estimate = estimate_alpha(
          loaded.field.compositions, opts->alpha_max, opts->step);
      std::cout << "alpha_hat=" << fmt(estimate.alpha_hat) << "\n"
                << "log_likelihood=" << fmt(estimate.loglik_at_hat) << "\n"
                << "zero_patterns=" << estimate.pattern_counts.size() << "\n"
                << "skipped_patterns=" << estimate.skipped_patterns.size()
                << "\n";
      if (!opts->profile.empty()) {
        std::string csv = "alpha,log_likelihood\n";
        for (const auto& [alpha, loglik] : estimate.profile) {
          csv += fmt(alpha);
          csv += ',';
          csv += fmt(loglik);
          csv += '\n';
        }
        print_or_write(opts->profile, csv);
      }
    });
  }

  // variogram
  {
    struct VariogramOpts {
      std::string input;
      std::string alpha = "0.5";
      int bins = 15;
      double max_lag = -1.0;
      std::string output = "-";
    };
    auto opts = std::make_shared<VariogramOpts>();
    CLI::App* sub = app.add_subcommand(
        "variogram", "Empirical cross-variogram of the transformed field");
    sub->add_option("--input", opts->input, "field CSV")->required();
    sub->add_option("--alpha", opts->alpha,
                    "transformation parameter, or \"ml\"");
    sub->add_option("--bins", opts->bins, "lag bin count");
    sub->add_option("--max-lag", opts->max_lag,
                    "largest lag; non-positive means half the max distance");
    sub->add_option("--output", opts->output, "output CSV, - for stdout");
    sub->callback([opts] {
      const LoadedField loaded = load_field(opts->input);
      const double alpha =
          resolve_alpha(opts->alpha, loaded.field.compositions, 1.5, 0.01);
      require_positive_parts(loaded.field, alpha);
      const Eigen::MatrixXd scores = transform_field(loaded.field, alpha);
      const EmpiricalVariogram ev = empirical_cross_variogram(
          loaded.field.locations, scores, opts->bins, opts->max_lag);
      const int p = static_cast<int>(scores.cols());
      std::string out = "lag,pairs,sparse";
      for (int i = 0; i < p; ++i) {
        for (int j = i; j < p; ++j) {
          out += ",gamma_" + std::to_string(i + 1) + "_" +
                 std::to_string(j + 1);
        }
      }
      out += '\n';
      for (Eigen::Index b = 0; b < ev.bin_centers.size(); ++b) {
        out += fmt(ev.bin_centers[b]);
        out += ',';
        out += std::to_string(ev.pair_counts[b]);
        out += ',';
        out += ev.sparse_bin[b] ? '1' : '0';
        for (int i = 0; i < p; ++i) {
          for (int j = i; j < p; ++j) {
            out += ',';
            out += fmt(ev.semivariance[b](i, j));
          }
        }
        out += '\n';
      }
      print_or_write(opts->output, out);
    });
  }

  // fit
  {
    struct FitOpts {
      std::string input;
      std::string alpha = "0.5";
      int bins = 15;
      double max_lag = -1.0;
      double smoothness = 0.5;
      bool no_nugget = false;
    };
    auto opts = std::make_shared<FitOpts>();
    CLI::App* sub = app.add_subcommand(
        "fit", "Fit the coregionalization model to the transformed field");
    sub->add_option("--input", opts->input, "field CSV")->required();
    sub->add_option("--alpha", opts->alpha,
                    "transformation parameter, or \"ml\"");
    sub->add_option("--bins", opts->bins, "lag bin count");
    sub->add_option("--max-lag", opts->max_lag,
                    "largest lag; non-positive means half the max distance");
    sub->add_option("--smoothness", opts->smoothness,
                    "Whittle-Matern smoothness");
    sub->add_flag("--no-nugget", opts->no_nugget, "drop the nugget structure");
    sub->callback([opts] {
      const LoadedField loaded = load_field(opts->input);
      const double alpha =
          resolve_alpha(opts->alpha, loaded.field.compositions, 1.5, 0.01);
      require_positive_parts(loaded.field, alpha);
      const Eigen::MatrixXd scores = transform_field(loaded.field, alpha);
      const EmpiricalVariogram ev = empirical_cross_variogram(
          loaded.field.locations, scores, opts->bins, opts->max_lag);
      const CovarianceModel model =
          fit_default_model(ev, opts->smoothness, !opts->no_nugget);
      std::cout << "alpha=" << fmt(alpha) << "\n"
                << "variables=" << model.variables() << "\n"
                << "structures=" << model.structures.size() << "\n";
      for (const CovarianceModel::Structure& s : model.structures) {
        if (s.function.kind == CovarianceFunction::Kind::kNugget) {
          std::cout << "structure=nugget\n";
        } else {
          std::cout << "structure=matern smoothness="
                    << fmt(s.function.smoothness)
                    << " scale=" << fmt(s.function.scale) << "\n";
        }
        std::cout << "sill=" << sill_line(s.coefficient) << "\n";
      }
      std::cout << "weighted_ss=" << fmt(model.fitted_wss) << "\n";
    });
  }

  // krige
  {
    struct KrigeOpts {
      std::string input;
      std::string targets;
      std::string alpha = "0.5";
      bool no_nugget = false;
      std::string output = "-";
    };
    auto opts = std::make_shared<KrigeOpts>();
    CLI::App* sub = app.add_subcommand(
        "krige", "Cokrige the field at target locations and back-transform");
    sub->add_option("--input", opts->input, "field CSV")->required();
    sub->add_option("--targets", opts->targets, "target CSV (x,y)")
        ->required();
    sub->add_option("--alpha", opts->alpha,
                    "transformation parameter, or \"ml\"");
    sub->add_flag("--no-nugget", opts->no_nugget, "drop the nugget structure");
    sub->add_option("--output", opts->output, "output CSV, - for stdout");
    sub->callback([opts] {
      const LoadedField loaded = load_field(opts->input);
      const double alpha =
          resolve_alpha(opts->alpha, loaded.field.compositions, 1.5, 0.01);
      require_positive_parts(loaded.field, alpha);
      const NumericTable targets = read_numeric_csv(opts->targets, 2);
      const Eigen::MatrixXd scores = transform_field(loaded.field, alpha);
      const EmpiricalVariogram ev =
          empirical_cross_variogram(loaded.field.locations, scores);
      const CovarianceModel model =
          fit_default_model(ev, 0.5, !opts->no_nugget);
      const Eigen::MatrixXd target_xy = targets.values.leftCols(2);
      const KrigingResult kriged =
          cokrige(model, loaded.field.locations, scores, target_xy);

      std::string out = "x,y";
      for (const std::string& name : loaded.part_names) {
        out += ',';
        out += name;
      }
      out += ",inverse_residual,outside_codomain\n";
      for (Eigen::Index i = 0; i < target_xy.rows(); ++i) {
        const Eigen::VectorXd z = kriged.predictions.row(i).transpose();
        Composition x = uniform_composition(loaded.field.dimension());
        double residual = 0.0;
        if (alpha < kIlrSwitchAlpha) {
          x = ilr_inverse(z);
        } else {
          const InverseResult inverse = alpha_it_inverse(z, alpha);
          x = inverse.value;
          residual = inverse.residual;
        }
        out += fmt(target_xy(i, 0));
        out += ',';
        out += fmt(target_xy(i, 1));
        for (int j = 0; j < loaded.field.dimension(); ++j) {
          out += ',';
          out += fmt(x[j]);
        }
        out += ',';
        out += fmt(residual);
        out += residual > 1e-6 ? ",1\n" : ",0\n";
      }
      print_or_write(opts->output, out);
    });
  }

  // simulate
  {
    struct SimulateOpts {
      std::string scenario = "center-0.2";
      int n = 0;
      std::uint64_t seed = 0;
      double zero_fraction = 0.0;
      double two_zero_share = 0.0;
      std::string output = "-";
    };
    auto opts = std::make_shared<SimulateOpts>();
    CLI::App* sub = app.add_subcommand(
        "simulate", "Draw a compositional field from a scenario preset");
    sub->add_option("--scenario", opts->scenario,
                    "preset name, e.g. center-0.2, border-0.6, corner-1");
    sub->add_option("-n,--n-points", opts->n,
                    "point count (0 keeps the preset default)");
    sub->add_option("--seed", opts->seed, "RNG seed");
    sub->add_option("--zero-fraction", opts->zero_fraction,
                    "fraction of rows given structural zeros")
        ->check(CLI::Range(0.0, 0.999));
    sub->add_option("--two-zero-share", opts->two_zero_share,
                    "share of affected rows given two zeros")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--output", opts->output, "output CSV, - for stdout");
    sub->callback([opts] {
      ScenarioConfig scenario = scenario_preset(opts->scenario, opts->seed);
      if (opts->n > 0) scenario.n_points = opts->n;
      const GaussianField draw = simulate_grf(scenario);
      CompositionalField field =
          to_compositions(draw.locations, apply_scenario(draw.scores, scenario),
                          scenario.alpha0);
      if (opts->zero_fraction > 0.0) {
        field = inject_zeros(field, opts->zero_fraction,
                             ZeroInjectionMix{1.0 - opts->two_zero_share,
                                              opts->two_zero_share},
                             opts->seed);
      }
      std::vector<std::string> names;
      for (int j = 0; j < field.dimension(); ++j) {
        names.push_back("part" + std::to_string(j + 1));
      }
      print_or_write(opts->output, field_csv(field, names));
    });
  }

  // study
  {
    auto flags = std::make_shared<RunFlags>();
    CLI::App* sub = app.add_subcommand(
        "study", "Simulation study over an alpha grid");
    add_run_flags(sub, *flags, true);
    sub->add_option("--scenario", flags->scenario,
                    "scenario preset, e.g. center-0.2");
    sub->callback([sub, flags] {
      ExperimentConfig config = merge_config(sub, *flags, "simulation-study");
      if (sub->count("--scenario") > 0) config.scenario = flags->scenario;
      if (config.alpha_grid.empty()) {
        throw std::invalid_argument(
            "study needs --alpha-grid or an alpha_grid config entry");
      }
      const ResultTable table = run_simulation_study(config);
      const std::string path = emit_results(config, table, "study");
      std::cout << "wrote " << path << "\n";
    });
  }

  // cv
  {
    auto flags = std::make_shared<RunFlags>();
    CLI::App* sub = app.add_subcommand(
        "cv", "Monte Carlo cross-validation of a compositional field");
    add_run_flags(sub, *flags, true);
    sub->add_option("--input", flags->input, "field CSV");
    sub->callback([sub, flags] {
      ExperimentConfig config = merge_config(sub, *flags, "cross-validation");
      if (sub->count("--input") > 0) config.input = flags->input;
      if (config.input.empty()) {
        throw std::invalid_argument(
            "cv needs --input or an input config entry");
      }
      if (config.alpha_grid.empty()) {
        throw std::invalid_argument(
            "cv needs --alpha-grid or an alpha_grid config entry");
      }
      const LoadedField loaded = load_field(config.input);
      print_census(loaded);
      const ResultTable table = run_cross_validation(config, loaded.field);
      const std::string path = emit_results(config, table, "cv");
      std::cout << "wrote " << path << "\n";
    });
  }

  // krige-map
  {
    auto flags = std::make_shared<RunFlags>();
    struct MapOpts {
      std::string alpha = "ml";
      int grid_nx = 0;
      int grid_ny = 0;
    };
    auto map_opts = std::make_shared<MapOpts>();
    CLI::App* sub = app.add_subcommand(
        "krige-map", "Kriged composition map over the field's bounding box");
    add_run_flags(sub, *flags, false);
    sub->add_option("--input", flags->input, "field CSV");
    sub->add_option("--alpha", map_opts->alpha,
                    "transformation parameter, or \"ml\"");
    sub->add_option("--grid-nx", map_opts->grid_nx, "grid columns");
    sub->add_option("--grid-ny", map_opts->grid_ny, "grid rows");
    sub->callback([sub, flags, map_opts] {
      ExperimentConfig config = merge_config(sub, *flags, "krige-map");
      if (sub->count("--input") > 0) config.input = flags->input;
      if (config.input.empty()) {
        throw std::invalid_argument(
            "krige-map needs --input or an input config entry");
      }
      if (sub->count("--alpha") > 0) {
        config.krige_alpha =
            map_opts->alpha == "ml"
                ? std::numeric_limits<double>::quiet_NaN()
                : resolve_alpha(map_opts->alpha, {}, 0, 0);
      }
      if (sub->count("--grid-nx") > 0) config.grid_nx = map_opts->grid_nx;
      if (sub->count("--grid-ny") > 0) config.grid_ny = map_opts->grid_ny;

      const LoadedField loaded = load_field(config.input);
      print_census(loaded);
      const KrigeMapResult map =
          krige_map(config, loaded.field, loaded.part_names);
      std::filesystem::create_directories(config.out_dir);
      const std::filesystem::path dir(config.out_dir);
      const std::string csv_path = (dir / "krige-map.csv").string();
      write_text_file(csv_path, map.csv());
      write_text_file((dir / "krige-map-manifest.txt").string(),
                      run_manifest(config));
      std::cout << "alpha=" << fmt(map.alpha) << "\n"
                << "out_of_codomain=" << map.out_of_codomain << "\n"
                << "wrote " << csv_path << "\n";
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
