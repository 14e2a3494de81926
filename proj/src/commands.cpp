#include "pi3nn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pi3nn/data.hpp"
#include "pi3nn/error.hpp"
#include "text.hpp"

namespace pi3nn::cli {
namespace {

// Seed streams for the data generators; model seeds are derived in fit().
constexpr std::uint64_t kTrainDataStream = 100;
constexpr std::uint64_t kTestDataStream = 101;
constexpr std::uint64_t kSplitStream = 102;

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void require_finite(const IntervalBand& band) {
  if (!band.lower.allFinite() || !band.upper.allFinite() || !band.point_mean.allFinite()) {
    fail(ErrorKind::kDivergence,
         "non-finite interval bound for gamma " + detail::format_double(band.gamma));
  }
}

// Bands must be sorted by ascending gamma.
void require_non_crossing(const std::vector<IntervalBand>& bands) {
  for (std::size_t k = 1; k < bands.size(); ++k) {
    const IntervalBand& narrow = bands[k - 1];
    const IntervalBand& wide = bands[k];
    for (Index i = 0; i < wide.size(); ++i) {
      if (wide.upper(i) < narrow.upper(i) || wide.lower(i) > narrow.lower(i)) {
        fail(ErrorKind::kDivergence, "bands for gamma " + detail::format_double(narrow.gamma) +
                                         " and " + detail::format_double(wide.gamma) +
                                         " cross at row " + std::to_string(i));
      }
    }
  }
}

double mean_of(const Vector& v) { return v.size() == 0 ? 0.0 : v.mean(); }

double std_of(const Vector& v) {
  if (v.size() == 0) return 0.0;
  return std::sqrt((v.array() - v.mean()).square().mean());
}

nlohmann::json model_options_json(const ModelOptions& m) {
  return {{"hidden", m.hidden},   {"epochs", m.epochs}, {"lr", m.lr},
          {"batch_size", m.batch_size}, {"l1", m.l1},   {"l2", m.l2},
          {"ood", m.ood},         {"ood_factor", m.ood_factor}, {"seed", m.seed}};
}

nlohmann::json mode_json(const OodModeResult& r) {
  return {{"ood_enabled", r.ood_enabled},
          {"alpha", r.solution.alpha},
          {"beta", r.solution.beta},
          {"train_picp", r.train_picp},
          {"ind_score_mean", mean_of(r.ind_scores)},
          {"ind_score_std", std_of(r.ind_scores)},
          {"ood_score_mean", mean_of(r.ood_scores)},
          {"ood_score_std", std_of(r.ood_scores)},
          {"ind_width", r.ind_widths},
          {"ood_width", r.ood_widths},
          {"separation", r.separation}};
}

void add_model_options(CLI::App& app, ModelOptions& m) {
  app.add_option("--hidden", m.hidden, "Hidden layer widths")->delimiter(',');
  app.add_option("--epochs", m.epochs, "Training epochs per network");
  app.add_option("--lr", m.lr, "Learning rate");
  app.add_option("--batch-size", m.batch_size, "Mini-batch size (0 = full batch)");
  app.add_option("--l1", m.l1, "L1 weight penalty");
  app.add_option("--l2", m.l2, "L2 weight penalty");
  app.add_option("--ood-factor", m.ood_factor, "Output-bias multiplier c");
  app.add_option("--seed", m.seed, "Base random seed");
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kArgument:
    case ErrorKind::kConfig:
      return kExitConfig;
    case ErrorKind::kShape:
    case ErrorKind::kData:
    case ErrorKind::kNormalization:
    case ErrorKind::kIo:
      return kExitData;
    case ErrorKind::kDivergence:
    case ErrorKind::kTie:
    case ErrorKind::kInfeasibleGamma:
      return kExitNumeric;
  }
  return kExitNumeric;
}

nnet::MlpSpec ModelOptions::mlp_spec() const {
  nnet::MlpSpec s;
  s.hidden_widths = hidden;
  s.l1 = l1;
  s.l2 = l2;
  s.seed = seed;
  return s;
}

nnet::TrainConfig ModelOptions::train_config() const {
  nnet::TrainConfig c;
  c.learning_rate = lr;
  c.epochs = epochs;
  c.batch_size = batch_size;
  c.seed = seed;
  return c;
}

OodConfig ModelOptions::ood_config() const {
  OodConfig o;
  o.enabled = ood;
  o.c = ood_factor;
  return o;
}

void RunConfig::normalize_and_validate() {
  if (gen.empty() == csv.empty()) fail(ErrorKind::kConfig, "give exactly one of --gen or --csv");
  if (!gen.empty() && gen != "cubic1d" && gen != "cubic10d") {
    fail(ErrorKind::kConfig, "unknown generator '" + gen + "' (expected cubic1d or cubic10d)");
  }
  if (gammas.empty()) fail(ErrorKind::kConfig, "at least one gamma is required");
  for (double g : gammas) {
    if (!(g > 0.0 && g < 1.0)) {
      fail(ErrorKind::kConfig, "gamma " + detail::format_double(g) + " is outside (0, 1)");
    }
  }
  std::sort(gammas.begin(), gammas.end());
  gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());
  if (n_train < 1 || n_test < 1) fail(ErrorKind::kConfig, "sample counts must be positive");
  try {
    model.mlp_spec().validate();
    model.train_config().validate();
    model.ood_config().validate();
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, e.what());
  }
}

void OodBenchConfig::validate() const {
  if (n_train < 4 || n_ood < 1) fail(ErrorKind::kConfig, "sample counts are too small");
  if (!(gamma > 0.0 && gamma < 1.0)) fail(ErrorKind::kConfig, "gamma must lie in (0, 1)");
  if (runs < 1) fail(ErrorKind::kConfig, "runs must be at least 1");
  if (bins < 1) fail(ErrorKind::kConfig, "bins must be at least 1");
  try {
    model.mlp_spec().validate();
    model.train_config().validate();
    model.ood_config().validate();
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, e.what());
  }
}

std::string band_file_name(double gamma) {
  return "band_gamma_" + detail::format_double(gamma) + ".csv";
}

void cmd_run(RunConfig cfg) {
  cfg.normalize_and_validate();
  const std::uint64_t seed = cfg.model.seed;

  data::Dataset train;
  data::Dataset test;
  if (cfg.gen == "cubic1d") {
    std::tie(train, test) =
        data::gen_cubic_1d(cfg.n_train, cfg.n_test, {-4.0, 4.0}, {-7.0, 7.0},
                           data::NoiseSpec::asymmetric(), derive_seed(seed, kTrainDataStream));
  } else if (cfg.gen == "cubic10d") {
    train = data::gen_cubic_10d(cfg.n_train, 0.0, derive_seed(seed, kTrainDataStream));
    test = data::gen_cubic_10d(cfg.n_test, 2.0, derive_seed(seed, kTestDataStream));
  } else {
    data::Split parts = data::split(data::load_csv(cfg.csv, cfg.target), cfg.test_fraction,
                                    derive_seed(seed, kSplitStream));
    train = std::move(parts.train);
    test = std::move(parts.test);
  }

  const auto n = static_cast<std::size_t>(train.size());
  for (double g : cfg.gammas) {
    const std::size_t k = exceedance_target(n, g);
    if (k > n / 2) {
      fail(ErrorKind::kInfeasibleGamma,
           "gamma " + detail::format_double(g) + " needs " + std::to_string(k) +
               " exceedances per side but only " + std::to_string(n / 2) +
               " training samples lie above the median");
    }
  }

  const TrainedTriplet triplet =
      fit(train, cfg.model.mlp_spec(), cfg.model.train_config(), cfg.model.ood_config());
  const std::vector<GammaSolution> solutions = solve_gammas(triplet, train, cfg.gammas);
  const std::vector<IntervalBand> test_bands = predict_intervals(triplet, solutions, test.x);
  const std::vector<IntervalBand> train_bands = predict_intervals(triplet, solutions, train.x);
  for (const IntervalBand& b : test_bands) require_finite(b);
  require_non_crossing(test_bands);
  require_non_crossing(train_bands);

  std::filesystem::create_directories(cfg.out);
  save_triplet(triplet, cfg.out / "triplet.json");

  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t k = 0; k < solutions.size(); ++k) {
    write_band_csv(cfg.out / band_file_name(solutions[k].gamma), test_bands[k], test.x, &test.y);
    levels.push_back({{"gamma", solutions[k].gamma},
                      {"alpha", solutions[k].alpha},
                      {"beta", solutions[k].beta},
                      {"target_count", solutions[k].target_count},
                      {"band_file", band_file_name(solutions[k].gamma)},
                      {"train", metrics::coverage(train_bands[k], train.y)},
                      {"test", metrics::coverage(test_bands[k], test.y)}});
  }
  nlohmann::json report{
      {"command", "run"},
      {"source", cfg.gen.empty() ? "csv" : cfg.gen},
      {"n_train", train.size()},
      {"n_test", test.size()},
      {"nu", triplet.nu},
      {"d_upper_size", triplet.d_upper_idx.size()},
      {"d_lower_size", triplet.d_lower_idx.size()},
      {"model", model_options_json(cfg.model)},
      {"levels", std::move(levels)},
      {"non_crossing", true},
  };
  write_json(cfg.out / "report.json", report);
}

OodModeResult run_ood_mode(const OodBenchConfig& cfg, bool ood_enabled, std::uint64_t seed) {
  cfg.validate();
  const data::Dataset train = data::gen_cubic_10d(cfg.n_train, 0.0, derive_seed(seed, kTrainDataStream));
  const data::Dataset ood = data::gen_cubic_10d(cfg.n_ood, cfg.ood_mean, derive_seed(seed, kTestDataStream));

  ModelOptions m = cfg.model;
  m.seed = seed;
  m.ood = ood_enabled;
  const TrainedTriplet triplet = fit(train, m.mlp_spec(), m.train_config(), m.ood_config());
  const std::vector<double> gammas{cfg.gamma};

  OodModeResult r;
  r.ood_enabled = ood_enabled;
  r.seed = seed;
  r.solution = solve_gammas(triplet, train, gammas).front();
  const IntervalBand ind_band = predict_interval(triplet, r.solution, train.x);
  const IntervalBand ood_band = predict_interval(triplet, r.solution, ood.x);
  require_finite(ind_band);
  require_finite(ood_band);
  r.train_picp = metrics::picp(ind_band, train.y);
  r.ind_scores = confidence_scores(triplet, r.solution, train, train.x);
  r.ood_scores = confidence_scores(triplet, r.solution, train, ood.x);
  r.ind_widths = metrics::width_distribution(ind_band, cfg.bins);
  r.ood_widths = metrics::width_distribution(ood_band, cfg.bins);
  r.separation = metrics::separation_report(r.ind_widths, r.ood_widths);
  return r;
}

void cmd_ood_bench(const OodBenchConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out);

  nlohmann::json runs = nlohmann::json::array();
  for (int k = 0; k < cfg.runs; ++k) {
    const std::uint64_t seed = cfg.model.seed + static_cast<std::uint64_t>(k);
    nlohmann::json entry{{"seed", seed}};
    for (const bool on : {true, false}) {
      const OodModeResult r = run_ood_mode(cfg, on, seed);
      const std::string mode = on ? "on" : "off";
      const std::string suffix = "_seed" + std::to_string(seed) + ".csv";
      metrics::write_histogram_csv(cfg.out / ("hist_" + mode + "_ind" + suffix), r.ind_widths.histogram);
      metrics::write_histogram_csv(cfg.out / ("hist_" + mode + "_ood" + suffix), r.ood_widths.histogram);
      entry[mode] = mode_json(r);
    }
    runs.push_back(std::move(entry));
  }

  nlohmann::json report{
      {"command", "ood-bench"},
      {"n_train", cfg.n_train},
      {"n_ood", cfg.n_ood},
      {"ood_mean", cfg.ood_mean},
      {"gamma", cfg.gamma},
      {"model", model_options_json(cfg.model)},
      {"runs", std::move(runs)},
  };
  write_json(cfg.out / "ood_report.json", report);
}

int main(int argc, char** argv) {
  CLI::App app{"Prediction intervals from three MSE-trained networks"};
  app.require_subcommand(1);

  RunConfig run;
  CLI::App* run_cmd = app.add_subcommand("run", "Train, solve confidence levels, write bands");
  run_cmd->add_option("--gen", run.gen, "Synthetic generator: cubic1d or cubic10d");
  run_cmd->add_option("--csv", run.csv, "Input CSV with a header row");
  run_cmd->add_option("--target", run.target, "Target column name or index");
  run_cmd->add_option("--test-fraction", run.test_fraction, "Held-out fraction for CSV input");
  run_cmd->add_option("--n-train", run.n_train, "Generated training samples");
  run_cmd->add_option("--n-test", run.n_test, "Generated test samples");
  run_cmd->add_option("--gammas", run.gammas, "Comma-separated confidence levels")->delimiter(',');
  run_cmd->add_flag("--ood", run.model.ood, "Enable the output-bias OOD initialization");
  run_cmd->add_option("--out", run.out, "Output directory");
  add_model_options(*run_cmd, run.model);

  OodBenchConfig bench;
  bench.model.epochs = 3000;
  CLI::App* bench_cmd = app.add_subcommand("ood-bench", "10-D cubic OOD experiment, OOD mode on and off");
  bench_cmd->add_option("--n-train", bench.n_train, "Training samples from N(0,1)");
  bench_cmd->add_option("--n-ood", bench.n_ood, "OOD samples");
  bench_cmd->add_option("--ood-mean", bench.ood_mean, "Mean of the OOD input distribution");
  bench_cmd->add_option("--gamma", bench.gamma, "Confidence level");
  bench_cmd->add_option("--runs", bench.runs, "Number of seeds (seed, seed+1, ...)");
  bench_cmd->add_option("--bins", bench.bins, "Histogram bins");
  bench_cmd->add_option("--out", bench.out, "Output directory");
  add_model_options(*bench_cmd, bench.model);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (run_cmd->parsed()) cmd_run(run);
    if (bench_cmd->parsed()) cmd_ood_bench(bench);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: io: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace pi3nn::cli
