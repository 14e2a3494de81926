#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pi3nn/error.hpp"
#include "pi3nn/metrics.hpp"
#include "pi3nn/nnet.hpp"
#include "pi3nn/triplet.hpp"

namespace pi3nn::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
};

int exit_code_for(ErrorKind kind) noexcept;

/// Hyper-parameters shared by every command.
struct ModelOptions {
  std::vector<Index> hidden{100};
  int epochs = 2000;
  double lr = 0.01;
  Index batch_size = 0;
  double l1 = 0.0;
  double l2 = 0.0;
  bool ood = false;
  double ood_factor = 10.0;
  std::uint64_t seed = 0;

  nnet::MlpSpec mlp_spec() const;
  nnet::TrainConfig train_config() const;
  OodConfig ood_config() const;
};

struct RunConfig {
  /// "cubic1d", "cubic10d", or empty when reading `csv`.
  std::string gen;
  std::filesystem::path csv;
  std::string target = "y";
  double test_fraction = 0.1;
  Index n_train = 1000;
  Index n_test = 1000;
  std::vector<double> gammas{0.9, 0.95, 0.99};
  ModelOptions model;
  std::filesystem::path out = "out";

  /// Deduplicates and sorts gammas; throws kConfig on invalid settings.
  void normalize_and_validate();
};

struct OodBenchConfig {
  Index n_train = 5000;
  Index n_ood = 1000;
  double ood_mean = 2.0;
  double gamma = 0.9;
  int runs = 1;
  std::size_t bins = 50;
  ModelOptions model;
  std::filesystem::path out = "out";

  void validate() const;
};

/// One mode (OOD initialization on or off) of the 10-D cubic experiment.
struct OodModeResult {
  bool ood_enabled = false;
  std::uint64_t seed = 0;
  GammaSolution solution;
  Vector ind_scores;
  Vector ood_scores;
  metrics::WidthDistribution ind_widths;
  metrics::WidthDistribution ood_widths;
  metrics::SeparationReport separation;
  double train_picp = 0.0;
};

/// Trains on N(0,1) inputs and evaluates on the training inputs (InD) and on
/// fresh N(ood_mean,1) inputs (OOD). `ood_enabled` overrides cfg.model.ood.
OodModeResult run_ood_mode(const OodBenchConfig& cfg, bool ood_enabled, std::uint64_t seed);

/// Writes triplet.json, band_gamma_<g>.csv per level and report.json.
void cmd_run(RunConfig cfg);

/// Writes ood_report.json and width histograms for both modes.
void cmd_ood_bench(const OodBenchConfig& cfg);

/// File name used for a confidence level's band, e.g. band_gamma_0.95.csv.
std::string band_file_name(double gamma);

/// Entry point for the pi3nn executable. Errors are printed to stderr as
/// a single line "error: <category>: <message>".
int main(int argc, char** argv);

}  // namespace pi3nn::cli
