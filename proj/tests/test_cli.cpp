#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "pi3nn/cli.hpp"
#include "test_util.hpp"

namespace pi3nn::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "pi3nn");
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  ::testing::internal::CaptureStderr();
  const int code = main(static_cast<int>(argv.size()), argv.data());
  return {code, ::testing::internal::GetCapturedStderr()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const std::vector<std::string> kSmallModel{"--hidden", "12", "--epochs", "60", "--seed", "5"};

std::vector<std::string> with_model(std::vector<std::string> args) {
  args.insert(args.end(), kSmallModel.begin(), kSmallModel.end());
  return args;
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorKind::kArgument), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kConfig), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kShape), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kData), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kNormalization), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kIo), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kDivergence), 4);
  EXPECT_EQ(exit_code_for(ErrorKind::kTie), 4);
  EXPECT_EQ(exit_code_for(ErrorKind::kInfeasibleGamma), 4);
}

TEST(BandFileName, ShortestDecimal) {
  EXPECT_EQ(band_file_name(0.95), "band_gamma_0.95.csv");
  EXPECT_EQ(band_file_name(0.9), "band_gamma_0.9.csv");
  EXPECT_EQ(band_file_name(0.99), "band_gamma_0.99.csv");
}

TEST(Cli, ConfigErrors) {
  testing::TempDir dir("cli_cfg");
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"run", "--unknown-flag"}).code, 2);

  Outcome o = invoke({"run", "--gen", "cubic1d", "--gammas", "0.9,1.5", "--out", dir.path().string()});
  EXPECT_EQ(o.code, 2);
  EXPECT_EQ(o.err.rfind("error: config: ", 0), 0U) << o.err;

  o = invoke({"run", "--gen", "spiral", "--out", dir.path().string()});
  EXPECT_EQ(o.code, 2);
  o = invoke({"run", "--out", dir.path().string()});
  EXPECT_EQ(o.code, 2);
  o = invoke({"run", "--gen", "cubic1d", "--epochs", "0", "--out", dir.path().string()});
  EXPECT_EQ(o.code, 2);
  o = invoke({"ood-bench", "--runs", "0", "--out", dir.path().string()});
  EXPECT_EQ(o.code, 2);
}

TEST(Cli, DataErrors) {
  testing::TempDir dir("cli_data");
  Outcome o = invoke({"run", "--csv", (dir.path() / "missing.csv").string(), "--out", dir.path().string()});
  EXPECT_EQ(o.code, 3);
  EXPECT_EQ(o.err.rfind("error: io: ", 0), 0U) << o.err;

  write_text(dir.path() / "nan.csv", "a,y\n1,2\n2,nan\n3,4\n4,5\n");
  o = invoke({"run", "--csv", (dir.path() / "nan.csv").string(), "--out", dir.path().string()});
  EXPECT_EQ(o.code, 3);
  EXPECT_EQ(o.err.rfind("error: data: ", 0), 0U) << o.err;

  write_text(dir.path() / "ragged.csv", "a,y\n1,2\n2\n");
  EXPECT_EQ(invoke({"run", "--csv", (dir.path() / "ragged.csv").string(), "--out", dir.path().string()}).code, 3);
}

TEST(Cli, InfeasibleGammaOnOddTrainingSet) {
  testing::TempDir dir("cli_infeasible");
  write_text(dir.path() / "six.csv", "a,y\n0,0.1\n1,1.3\n2,1.7\n3,3.4\n4,3.8\n5,5.2\n");
  // Six rows with one held out leaves five: k = ceil(5 * 0.99 / 2) = 3 > 2.
  const Outcome o = invoke(with_model({"run", "--csv", (dir.path() / "six.csv").string(), "--test-fraction",
                                       "0.1", "--gammas", "0.01", "--out", (dir.path() / "o").string()}));
  EXPECT_EQ(o.code, 4);
  EXPECT_EQ(o.err.rfind("error: infeasible_gamma: ", 0), 0U) << o.err;
}

TEST(Cli, TinyCsvRuns) {
  testing::TempDir dir("cli_tiny");
  write_text(dir.path() / "tiny.csv", "x,y\n0,1\n1,2\n2,4\n");
  const fs::path out = dir.path() / "o";
  const Outcome o = invoke(with_model({"run", "--csv", (dir.path() / "tiny.csv").string(), "--target", "y",
                                       "--gammas", "0.9", "--out", out.string()}));
  ASSERT_EQ(o.code, 0) << o.err;
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_EQ(report["n_train"], 2);
  EXPECT_EQ(report["n_test"], 1);
  EXPECT_EQ(report["d_upper_size"], 1);
  EXPECT_TRUE(fs::exists(out / "band_gamma_0.9.csv"));
}

TEST(Cli, RunIsDeterministicAndCalibrated) {
  testing::TempDir dir("cli_run");
  const auto args = [&](const std::string& sub) {
    return with_model({"run", "--gen", "cubic1d", "--n-train", "200", "--n-test", "150", "--gammas",
                       "0.95,0.9,0.99", "--out", (dir.path() / sub).string()});
  };
  ASSERT_EQ(invoke(args("a")).code, 0);
  ASSERT_EQ(invoke(args("b")).code, 0);

  const std::vector<std::string> files{"triplet.json", "report.json", "band_gamma_0.9.csv",
                                       "band_gamma_0.95.csv", "band_gamma_0.99.csv"};
  for (const std::string& f : files) {
    ASSERT_TRUE(fs::exists(dir.path() / "a" / f)) << f;
    EXPECT_EQ(slurp(dir.path() / "a" / f), slurp(dir.path() / "b" / f)) << f;
  }

  const auto report = nlohmann::json::parse(slurp(dir.path() / "a" / "report.json"));
  ASSERT_EQ(report["levels"].size(), 3U);
  EXPECT_TRUE(report["non_crossing"].get<bool>());
  double prev_gamma = 0.0;
  for (const auto& level : report["levels"]) {
    const double g = level["gamma"].get<double>();
    EXPECT_GT(g, prev_gamma);
    prev_gamma = g;
    const auto k = level["target_count"].get<double>();
    EXPECT_DOUBLE_EQ(level["train"]["picp"].get<double>(), 1.0 - 2.0 * k / 200.0);
    EXPECT_EQ(level["test"]["n"], 150);
  }

  std::ifstream band(dir.path() / "a" / "band_gamma_0.9.csv");
  std::string header;
  std::getline(band, header);
  EXPECT_EQ(header, "x0,y,lower,upper,point,width");
  std::size_t rows = 0;
  for (std::string line; std::getline(band, line);) ++rows;
  EXPECT_EQ(rows, 150U);
}

TEST(Cli, DifferentSeedsDiffer) {
  testing::TempDir dir("cli_seed");
  std::vector<std::string> a{"run", "--gen", "cubic10d", "--n-train", "100", "--n-test", "20", "--hidden",
                             "8", "--epochs", "20", "--out", (dir.path() / "a").string(), "--seed", "1"};
  std::vector<std::string> b = a;
  b[12] = (dir.path() / "b").string();
  b.back() = "2";
  ASSERT_EQ(invoke(a).code, 0);
  ASSERT_EQ(invoke(b).code, 0);
  EXPECT_NE(slurp(dir.path() / "a" / "triplet.json"), slurp(dir.path() / "b" / "triplet.json"));
}

TEST(Cli, OodBenchWritesArtifacts) {
  testing::TempDir dir("cli_bench");
  const fs::path out = dir.path() / "o";
  const Outcome o = invoke({"ood-bench", "--n-train", "120", "--n-ood", "40", "--hidden", "8", "--epochs", "30",
                            "--runs", "2", "--bins", "7", "--seed", "3", "--out", out.string()});
  ASSERT_EQ(o.code, 0) << o.err;
  for (const char* mode : {"on", "off"}) {
    for (const char* set : {"ind", "ood"}) {
      for (int seed : {3, 4}) {
        const fs::path p = out / ("hist_" + std::string(mode) + "_" + set + "_seed" + std::to_string(seed) + ".csv");
        ASSERT_TRUE(fs::exists(p)) << p;
        std::ifstream in(p);
        std::size_t lines = 0;
        for (std::string line; std::getline(in, line);) ++lines;
        EXPECT_EQ(lines, 8U);
      }
    }
  }
  const auto report = nlohmann::json::parse(slurp(out / "ood_report.json"));
  ASSERT_EQ(report["runs"].size(), 2U);
  for (const auto& run : report["runs"]) {
    EXPECT_TRUE(run["on"]["ood_enabled"].get<bool>());
    EXPECT_FALSE(run["off"]["ood_enabled"].get<bool>());
    EXPECT_EQ(run["on"]["ind_width"]["n"], 120);
    EXPECT_EQ(run["on"]["ood_width"]["n"], 40);
    EXPECT_TRUE(run["on"]["separation"].contains("mean_ratio"));
  }
}

}  // namespace
}  // namespace pi3nn::cli
