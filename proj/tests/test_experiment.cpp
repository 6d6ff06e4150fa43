#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "radmode/experiment.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path dir = fs::path(::testing::TempDir()) / "radmode_cli_tests";
  fs::create_directories(dir);
  return dir;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(RADMODE_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Header and data lines of a CSV output, metadata comments dropped.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  ADD_FAILURE() << "missing column " << name;
  return 0;
}

}  // namespace

TEST(Cli, ExpProducesMonotoneLowerColumn) {
  const auto out = scratch() / "exp.csv";
  ASSERT_EQ(cli("exp --radius 0.5 --trunc 80 --nmax 50 --out " + out.string()), 0);
  const auto rows = csv_rows(slurp(out));
  ASSERT_EQ(rows.size(), 51u);
  const auto lower = column(rows[0], "lower");
  for (std::size_t i = 2; i < rows.size(); ++i)
    EXPECT_GE(std::stod(rows[i][lower]), std::stod(rows[i - 1][lower]));
  const std::string text = slurp(out);
  EXPECT_NE(text.find("# version=" + std::string(radmode::kVersion)), std::string::npos);
  EXPECT_NE(text.find("# summary.verdict=non-attainment-suspected"), std::string::npos);
}

TEST(Cli, RunMaxMatchesReflectionPrinciple) {
  const auto out = scratch() / "runmax.csv";
  ASSERT_EQ(cli("runmax --radius 1 --steps 4096 --samples 100000 --seed 7 --out " + out.string()), 0);
  const auto rows = csv_rows(slurp(out));
  const auto& h = rows[0];
  ASSERT_EQ(rows[1][column(h, "kind")], "ball");
  const double p = std::stod(rows[1][column(h, "p_hat")]);
  const double se = std::stod(rows[1][column(h, "std_error")]);
  EXPECT_NEAR(p, double(oracle::kTwoPhi1Minus1), 4.0 * se);
  EXPECT_EQ(rows[1][column(h, "samples")], "100000");
  EXPECT_EQ(rows[1][column(h, "seed")], "7");
}

TEST(Cli, InvalidConfigLeavesNoFile) {
  const auto out = scratch() / "invalid.csv";
  fs::remove(out);
  EXPECT_EQ(cli("exp --radius 0 --out " + out.string()), 2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_EQ(cli("runmax --samples 10 --out " + out.string()), 2);  // no seed
  EXPECT_EQ(cli("runmax --seed 1 --ramp 0.1,0.2 --out " + out.string()), 2);
  EXPECT_EQ(cli("exp --trunc 10 --nmax 20 --out " + out.string()), 2);
  EXPECT_EQ(cli("exp --bogus 1"), 2);
  EXPECT_EQ(cli("sweep --normalization both"), 2);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, RejectionFailureExitsThreeAndRemovesOutput) {
  const auto out = scratch() / "lil_fail.csv";
  fs::remove(out);
  EXPECT_EQ(cli("lil --seed 1 --steps 256 --samples 200 --max-tries 1 --out " + out.string()), 3);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, RerunsAreByteIdenticalAcrossThreadCounts) {
  // Same output path both times: it is part of the recorded config.
  const auto out = scratch() / "det.csv";
  const std::string args = "reflected --radius 1 --steps 256 --samples 4000 --seed 11 --out " + out.string();
  ASSERT_EQ(cli(args + " --threads 1"), 0);
  const std::string first = slurp(out);
  ASSERT_EQ(cli(args + " --threads 3"), 0);
  EXPECT_EQ(first, slurp(out));
}

TEST(Cli, ConfigFileWithFlagOverrides) {
  const auto cfg = scratch() / "cfg.json";
  const auto out = scratch() / "cfg_out.json";
  std::ofstream(cfg) << R"({"radius": 0.25, "nmax": 7, "trunc": 20, "format": "json"})";
  ASSERT_EQ(cli("exp --config " + cfg.string() + " --radius 0.5 --out " + out.string()), 0);
  const auto doc = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(doc["metadata"]["radius"].get<double>(), 0.5);
  EXPECT_EQ(doc["metadata"]["nmax"].get<int>(), 7);
  EXPECT_EQ(doc["metadata"]["seed"].get<std::string>(), "none");
  EXPECT_EQ(doc["rows"].size(), 7u);
  EXPECT_EQ(doc["summary"]["verdict"].get<std::string>(), "non-attainment-suspected");
  EXPECT_FALSE(doc["metadata"].contains("threads"));

  std::ofstream(cfg) << R"({"radius": 0.25, "colour": "red"})";
  EXPECT_EQ(cli("exp --config " + cfg.string()), 2);
  std::ofstream(cfg) << R"({"subcommand": "sweep"})";
  EXPECT_EQ(cli("exp --config " + cfg.string()), 2);
  EXPECT_EQ(cli("exp --config " + (scratch() / "missing.json").string()), 2);
}

TEST(Cli, StochasticRowsCarryEstimateMetadata) {
  const auto out = scratch() / "lil.csv";
  ASSERT_EQ(cli("lil --seed 5 --steps 256 --samples 2000 --out " + out.string()), 0);
  const auto rows = csv_rows(slurp(out));
  const auto& h = rows[0];
  int stochastic = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][column(h, "kind")] == "boundary") continue;
    ++stochastic;
    for (const char* name : {"p_hat", "std_error", "samples", "seed"})
      EXPECT_FALSE(rows[i][column(h, name)].empty()) << name;
  }
  EXPECT_EQ(stochastic, 3);
}

TEST(Cli, FiniteDimAndSweep) {
  const auto out = scratch() / "fd.csv";
  ASSERT_EQ(cli("finite-dim --dim 5 --radius 0.5 --out " + out.string()), 0);
  const auto rows = csv_rows(slurp(out));
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(std::stod(rows[i][column(rows[0], "center")]), 0.5);
  ASSERT_EQ(cli("sweep --schedule gauss-cond --radii 0.5,1,2 --out " + out.string()), 0);
  EXPECT_EQ(csv_rows(slurp(out)).size(), 4u);
}

TEST(Experiment, FloatsRoundTripInCsv) {
  for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, 2.2250738585072014e-308}) EXPECT_EQ(std::stod(radmode::format_real(x)), x);
}
