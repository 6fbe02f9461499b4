#include "ttpdf/errors.hpp"
#include "ttpdf_cli/config.hpp"
#include "ttpdf_cli/study.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace ttpdf;
using namespace ttpdf::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ttpdf_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error(const std::string& text) {
  std::istringstream in(text);
  try {
    validate(parse_config(in));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

// Two-dimensional Rosenbrock on a coarse grid: fast enough for end-to-end runs.
ExperimentConfig small_study(const fs::path& out, std::size_t reps) {
  std::istringstream in(R"([study]
name = small
methods = TT-MH, TT-rIW, TT-qIW, AM
samples = 1024
repetitions = 2
seed = 11
[target]
kind = rosenbrock
dimension = 2
[tt]
grid = 48, 256
delta = 1e-2
rho = 4
)");
  auto c = parse_config(in);
  c.repetitions = reps;
  c.output = out;
  validate(c);
  return c;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Config, ErrorsNameTheField) {
  EXPECT_NE(config_error("[study]\nsamples = many\n").find("study.samples"), std::string::npos);
  EXPECT_NE(config_error("[tt]\ndelta = -1\n").find("tt.delta"), std::string::npos);
  EXPECT_NE(config_error("[study]\nbogus = 1\n").find("study.bogus"), std::string::npos);
  EXPECT_NE(config_error("[study]\nmethods = TT-qIW\nsamples = 1000\n").find("study.samples"),
            std::string::npos);
  EXPECT_NE(config_error("[study]\nmethods = TT-MH-2L\n").find("study.coarse_samples"), std::string::npos);
  EXPECT_NE(config_error("[target]\nkind = rosenbrock\ndimension = 1\n").find("target.dimension"),
            std::string::npos);
}

TEST(Config, IniRoundTrip) {
  for (const auto& name : preset_names())
    for (auto scale : {Scale::desk, Scale::paper})
      for (const auto& c : preset(name, scale, "out")) {
        std::istringstream in(to_ini(c));
        auto back = parse_config(in);
        EXPECT_EQ(to_ini(back), to_ini(c)) << c.name;
      }
}

TEST(Config, PresetsValidate) {
  for (const auto& name : preset_names())
    for (auto scale : {Scale::desk, Scale::paper}) EXPECT_NO_THROW(preset(name, scale, "out")) << name;
  EXPECT_THROW(preset("nope", Scale::desk, "out"), ConfigError);
  EXPECT_EQ(preset("rosen-table3", Scale::paper, "out").size(), 5u);
}

TEST(Config, DeskScaleKeepsStructure) {
  for (const auto& name : preset_names()) {
    auto desk = preset(name, Scale::desk, "out");
    auto paper = preset(name, Scale::paper, "out");
    ASSERT_FALSE(desk.empty());
    for (std::size_t i = 0; i < desk.size(); ++i) {
      EXPECT_EQ(desk[i].methods, paper[std::min(i, paper.size() - 1)].methods) << name;
      EXPECT_LE(desk[i].samples.back(), paper[std::min(i, paper.size() - 1)].samples.back()) << name;
    }
  }
}

TEST(Study, RelativeSpread) {
  EXPECT_TRUE(std::isnan(relative_spread(std::vector<double>{1.0})));
  EXPECT_DOUBLE_EQ(relative_spread(std::vector<double>{1.0, 3.0}), 0.5);
  EXPECT_DOUBLE_EQ(relative_spread(std::vector<double>{2.0, 2.0, 2.0}), 0.0);
}

TEST(Study, SingleRepetitionReportsNullSpread) {
  auto dir = scratch("r1");
  std::ostringstream log;
  ASSERT_EQ(run_study(small_study(dir, 1), log), 0);
  auto rows = read_csv(dir / "summary.csv");
  ASSERT_GT(rows.size(), 1u);
  std::size_t eq = 0, ett = 0;
  for (std::size_t j = 0; j < rows[0].size(); ++j) {
    if (rows[0][j] == "E_q") eq = j;
    if (rows[0][j] == "E_TT") ett = j;
  }
  ASSERT_GT(eq, 0u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i][eq], "null");
    EXPECT_EQ(rows[i][ett], "null");
  }
}

TEST(Study, IdenticalSeedsGiveIdenticalFiles) {
  auto a = scratch("det_a"), b = scratch("det_b");
  std::ostringstream log;
  ASSERT_EQ(run_study(small_study(a, 2), log), 0);
  ASSERT_EQ(run_study(small_study(b, 2), log), 0);
  for (const char* f : {"runs.jsonl", "summary.csv", "cross.jsonl"}) {
    std::string x = slurp(a / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(b / f)) << f;
  }
  // study.json records the output directory, which differs here.
  auto strip = [](std::string text, const std::string& dir) {
    for (auto pos = text.find(dir); pos != std::string::npos; pos = text.find(dir))
      text.replace(pos, dir.size(), "OUT");
    return text;
  };
  EXPECT_EQ(strip(slurp(a / "study.json"), a.string()), strip(slurp(b / "study.json"), b.string()));
}

TEST(Study, PhasesCoverWallClock) {
  auto dir = scratch("phases");
  std::ostringstream log;
  ASSERT_EQ(run_study(small_study(dir, 2), log), 0);
  std::ifstream in(dir / "timings.jsonl");
  std::string line;
  int seen = 0;
  while (std::getline(in, line)) {
    auto j = json::parse(line);
    if (!j.contains("phases")) continue;
    double sum = 0.0;
    for (auto& [k, v] : j["phases"].items()) sum += v.get<double>();
    EXPECT_GE(sum, 0.95 * j["wall"].get<double>());
    EXPECT_LE(sum, 1.0001 * j["wall"].get<double>());
    ++seen;
  }
  EXPECT_EQ(seen, 2);
}

TEST(Study, RosenbrockSmokePresetMixesWell) {
  auto dir = scratch("smoke");
  auto configs = preset("rosen-smoke", Scale::desk, dir);
  ASSERT_EQ(configs.size(), 1u);
  std::ostringstream log;
  ASSERT_EQ(run_study(configs[0], log), 0);
  std::ifstream in(dir / "runs.jsonl");
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  auto j = json::parse(line);
  EXPECT_EQ(j["method"], "TT-MH");
  EXPECT_LE(j["tau"].get<double>(), 1.5);
}

TEST(Study, PlotDataFromRuns) {
  auto dir = scratch("plot");
  std::ostringstream log;
  ASSERT_EQ(run_study(small_study(dir, 2), log), 0);
  write_plot_data(dir, log);
  auto rows = read_csv(dir / "plot" / "error_vs_N.csv");
  ASSERT_GT(rows.size(), 1u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"series", "x", "y"}));
  EXPECT_TRUE(fs::exists(dir / "plot" / "error_vs_time.csv"));
}
