#include "mft/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mft {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mft_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    rows.push_back(config::split_csv_line(line));
  }
  return rows;
}

Json minimal_config() {
  return Json::parse(R"({
    "schema": "mft-experiment/1",
    "experiment": "simulate",
    "market": {"model": "constant", "states": [{"r": 0.02, "a": [0.1], "sigma": [[0.2]]}]},
    "grid": {"horizon": 1.0, "steps": 8},
    "strategy": {"name": "zero"},
    "utilities": [{"name": "log"}],
    "paths": 50
  })");
}

Json regime_config(const std::string& kind) {
  auto cfg = Json::parse(R"({
    "schema": "mft-experiment/1",
    "market": {
      "model": "regime-switching",
      "states": [
        {"r": 0.02, "a": [0.09, 0.05], "sigma": [[0.2, 0.0], [0.06, 0.25]]},
        {"r": 0.01, "a": [0.0, 0.07], "sigma": [[0.35, 0.1], [0.0, 0.3]]}
      ],
      "rates": [[-2, 2], [3, -3]]
    },
    "grid": {"horizon": 1.0, "steps": 16},
    "strategies": [{"name": "constant", "pi": [0.6, 0.3]}, {"name": "contrarian", "weights": [0.5, 0.2], "kappa": 0.5, "scale": 0.1}],
    "utilities": [{"name": "log"}, {"name": "power", "delta": 1.0}, {"name": "capped-sqrt", "bound": 3.0}],
    "nu_grid": [0, 0.5, 1],
    "eps_list": [0.25, 0.125],
    "paths": 400,
    "seed": 17
  })");
  cfg["experiment"] = kind;
  return cfg;
}

TEST(Experiment, MinimalConfigGivesZeroMean) {
  RunOverrides ov;
  ov.out = scratch("minimal");
  run_experiment(minimal_config(), ov);
  const auto rows = csv_rows(ov.out / "estimates.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][0], "label");
  EXPECT_EQ(rows[1][0], "zero");
  EXPECT_EQ(std::stod(rows[1][2]), 0.0);
  const auto text = slurp(ov.out / "estimates.csv");
  EXPECT_EQ(text.rfind("# manifest_hash=", 0), 0u);
}

TEST(Experiment, CompareMatchesLibrary) {
  RunOverrides ov;
  ov.out = scratch("compare");
  const auto cfg = regime_config("compare");
  run_experiment(cfg, ov);
  const auto rows = csv_rows(ov.out / "compare.csv");
  ASSERT_EQ(rows.size(), 1u + 2u * 3u);

  const auto model = config::market(cfg["market"]);
  const TimeGrid grid(1.0, 16);
  const auto base = contrarian_strategy((Vector(2) << 0.5, 0.2).finished(), 0.5, 0.1);
  const auto pc = paired_compare(model, *base, *lift_projection(base), power_utility(1.0), 1.0, grid, {400, 17, 1});
  const auto& row = rows[5];
  EXPECT_EQ(row[0], "contrarian");
  EXPECT_EQ(row[1], "power(1)");
  EXPECT_EQ(std::stod(row[6]), pc.mean_difference);
  EXPECT_EQ(std::stod(row[7]), pc.std_error);
}

TEST(Experiment, NegativeRateIsInvariantViolation) {
  auto cfg = minimal_config();
  cfg["market"]["states"][0]["r"] = -0.01;
  RunOverrides ov;
  ov.out = scratch("negative");
  try {
    run_experiment(cfg, ov);
    FAIL();
  } catch (const InvariantError& e) {
    EXPECT_EQ(exit_code_for(e), 3);
    EXPECT_NE(std::string(e.what()).find("market.states[0].r"), std::string::npos);
  }
}

TEST(Experiment, ConfigErrors) {
  RunOverrides ov;
  ov.out = scratch("errors");
  auto expect_config_error = [&](Json cfg, const std::string& needle) {
    try {
      run_experiment(cfg, ov);
      FAIL() << needle;
    } catch (const std::exception& e) {
      EXPECT_EQ(exit_code_for(e), 2) << e.what();
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  auto cfg = minimal_config();
  cfg["colour"] = "blue";
  expect_config_error(cfg, "colour");
  cfg = minimal_config();
  cfg["schema"] = "mft-experiment/0";
  expect_config_error(cfg, "schema");
  cfg = minimal_config();
  cfg["strategy"] = {{"name", "martingale"}};
  expect_config_error(cfg, "martingale");
  cfg = minimal_config();
  cfg["utilities"] = Json::array({{{"name", "power"}, {"delta", -1}}});
  expect_config_error(cfg, "delta");
  cfg = minimal_config();
  cfg["grid"]["extra"] = 1;
  expect_config_error(cfg, "extra");
}

TEST(Experiment, ManifestRerunIsByteIdentical) {
  for (const std::string kind : {"simulate", "compare", "sweep", "converge", "project", "check-utility"}) {
    RunOverrides first;
    first.out = scratch("first_" + kind);
    first.threads = 1;
    const auto out = run_experiment(regime_config(kind), first);
    const auto manifest = Json::parse(slurp(first.out / "manifest.json"));
    RunOverrides second;
    second.out = scratch("second_" + kind);
    second.threads = 8;
    run_experiment(manifest, second);
    for (const auto& f : out.files) {
      EXPECT_EQ(slurp(f), slurp(second.out / f.filename())) << kind << " " << f.filename();
    }
  }
}

TEST(Experiment, SweepTable) {
  RunOverrides ov;
  ov.out = scratch("sweep");
  run_experiment(regime_config("sweep"), ov);
  const auto rows = csv_rows(ov.out / "sweep.csv");
  ASSERT_EQ(rows.size(), 1u + 3u * 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"label", "nu", "mean", "stderr", "paths", "seed"}));
  EXPECT_EQ(std::stod(rows[1][2]), 0.0);  // nu = 0, log utility, x0 = 1
}

TEST(Experiment, ProjectFromTraceFile) {
  const auto dir = scratch("trace");
  {
    std::ofstream tf(dir / "trace.csv");
    tf << "node,pi_1,pi_2\n";
    for (int i = 0; i < 16; ++i) tf << i << ",0.5," << (i % 2 ? -0.2 : 0.4) << '\n';
  }
  auto cfg = regime_config("project");
  cfg["trace_file"] = "trace.csv";
  RunOverrides ov;
  ov.out = dir / "out";
  ov.base_dir = dir;
  run_experiment(cfg, ov);
  const auto rows = csv_rows(ov.out / "certificates.csv");
  ASSERT_EQ(rows.size(), 17u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_NEAR(std::stod(rows[i][5]), std::stod(rows[i][6]), 1e-12);  // volatility preserved
    EXPECT_GE(std::stod(rows[i][7]), -1e-14);                         // drift gap
  }
}

TEST(Experiment, CheckUtilityReport) {
  auto cfg = regime_config("check-utility");
  cfg["utilities"].push_back({{"name", "piecewise-linear"}, {"x", {0.5, 1.0, 2.0}}, {"y", {0.0, 1.0, 0.5}}});
  RunOverrides ov;
  ov.out = scratch("check");
  run_experiment(cfg, ov);
  const auto rows = csv_rows(ov.out / "admissibility.csv");
  bool flagged = false;
  for (const auto& r : rows) flagged |= r[0] == "piecewise-linear" && r[1] == "0" && r[3] == "monotone";
  EXPECT_TRUE(flagged);
}

TEST(Experiment, DefaultThreadsFromEnvironment) {
  ::setenv("MFT_THREADS", "6", 1);
  EXPECT_EQ(default_threads(), 6u);
  ::setenv("MFT_THREADS", "zero", 1);
  EXPECT_EQ(default_threads(), 1u);
  ::unsetenv("MFT_THREADS");
  EXPECT_EQ(default_threads(), 1u);
}

int run_cli(const std::string& args) {
  const int rc = std::system((std::string(MFT_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Cli, ExitCodesAndOverrides) {
  const auto dir = scratch("cli");
  auto write = [&](const std::string& name, const Json& j) {
    std::ofstream(dir / name) << j.dump(2);
    return (dir / name).string();
  };
  const auto good = write("good.json", minimal_config());
  EXPECT_EQ(run_cli("simulate --config " + good + " --out " + (dir / "a").string() + " --seed 4 --paths 20"), 0);
  const auto manifest = Json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 4);
  EXPECT_EQ(manifest["paths"], 20);

  auto bad = minimal_config();
  bad["market"]["states"][0]["r"] = -1;
  EXPECT_EQ(run_cli("run --config " + write("neg.json", bad) + " --out " + (dir / "b").string()), 3);
  bad = minimal_config();
  bad["unknown"] = true;
  EXPECT_EQ(run_cli("run --config " + write("unknown.json", bad) + " --out " + (dir / "c").string()), 2);
  EXPECT_EQ(run_cli("simulate --config " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("simulate --config " + good + " --threads 0"), 2);

  auto numeric = minimal_config();
  numeric["strategy"] = {{"name", "constant"}, {"pi", {400.0}}};
  numeric["grid"]["steps"] = 1;
  numeric["utilities"] = Json::array({{{"name", "power"}, {"delta", 2.0}}});
  EXPECT_EQ(run_cli("simulate --config " + write("numeric.json", numeric) + " --out " + (dir / "d").string()), 4);

  EXPECT_EQ(run_cli("compare --config " + good + " --out " + (dir / "e").string() + " --threads 1"), 0);
  EXPECT_EQ(run_cli("compare --config " + good + " --out " + (dir / "f").string() + " --threads 8"), 0);
  EXPECT_EQ(slurp(dir / "e" / "compare.csv"), slurp(dir / "f" / "compare.csv"));
}

}  // namespace
}  // namespace mft
