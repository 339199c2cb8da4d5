// mft: batch front end for mutual fund experiments.
//
//   mft <simulate|project|compare|sweep|converge|check-utility|run> --config FILE
//       [--seed N] [--paths N] [--out DIR] [--threads N]
//
// `run` takes the experiment kind from the configuration's "experiment" field.

#include "mft/experiment.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Mutual fund projection experiments"};
  app.require_subcommand(1);

  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> paths;
  std::string out = "results";
  std::size_t threads = mft::default_threads();

  std::vector<std::string> kinds = mft::experiment_kinds();
  kinds.push_back("run");
  for (const auto& kind : kinds) {
    auto* sub = app.add_subcommand(kind, kind == "run" ? "run the experiment named in the configuration"
                                                       : "run a '" + kind + "' experiment");
    sub->add_option("--config", config_file, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (overrides the configuration)");
    sub->add_option("--paths", paths, "Monte Carlo path count (overrides the configuration)");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker threads (default: $MFT_THREADS or 1)")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string kind = app.get_subcommands().front()->get_name();
  try {
    std::ifstream in(config_file);
    const auto cfg = mft::Json::parse(in);
    mft::RunOverrides ov;
    if (kind != "run") ov.experiment = kind;
    ov.seed = seed;
    ov.paths = paths;
    ov.threads = threads;
    ov.out = out;
    ov.base_dir = std::filesystem::absolute(config_file).parent_path();
    const auto result = mft::run_experiment(cfg, ov);
    for (const auto& f : result.files) std::cout << f.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "mft " << kind << ": " << e.what() << '\n';
    return mft::exit_code_for(e);
  }
}
