// Command line front end: runs reproducible experiment suites from a config
// file and writes CSV/JSON artifacts.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "cdspec/experiment.hpp"

namespace {

int run_with_config(const std::string& kind, const std::string& config_path,
                    const std::string& out_dir, long seed, long threads) {
  using namespace cdspec;
  try {
    Config cfg = config_path.empty() ? Config{} : Config::parse_file(config_path);
    if (!kind.empty()) cfg.set("experiment", kind);
    if (seed >= 0) cfg.set("seed", std::to_string(seed));
    if (threads > 0) cfg.set("threads", std::to_string(threads));
    const std::string out = out_dir.empty() ? cfg.get_string("out", "cdspec-out") : out_dir;
    auto outcome = run_experiment(cfg, out);
    if (outcome.exit_code == 0) {
      std::cout << "wrote";
      for (const auto& a : outcome.artifacts) std::cout << " " << out << "/" << a;
      std::cout << "\n";
    } else if (!outcome.failure.empty()) {
      std::cerr << "numerical failure: " << outcome.failure << "\n";
    }
    return outcome.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convolution-dominated matrix and Gabor/Weyl experiment runner"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  long seed = -1, threads = 0;
  app.add_option("--config", config_path, "experiment config file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--threads", threads, "worker threads for parameter grids");

  const char* kinds[] = {"stability", "invert-matrix", "gabor",  "almostdiag",
                         "invert-weyl", "framesymbol",   "verify"};
  std::string chosen;
  for (const char* k : kinds) {
    auto* sub = app.add_subcommand(k, std::string("run the ") + k + " experiment");
    sub->fallthrough();  // accept --config etc. after the subcommand name
    sub->callback([&chosen, k] { chosen = k; });
  }

  CLI11_PARSE(app, argc, argv);
  if (chosen != "verify" && config_path.empty()) {
    std::cerr << "config error: --config is required for " << chosen << "\n";
    return 2;
  }
  return run_with_config(chosen, config_path, out_dir, seed, threads);
}
