// oscillab: run, validate and list experiments.

#include "oscillab/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int env_threads() {
  const char* v = std::getenv("OSCILLAB_THREADS");
  if (!v || !*v) return 1;
  try {
    std::size_t pos = 0;
    const int n = std::stoi(v, &pos);
    if (pos == std::string(v).size() && n >= 1) return n;
  } catch (const std::exception&) {
  }
  throw std::runtime_error(std::string("OSCILLAB_THREADS must be a positive integer, got \"") + v + "\"");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hermite-spectral laboratory for the cubic NLS with harmonic potential"};
  app.set_version_flag("--version", OSCILLAB_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  int threads = 0;

  auto* run = app.add_subcommand("run", "run an experiment and write results.csv and manifest.json");
  run->add_option("config", config_path, "config file (key=value or JSON)")->required();
  auto* out_opt = run->add_option("--output-dir", output_dir, "output directory (overrides config)");
  auto* seed_opt = run->add_option("--seed", seed, "seed (overrides config)");
  run->add_option("--threads", threads, "worker threads (default: OSCILLAB_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "parse and check a config without running it");
  validate->add_option("config", config_path, "config file")->required();

  auto* list = app.add_subcommand("list-experiments", "list experiments and their CSV columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (list->parsed()) {
      for (const auto& e : oscillab::experiment_catalog())
        std::cout << e.name << "\t" << e.summary << "\n\tcolumns: " << e.columns << "\n";
      return 0;
    }
    const oscillab::ExperimentConfig cfg = oscillab::parse_config(read_file(config_path));
    if (validate->parsed()) {
      std::cout << "ok: " << oscillab::experiment_info(cfg.experiment).name << "\n";
      return 0;
    }
    oscillab::RunOptions opts;
    if (*out_opt) opts.output_dir = output_dir;
    if (*seed_opt) opts.seed = seed;
    opts.threads = threads > 0 ? threads : env_threads();
    const int code = oscillab::run_experiment(cfg, opts);
    if (code == 2) std::cerr << "warning: run tainted by truncation spillage (see manifest.json)\n";
    return code;
  } catch (const oscillab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
