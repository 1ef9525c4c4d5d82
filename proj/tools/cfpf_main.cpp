// cfpf: dataset generation, solving, training, evaluation and benchmarking
// for proportional-fair uplink power control in cell-free massive MIMO.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cfpf/commands.hpp"
#include "cfpf/run_config.hpp"

namespace {

cfpf::RunConfig resolve_config(const std::string& path) {
  cfpf::RunConfig config = cfpf::load_run_config(path);
  if (const char* env = std::getenv("CFPF_SEED"); env != nullptr && *env != '\0') {
    std::size_t used = 0;
    const unsigned long long seed = std::stoull(env, &used, 0);
    if (used != std::string(env).size())
      throw std::invalid_argument("CFPF_SEED is not an integer: " + std::string(env));
    config.seed = seed;
  }
  return config;
}

// Empty flag falls back to the config's paths section.
std::string pick(const std::string& flag, const std::string& fallback, const char* what) {
  const std::string& v = flag.empty() ? fallback : flag;
  if (v.empty()) throw CLI::RequiredError(what);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proportional-fair power control for cell-free massive MIMO uplink"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::string data;
  std::string checkpoint;
  std::size_t count = 0;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  bool labels_as_predictions = false;
  int bins = 30;

  auto* gen = app.add_subcommand("generate", "Generate a labeled dataset");
  gen->add_option("--config", config_path, "Run config (JSON)")->required();
  gen->add_option("--count", count, "Number of samples (default: dataset.count)");
  gen->add_option("--out", out, "Output directory");
  gen->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* solve = app.add_subcommand("solve", "Drop one network and run the alternating solver");
  solve->add_option("--config", config_path, "Run config (JSON)")->required();
  solve->add_option("--seed", seed, "Realization seed (default: config seed)");
  solve->add_option("--out", out, "Output directory for solve.json");

  auto* trn = app.add_subcommand("train", "Train the power-prediction network");
  trn->add_option("--config", config_path, "Run config (JSON)")->required();
  trn->add_option("--data", data, "Dataset file");
  trn->add_option("--out", out, "Output directory");

  auto* eval = app.add_subcommand("eval", "Compare network and solver on the test split");
  eval->add_option("--config", config_path, "Run config (JSON)")->required();
  eval->add_option("--data", data, "Dataset file");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file");
  eval->add_option("--out", out, "Output directory");
  eval->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);
  eval->add_flag("--labels-as-predictions", labels_as_predictions,
                 "Use stored solver labels in place of network output");

  auto* bench = app.add_subcommand("bench", "Time solver against network inference");
  bench->add_option("--config", config_path, "Run config (JSON)")->required();
  bench->add_option("--data", data, "Dataset file");
  bench->add_option("--checkpoint", checkpoint, "Checkpoint file");
  bench->add_option("--out", out, "Optional output directory for bench.json");

  CLI11_PARSE(app, argc, argv);

  try {
    const cfpf::RunConfig config = resolve_config(config_path);
    if (gen->parsed()) {
      const std::size_t n = gen->count("--count") > 0 ? count : config.dataset.count;
      if (n == 0) {
        std::cerr << "error: --count must be >= 1\n";
        return 2;
      }
      cfpf::cmd_generate(config, n, pick(out, config.paths.out, "--out"), jobs, std::cout);
    } else if (solve->parsed()) {
      cfpf::cmd_solve(config, seed.value_or(config.seed), out, std::cout);
    } else if (trn->parsed()) {
      cfpf::cmd_train(config, pick(data, config.paths.data, "--data"),
                      pick(out, config.paths.out, "--out"), std::cout);
    } else if (eval->parsed()) {
      cfpf::EvalOptions opts;
      opts.labels_as_predictions = labels_as_predictions;
      opts.histogram_bins = bins;
      cfpf::cmd_eval(config, pick(data, config.paths.data, "--data"),
                     pick(checkpoint, config.paths.checkpoint, "--checkpoint"),
                     pick(out, config.paths.out, "--out"), opts, std::cout);
    } else if (bench->parsed()) {
      cfpf::cmd_bench(config, pick(data, config.paths.data, "--data"),
                      pick(checkpoint, config.paths.checkpoint, "--checkpoint"), out, std::cout);
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
