#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "cfpf/metrics.hpp"
#include "cfpf/run_config.hpp"

namespace cfpf {

// Each command writes its outputs plus config.json (the resolved config)
// into out_dir, creating it if needed, and throws on any failure.

struct GenerateReport {
  std::size_t count = 0;
  std::size_t converged = 0;
  double wall_seconds = 0.0;
};
GenerateReport cmd_generate(const RunConfig& config, std::size_t count,
                            const std::filesystem::path& out_dir, int jobs, std::ostream& log);

// Returns the JSON dump of the result (wall time excluded, so the dump is
// reproducible); also written to out_dir/solve.json when out_dir is set.
std::string cmd_solve(const RunConfig& config, std::uint64_t seed,
                      const std::filesystem::path& out_dir, std::ostream& log);

void cmd_train(const RunConfig& config, const std::filesystem::path& data,
               const std::filesystem::path& out_dir, std::ostream& log);

struct EvalOptions {
  // Replace network predictions with the stored labels (pipeline identity check).
  bool labels_as_predictions = false;
  int histogram_bins = 30;
};
Summary cmd_eval(const RunConfig& config, const std::filesystem::path& data,
                 const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir,
                 const EvalOptions& options, std::ostream& log);

struct BenchReport {
  std::size_t instances = 0;
  double solver_mean = 0.0;
  double solver_median = 0.0;
  double network_mean = 0.0;
  double network_median = 0.0;
  double mean_ratio = 0.0;    // network / solver
  double median_ratio = 0.0;  // network / solver
};
BenchReport cmd_bench(const RunConfig& config, const std::filesystem::path& data,
                      const std::filesystem::path& checkpoint,
                      const std::filesystem::path& out_dir, std::ostream& log);

std::string solver_result_json(const SolverResult& result, const NetworkRealization& realization,
                               int coherence);

}  // namespace cfpf
