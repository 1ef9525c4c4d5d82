#include "cfpf/commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cfpf/dataset.hpp"
#include "cfpf/power_rdn.hpp"
#include "json.hpp"

namespace cfpf {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void prepare_out_dir(const fs::path& dir, const RunConfig& config) {
  fs::create_directories(dir);
  write_text(dir / "config.json", to_json(config));
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_header(const DatasetFile& file, const RunConfig& config) {
  const auto& h = file.header;
  if (h.aps != static_cast<std::uint32_t>(config.network.aps) ||
      h.users != static_cast<std::uint32_t>(config.network.users) ||
      h.pilots != static_cast<std::uint32_t>(config.network.pilots))
    throw std::invalid_argument("dataset header (M, K, tau) does not match the config");
}

void check_model(const Checkpoint& ckpt, const RunConfig& config) {
  if (ckpt.config.aps != config.network.aps || ckpt.config.users != config.network.users ||
      ckpt.config.pilots != config.network.pilots)
    throw std::invalid_argument("checkpoint geometry (M, K, tau) does not match the config");
}

Split config_split(const DatasetFile& file, const RunConfig& config) {
  const auto& d = config.dataset;
  return split(file.samples.size(), d.train_count, d.val_count, d.test_count);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

GenerateReport cmd_generate(const RunConfig& config, std::size_t count, const fs::path& out_dir,
                            int jobs, std::ostream& log) {
  if (count == 0) throw std::invalid_argument("--count must be >= 1");
  prepare_out_dir(out_dir, config);
  const auto start = Clock::now();
  GeneratedDataset data = generate(config.network, count, config.seed, config.solver, jobs,
                                   config.dataset.encoding);
  write_dataset(out_dir / "dataset.bin", data.file);

  // Read back so a corrupt write never exits 0.
  const DatasetFile check = read_dataset(out_dir / "dataset.bin");
  if (check.samples != data.file.samples) throw std::runtime_error("dataset verification failed");

  GenerateReport report;
  report.count = count;
  report.wall_seconds = seconds_since(start);
  std::vector<std::size_t> not_converged;
  std::vector<double> outer;
  for (std::size_t i = 0; i < data.meta.size(); ++i) {
    if (data.meta[i].converged)
      ++report.converged;
    else
      not_converged.push_back(i);
    outer.push_back(data.meta[i].outer_iterations);
  }
  nlohmann::ordered_json manifest;
  manifest["config_hash"] = config_hash(config);
  manifest["master_seed"] = config.seed;
  manifest["count"] = count;
  manifest["jobs"] = jobs;
  manifest["wall_seconds"] = report.wall_seconds;
  manifest["solver"] = {
      {"converged", report.converged},
      {"not_converged_indices", not_converged},
      {"mean_outer_iterations",
       std::accumulate(outer.begin(), outer.end(), 0.0) / static_cast<double>(outer.size())},
      {"max_outer_iterations", *std::max_element(outer.begin(), outer.end())}};
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  log << "generated " << count << " samples (" << report.converged << " converged) in "
      << report.wall_seconds << " s -> " << (out_dir / "dataset.bin").string() << '\n';
  return report;
}

std::string solver_result_json(const SolverResult& result, const NetworkRealization& realization,
                               int coherence) {
  const std::vector<double> net = net_rates(result.rates, realization.pilots, coherence);
  nlohmann::ordered_json j;
  j["seed"] = realization.seed;
  j["aps"] = realization.aps();
  j["users"] = realization.users();
  j["pilot"] = realization.pilot;
  j["objective"] = result.objective;
  j["trace"] = result.trace;
  j["outer_iterations"] = result.outer_iterations;
  j["converged"] = result.converged;
  j["powers"] = result.powers;
  j["rates"] = result.rates;
  j["net_rates"] = net;
  j["sum_net_se"] = std::accumulate(net.begin(), net.end(), 0.0);
  j["jain"] = jain(net);
  std::vector<std::vector<double>> filters;
  for (std::size_t k = 0; k < result.filters.cols(); ++k) filters.push_back(result.filters.column(k));
  j["filters"] = filters;
  return j.dump(2) + "\n";
}

std::string cmd_solve(const RunConfig& config, std::uint64_t seed, const fs::path& out_dir,
                      std::ostream& log) {
  const NetworkRealization r = drop_network(config.network, seed);
  const SolverResult result = solve_alternating(r, config.solver);
  const std::string dump = solver_result_json(result, r, config.network.coherence);

  log << "seed " << seed << ": M=" << r.aps() << " K=" << r.users() << " tau=" << r.pilots
      << '\n';
  log << "objective trace:";
  for (double f : result.trace) log << ' ' << format_double(f);
  log << '\n';
  const auto net = net_rates(result.rates, r.pilots, config.network.coherence);
  log << "net rates (bits/s/Hz):";
  for (double v : net) log << ' ' << v;
  log << '\n';
  log << "sum net SE " << std::accumulate(net.begin(), net.end(), 0.0) << ", Jain " << jain(net)
      << ", outer iterations " << result.outer_iterations
      << (result.converged ? "" : " (max_outer reached)") << ", wall " << result.wall_seconds
      << " s\n";

  if (!out_dir.empty()) {
    prepare_out_dir(out_dir, config);
    write_text(out_dir / "solve.json", dump);
  }
  return dump;
}

void cmd_train(const RunConfig& config, const fs::path& data, const fs::path& out_dir,
               std::ostream& log) {
  const DatasetFile file = read_dataset(data);
  check_header(file, config);
  const Split s = config_split(file, config);
  const NormalizationStats stats = fit_normalization(file, s.train);
  const TrainingSet train_set = make_training_set(file, s.train, stats);
  const TrainingSet val_set = make_training_set(file, s.val, stats);

  prepare_out_dir(out_dir, config);
  const auto start = Clock::now();
  const TrainResult result = train(config.model, config.train, train_set, val_set);

  std::ostringstream csv;
  csv << "epoch,lr,train_rmse,val_rmse\n";
  for (const auto& e : result.curve)
    csv << e.epoch << ',' << format_double(e.learning_rate) << ',' << format_double(e.train_rmse)
        << ',' << format_double(e.val_rmse) << '\n';
  write_text(out_dir / "training_curve.csv", csv.str());
  const Checkpoint ckpt{config.model, result.params, stats};
  write_checkpoint(out_dir / "checkpoint.bin", ckpt);
  if (!(read_checkpoint(out_dir / "checkpoint.bin") == ckpt))
    throw std::runtime_error("checkpoint verification failed");

  const auto& last = result.curve.back();
  log << "trained " << result.curve.size() << " epochs in " << seconds_since(start)
      << " s; final train RMSE " << last.train_rmse << ", val RMSE " << last.val_rmse
      << "; best epoch " << result.best_epoch << " (val RMSE "
      << result.curve[static_cast<std::size_t>(result.best_epoch - 1)].val_rmse << ")\n";
}

Summary cmd_eval(const RunConfig& config, const fs::path& data, const fs::path& checkpoint,
                 const fs::path& out_dir, const EvalOptions& options, std::ostream& log) {
  const DatasetFile file = read_dataset(data);
  check_header(file, config);
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  check_model(ckpt, config);
  const Split s = config_split(file, config);
  if (s.test.empty()) throw std::invalid_argument("eval: test split is empty");
  const int coherence = config.network.coherence;

  std::vector<EvaluationRecord> records;
  std::size_t label_mismatch = 0;
  for (std::size_t i : s.test) {
    const Sample& sample = file.samples[i];
    const NetworkRealization r = drop_network(config.network, sample.seed);
    const SolverResult solved = solve_alternating(r, config.solver);
    if (solved.powers != sample.label) ++label_mismatch;
    records.push_back(
        make_record(Method::kSolver, solved.rates, r.pilots, coherence, solved.wall_seconds));

    const auto start = Clock::now();
    const Prediction pred = options.labels_as_predictions
                                ? refine_powers(sample.label, r, coherence)
                                : predict_and_refine(ckpt, r, coherence);
    const double elapsed = seconds_since(start);
    records.push_back(make_record(Method::kNetwork, pred.rates, r.pilots, coherence, elapsed));
  }
  if (label_mismatch > 0)
    log << "warning: " << label_mismatch
        << " test samples re-solved to powers different from their stored labels "
           "(solver options differ from generation?)\n";

  const Summary summary = summarize(records, options.histogram_bins);
  prepare_out_dir(out_dir, config);
  write_text(out_dir / "summary.json", summary_to_json(summary));
  write_text(out_dir / "cdf_sum_net_se.csv", cdf_csv(summary));
  write_text(out_dir / "histogram_sum_net_se.csv", histogram_csv(summary));

  log << "characteristic,network,solver,ratio\n";
  log << "sum_net_se," << summary.network.mean_sum_net_se << ',' << summary.solver.mean_sum_net_se
      << ',' << summary.sum_se_ratio << '\n';
  log << "jain," << summary.network.mean_jain << ',' << summary.solver.mean_jain << ','
      << summary.jain_ratio << '\n';
  log << "wall_seconds," << summary.network.mean_wall_seconds << ','
      << summary.solver.mean_wall_seconds << ',' << summary.time_ratio << '\n';
  return summary;
}

BenchReport cmd_bench(const RunConfig& config, const fs::path& data, const fs::path& checkpoint,
                      const fs::path& out_dir, std::ostream& log) {
  const DatasetFile file = read_dataset(data);
  check_header(file, config);
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  check_model(ckpt, config);
  const Split s = config_split(file, config);
  if (s.test.empty()) throw std::invalid_argument("bench: test split is empty");

  std::vector<double> solver_t;
  std::vector<double> network_t;
  for (std::size_t i : s.test) {
    const NetworkRealization r = drop_network(config.network, file.samples[i].seed);
    auto start = Clock::now();
    const SolverResult solved = solve_alternating(r, config.solver);
    solver_t.push_back(seconds_since(start));
    start = Clock::now();
    const Prediction pred = predict_and_refine(ckpt, r, config.network.coherence);
    network_t.push_back(seconds_since(start));
    if (solved.powers.size() != pred.powers.size()) throw std::logic_error("bench: shape drift");
  }

  BenchReport b;
  b.instances = solver_t.size();
  const auto n = static_cast<double>(b.instances);
  b.solver_mean = std::accumulate(solver_t.begin(), solver_t.end(), 0.0) / n;
  b.network_mean = std::accumulate(network_t.begin(), network_t.end(), 0.0) / n;
  b.solver_median = median(solver_t);
  b.network_median = median(network_t);
  b.mean_ratio = b.network_mean / b.solver_mean;
  b.median_ratio = b.network_median / b.solver_median;

  char line[256];
  std::snprintf(line, sizeof line,
                "instances %zu\nsolver   mean %.6f s  median %.6f s\n"
                "network  mean %.6f s  median %.6f s\nratio network/solver: mean %.4f%%  "
                "median %.4f%% (speedup %.1fx)\n",
                b.instances, b.solver_mean, b.solver_median, b.network_mean, b.network_median,
                100.0 * b.mean_ratio, 100.0 * b.median_ratio, 1.0 / b.mean_ratio);
  log << line;

  if (!out_dir.empty()) {
    prepare_out_dir(out_dir, config);
    nlohmann::ordered_json j{{"instances", b.instances},
                             {"solver_mean_seconds", b.solver_mean},
                             {"solver_median_seconds", b.solver_median},
                             {"network_mean_seconds", b.network_mean},
                             {"network_median_seconds", b.network_median},
                             {"mean_ratio", b.mean_ratio},
                             {"median_ratio", b.median_ratio}};
    write_text(out_dir / "bench.json", j.dump(2) + "\n");
  }
  return b;
}

}  // namespace cfpf
