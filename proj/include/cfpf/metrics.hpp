#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cfpf {

enum class Method { kSolver, kNetwork };

const char* method_name(Method m);

struct EvaluationRecord {
  Method method = Method::kSolver;
  double sum_net_se = 0.0;
  double jain = 0.0;
  std::vector<double> net_rates;
  double wall_seconds = 0.0;
};

// Net spectral efficiency after pilot overhead: ((1 - tau/tau_c) / 2) * R.
double net_se(double rate, int pilots, int coherence);
std::vector<double> net_rates(std::span<const double> rates, int pilots, int coherence);

// Jain's fairness index. Throws std::invalid_argument for empty or all-zero input.
double jain(std::span<const double> rates);

EvaluationRecord make_record(Method method, std::span<const double> gross_rates, int pilots,
                             int coherence, double wall_seconds);

struct CdfPoint {
  double value;
  double quantile;
};

// Empirical CDF as sorted (value, i/n) pairs, i = 1..n.
std::vector<CdfPoint> empirical_cdf(std::vector<double> values);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<int> solver_counts;
  std::vector<int> network_counts;
};

struct MethodStats {
  double mean_sum_net_se = 0.0;
  double mean_jain = 0.0;
  double mean_wall_seconds = 0.0;
  double median_wall_seconds = 0.0;
  std::size_t count = 0;
};

struct Summary {
  MethodStats solver;
  MethodStats network;
  // network / solver
  double sum_se_ratio = 0.0;
  double jain_ratio = 0.0;
  double time_ratio = 0.0;
  std::vector<CdfPoint> solver_cdf;
  std::vector<CdfPoint> network_cdf;
  Histogram histogram;
};

// Throws std::invalid_argument when records are empty or a method is absent.
Summary summarize(std::span<const EvaluationRecord> records, int histogram_bins = 30);

std::string summary_to_json(const Summary& s);
std::string cdf_csv(const Summary& s);
std::string histogram_csv(const Summary& s);

// 17 significant digits, round-trip exact for doubles.
std::string format_double(double v);

}  // namespace cfpf
