#include "cfpf/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cfpf {

const char* method_name(Method m) { return m == Method::kSolver ? "solver" : "network"; }

double net_se(double rate, int pilots, int coherence) {
  if (!(pilots > 0 && pilots < coherence))
    throw std::invalid_argument("net_se: need 0 < pilots < coherence");
  const double overhead = 1.0 - static_cast<double>(pilots) / static_cast<double>(coherence);
  return overhead / 2.0 * rate;
}

std::vector<double> net_rates(std::span<const double> rates, int pilots, int coherence) {
  std::vector<double> out(rates.size());
  for (std::size_t k = 0; k < rates.size(); ++k) out[k] = net_se(rates[k], pilots, coherence);
  return out;
}

double jain(std::span<const double> rates) {
  if (rates.empty()) throw std::invalid_argument("jain: empty rate vector");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double r : rates) {
    sum += r;
    sum_sq += r * r;
  }
  if (!(sum_sq > 0.0)) throw std::invalid_argument("jain: all rates are zero");
  return sum * sum / (static_cast<double>(rates.size()) * sum_sq);
}

EvaluationRecord make_record(Method method, std::span<const double> gross_rates, int pilots,
                             int coherence, double wall_seconds) {
  EvaluationRecord rec;
  rec.method = method;
  rec.net_rates = net_rates(gross_rates, pilots, coherence);
  rec.sum_net_se = std::accumulate(rec.net_rates.begin(), rec.net_rates.end(), 0.0);
  rec.jain = jain(rec.net_rates);
  rec.wall_seconds = wall_seconds;
  return rec;
}

std::vector<CdfPoint> empirical_cdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<CdfPoint> cdf(values.size());
  const auto n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    cdf[i] = {values[i], static_cast<double>(i + 1) / n};
  if (!cdf.empty()) cdf.back().quantile = 1.0;
  return cdf;
}

namespace {

MethodStats stats_for(std::span<const EvaluationRecord> records, Method m,
                      std::vector<double>& sum_se) {
  MethodStats s;
  std::vector<double> times;
  for (const auto& r : records) {
    if (r.method != m) continue;
    s.mean_sum_net_se += r.sum_net_se;
    s.mean_jain += r.jain;
    s.mean_wall_seconds += r.wall_seconds;
    sum_se.push_back(r.sum_net_se);
    times.push_back(r.wall_seconds);
  }
  s.count = times.size();
  if (s.count == 0)
    throw std::invalid_argument(std::string("summarize: no records for method ") + method_name(m));
  const auto n = static_cast<double>(s.count);
  s.mean_sum_net_se /= n;
  s.mean_jain /= n;
  s.mean_wall_seconds /= n;
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  s.median_wall_seconds =
      times.size() % 2 == 1 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
  return s;
}

std::vector<int> bin_counts(const std::vector<double>& values, const std::vector<double>& edges) {
  const std::size_t bins = edges.size() - 1;
  std::vector<int> counts(bins, 0);
  const double lo = edges.front();
  const double hi = edges.back();
  for (double v : values) {
    std::size_t b = 0;
    if (hi > lo) {
      b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
      b = std::min(b, bins - 1);
    }
    ++counts[b];
  }
  return counts;
}

}  // namespace

Summary summarize(std::span<const EvaluationRecord> records, int histogram_bins) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  if (histogram_bins < 1) throw std::invalid_argument("summarize: bins must be >= 1");
  Summary s;
  std::vector<double> solver_se;
  std::vector<double> network_se;
  s.solver = stats_for(records, Method::kSolver, solver_se);
  s.network = stats_for(records, Method::kNetwork, network_se);
  s.sum_se_ratio = s.network.mean_sum_net_se / s.solver.mean_sum_net_se;
  s.jain_ratio = s.network.mean_jain / s.solver.mean_jain;
  s.time_ratio = s.network.mean_wall_seconds / s.solver.mean_wall_seconds;
  s.solver_cdf = empirical_cdf(solver_se);
  s.network_cdf = empirical_cdf(network_se);

  // Shared equal-width bins over the pooled range.
  const auto [lo_it, hi_it] = std::minmax_element(solver_se.begin(), solver_se.end());
  const auto [nlo_it, nhi_it] = std::minmax_element(network_se.begin(), network_se.end());
  const double lo = std::min(*lo_it, *nlo_it);
  const double hi = std::max(*hi_it, *nhi_it);
  const auto bins = static_cast<std::size_t>(histogram_bins);
  s.histogram.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b)
    s.histogram.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
  s.histogram.edges.back() = hi;
  s.histogram.solver_counts = bin_counts(solver_se, s.histogram.edges);
  s.histogram.network_counts = bin_counts(network_se, s.histogram.edges);
  return s;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string summary_to_json(const Summary& s) {
  auto method = [](const MethodStats& m) {
    return nlohmann::ordered_json{{"mean_sum_net_se", m.mean_sum_net_se},
                                  {"mean_jain", m.mean_jain},
                                  {"mean_wall_seconds", m.mean_wall_seconds},
                                  {"median_wall_seconds", m.median_wall_seconds},
                                  {"count", m.count}};
  };
  nlohmann::ordered_json j{{"solver", method(s.solver)},
                           {"network", method(s.network)},
                           {"ratios",
                            {{"sum_net_se", s.sum_se_ratio},
                             {"jain", s.jain_ratio},
                             {"wall_time", s.time_ratio}}}};
  return j.dump(2) + "\n";
}

std::string cdf_csv(const Summary& s) {
  std::ostringstream out;
  out << "method,sum_net_se,quantile\n";
  for (const auto& p : s.solver_cdf)
    out << "solver," << format_double(p.value) << ',' << format_double(p.quantile) << '\n';
  for (const auto& p : s.network_cdf)
    out << "network," << format_double(p.value) << ',' << format_double(p.quantile) << '\n';
  return out.str();
}

std::string histogram_csv(const Summary& s) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,solver_count,network_count\n";
  const auto& h = s.histogram;
  for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
    out << format_double(h.edges[b]) << ',' << format_double(h.edges[b + 1]) << ','
        << h.solver_counts[b] << ',' << h.network_counts[b] << '\n';
  }
  return out.str();
}

}  // namespace cfpf
