#include <gtest/gtest.h>

#include <random>

#include "cfpf/metrics.hpp"

namespace cfpf {
namespace {

EvaluationRecord rec(Method m, double se, double jain_index, double t) {
  EvaluationRecord r;
  r.method = m;
  r.sum_net_se = se;
  r.jain = jain_index;
  r.wall_seconds = t;
  return r;
}

TEST(NetSe, Examples) {
  EXPECT_DOUBLE_EQ(net_se(1.0, 10, 200), 0.475);
  EXPECT_EQ(net_se(0.0, 10, 200), 0.0);
  EXPECT_LT(net_se(1.0, 199, 200), 0.003);
  EXPECT_DOUBLE_EQ(net_se(3.0, 4, 200), 3.0 * net_se(1.0, 4, 200));
}

TEST(NetSe, RejectsBadOverhead) {
  EXPECT_THROW(net_se(1.0, 0, 200), std::invalid_argument);
  EXPECT_THROW(net_se(1.0, 200, 200), std::invalid_argument);
}

TEST(Jain, Examples) {
  const std::vector<double> equal(5, 2.5);
  EXPECT_DOUBLE_EQ(jain(equal), 1.0);
  const std::vector<double> one_hot = {0.0, 0.0, 3.0, 0.0};
  EXPECT_DOUBLE_EQ(jain(one_hot), 0.25);
  const std::vector<double> pair = {1.0, 3.0};
  EXPECT_DOUBLE_EQ(jain(pair), 0.8);
}

TEST(Jain, RejectsDegenerateInput) {
  EXPECT_THROW(jain(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(jain(std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST(Jain, ScaleInvariantAndBounded) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> r(1 + trial % 20);
    for (double& v : r) v = u(rng);
    const double j = jain(r);
    auto scaled = r;
    for (double& v : scaled) v *= 7.3;
    EXPECT_NEAR(jain(scaled), j, 1e-12);
    EXPECT_GE(j, 1.0 / static_cast<double>(r.size()) - 1e-15);
    EXPECT_LE(j, 1.0 + 1e-15);
  }
}

TEST(MakeRecord, UsesNetRates) {
  const std::vector<double> gross = {1.0, 2.0};
  const auto r = make_record(Method::kNetwork, gross, 10, 200, 0.5);
  EXPECT_EQ(r.method, Method::kNetwork);
  EXPECT_DOUBLE_EQ(r.net_rates[0], 0.475);
  EXPECT_DOUBLE_EQ(r.net_rates[1], 0.95);
  EXPECT_DOUBLE_EQ(r.sum_net_se, 1.425);
  EXPECT_DOUBLE_EQ(r.jain, jain(gross));
  EXPECT_EQ(r.wall_seconds, 0.5);
}

TEST(EmpiricalCdf, SortedWithUnitEnd) {
  const auto cdf = empirical_cdf({3.0, 1.0, 2.0, 2.0});
  ASSERT_EQ(cdf.size(), 4u);
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    EXPECT_GE(cdf[i].value, cdf[i - 1].value);
    EXPECT_GT(cdf[i].quantile, cdf[i - 1].quantile);
  }
  EXPECT_EQ(cdf.front().quantile, 0.25);
  EXPECT_EQ(cdf.back().quantile, 1.0);
}

TEST(EmpiricalCdf, SingleValue) {
  const auto cdf = empirical_cdf({4.2});
  ASSERT_EQ(cdf.size(), 1u);
  EXPECT_EQ(cdf[0].value, 4.2);
  EXPECT_EQ(cdf[0].quantile, 1.0);
}

TEST(EmpiricalCdf, LastQuantileExactForAwkwardSizes) {
  for (int n : {3, 7, 49, 999}) {
    std::vector<double> v(static_cast<std::size_t>(n), 1.0);
    EXPECT_EQ(empirical_cdf(v).back().quantile, 1.0) << n;
  }
}

TEST(Summarize, IdenticalSetsGiveUnitRatios) {
  std::vector<EvaluationRecord> records;
  for (int i = 0; i < 6; ++i) {
    records.push_back(rec(Method::kSolver, 4.0 + i, 0.9, 0.01 * (i + 1)));
    records.push_back(rec(Method::kNetwork, 4.0 + i, 0.9, 0.01 * (i + 1)));
  }
  const Summary s = summarize(records);
  EXPECT_DOUBLE_EQ(s.sum_se_ratio, 1.0);
  EXPECT_DOUBLE_EQ(s.jain_ratio, 1.0);
  EXPECT_DOUBLE_EQ(s.time_ratio, 1.0);
  EXPECT_EQ(s.histogram.solver_counts, s.histogram.network_counts);
  EXPECT_EQ(s.histogram.edges.size(), 31u);
}

TEST(Summarize, RatioOfMeans) {
  const std::vector<EvaluationRecord> records = {rec(Method::kSolver, 19.2592, 0.96954, 14.14),
                                                 rec(Method::kNetwork, 19.1422, 0.955, 0.12)};
  const Summary s = summarize(records);
  EXPECT_NEAR(s.sum_se_ratio, 0.9939, 5e-5);
}

TEST(Summarize, MedianAndCounts) {
  const std::vector<EvaluationRecord> records = {
      rec(Method::kSolver, 1.0, 0.5, 1.0), rec(Method::kSolver, 2.0, 0.5, 3.0),
      rec(Method::kSolver, 3.0, 0.5, 100.0), rec(Method::kSolver, 4.0, 0.5, 2.0),
      rec(Method::kNetwork, 2.0, 0.5, 0.1)};
  const Summary s = summarize(records, 4);
  EXPECT_EQ(s.solver.count, 4u);
  EXPECT_EQ(s.network.count, 1u);
  EXPECT_DOUBLE_EQ(s.solver.median_wall_seconds, 2.5);
  EXPECT_DOUBLE_EQ(s.solver.mean_sum_net_se, 2.5);
  // Pooled range [1, 4] in 4 bins; the maximum lands in the last bin.
  EXPECT_EQ(s.histogram.edges.front(), 1.0);
  EXPECT_EQ(s.histogram.edges.back(), 4.0);
  EXPECT_EQ(s.histogram.solver_counts, (std::vector<int>{1, 1, 1, 1}));
  EXPECT_EQ(s.histogram.network_counts, (std::vector<int>{0, 1, 0, 0}));
}

TEST(Summarize, SingleRecordPerMethodCdf) {
  const std::vector<EvaluationRecord> records = {rec(Method::kSolver, 3.0, 1.0, 1.0),
                                                 rec(Method::kNetwork, 3.0, 1.0, 1.0)};
  const Summary s = summarize(records);
  ASSERT_EQ(s.solver_cdf.size(), 1u);
  EXPECT_EQ(s.solver_cdf[0].quantile, 1.0);
  int total = 0;
  for (int c : s.histogram.solver_counts) total += c;
  EXPECT_EQ(total, 1);
}

TEST(Summarize, Errors) {
  EXPECT_THROW(summarize(std::vector<EvaluationRecord>{}), std::invalid_argument);
  const std::vector<EvaluationRecord> only_solver = {rec(Method::kSolver, 1.0, 1.0, 1.0)};
  EXPECT_THROW(summarize(only_solver), std::invalid_argument);
}

TEST(SummaryOutputs, CsvHeadersAndJsonKeys) {
  const std::vector<EvaluationRecord> records = {rec(Method::kSolver, 3.0, 1.0, 1.0),
                                                 rec(Method::kNetwork, 2.0, 0.8, 0.5)};
  const Summary s = summarize(records, 3);
  const std::string cdf = cdf_csv(s);
  EXPECT_EQ(cdf.rfind("method,sum_net_se,quantile\n", 0), 0u);
  EXPECT_NE(cdf.find("network,2,1\n"), std::string::npos);
  const std::string hist = histogram_csv(s);
  EXPECT_EQ(hist.rfind("bin_lo,bin_hi,solver_count,network_count\n", 0), 0u);
  const std::string js = summary_to_json(s);
  for (const char* key : {"\"solver\"", "\"network\"", "\"ratios\"", "\"wall_time\""})
    EXPECT_NE(js.find(key), std::string::npos) << key;
}

TEST(FormatDouble, RoundTrips) {
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(v)), v);
}

}  // namespace
}  // namespace cfpf
