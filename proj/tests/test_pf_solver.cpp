#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "cfpf/channel_model.hpp"
#include "cfpf/pf_solver.hpp"

namespace cfpf {
namespace {

NetworkConfig desk() { return NetworkConfig{}; }

// Hand-built realization from explicit fading and pilots.
NetworkRealization make_realization(Matrix beta, std::vector<int> pilot, int tau, double rho) {
  NetworkRealization r;
  r.pilots = tau;
  r.rho = rho;
  r.rho_p = rho;
  r.beta = std::move(beta);
  r.pilot = std::move(pilot);
  r.xi = estimation_quality_all(r.beta, r.pilot, r.rho_p, tau);
  return r;
}

// SINR of user k under filter t, evaluated straight from the per-AP sums
// (independent of the QuadraticForms / coefficient path).
double direct_sinr(const NetworkRealization& r, int k, std::span<const double> p,
                   std::span<const double> t) {
  const auto uk = static_cast<std::size_t>(k);
  const std::size_t m_count = r.beta.rows();
  const std::size_t k_count = r.beta.cols();
  double signal = 0.0;
  for (std::size_t m = 0; m < m_count; ++m) signal += t[m] * r.xi(m, uk);
  signal = r.rho * p[uk] * signal * signal;
  double den = 0.0;
  for (std::size_t i = 0; i < k_count; ++i) {
    double s = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) s += t[m] * t[m] * r.xi(m, uk) * r.beta(m, i);
    den += r.rho * p[i] * s;
    if (i != uk && r.pilot[i] == r.pilot[uk]) {
      double z = 0.0;
      for (std::size_t m = 0; m < m_count; ++m) z += t[m] * r.xi(m, uk) * r.beta(m, i) / r.beta(m, uk);
      den += r.rho * p[i] * z * z;
    }
  }
  for (std::size_t m = 0; m < m_count; ++m) den += t[m] * t[m] * r.xi(m, uk);
  return signal / den;
}

std::vector<double> random_unit(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  double s = 0.0;
  for (double& x : v) {
    x = g(rng);
    s += x * x;
  }
  for (double& x : v) x /= std::sqrt(s);
  return v;
}

SinrCoefficients single_user(double alpha, double chi, double delta) {
  SinrCoefficients c;
  c.alpha = {alpha};
  c.chi = Matrix(1, 1, chi);
  c.eta = Matrix(1, 1, 0.0);
  c.delta = {delta};
  return c;
}

TEST(QuadraticForms, SingleUserHasNoZeta) {
  const auto r = make_realization(Matrix(3, 1, 1e-9), {1}, 1, 1e11);
  const auto f = build_quadratic_forms(r);
  EXPECT_TRUE(f.zeta_of(0, 0).empty());
}

TEST(QuadraticForms, OrthogonalPilotsGiveNoZeta) {
  const auto r = make_realization(Matrix(3, 2, 1e-9), {1, 2}, 2, 1e11);
  const auto f = build_quadratic_forms(r);
  EXPECT_TRUE(f.zeta_of(0, 1).empty());
  EXPECT_TRUE(f.zeta_of(1, 0).empty());
}

TEST(QuadraticForms, SharedPilotEqualFadingGivesXi) {
  Matrix beta(3, 2);
  const double vals[3] = {1e-9, 3e-10, 5e-11};
  for (std::size_t m = 0; m < 3; ++m) beta(m, 0) = beta(m, 1) = vals[m];
  const auto r = make_realization(beta, {1, 1}, 1, 1e11);
  const auto f = build_quadratic_forms(r);
  const auto z = f.zeta_of(0, 1);
  ASSERT_EQ(z.size(), 3u);
  for (std::size_t m = 0; m < 3; ++m) EXPECT_DOUBLE_EQ(z[m], r.xi(m, 0));
}

TEST(QuadraticForms, RejectsZeroFading) {
  auto r = make_realization(Matrix(2, 1, 1e-9), {1}, 1, 1e11);
  r.beta(1, 0) = 0.0;
  EXPECT_THROW(build_quadratic_forms(r), std::invalid_argument);
}

TEST(OptimalFilter, ScalarCaseIsOne) {
  const auto r = make_realization(Matrix(1, 2, 1e-9), {1, 1}, 1, 1e11);
  const auto f = build_quadratic_forms(r);
  const std::vector<double> p = {0.3, 0.9};
  EXPECT_DOUBLE_EQ(optimal_filter(0, p, f, r.rho)[0], 1.0);
}

TEST(OptimalFilter, DiagonalCaseClosedForm) {
  // All-orthogonal pilots: D_k is diagonal, so t_k is proportional to
  // xi_k ./ diag(D_k).
  NetworkConfig wide = desk();
  wide.pilots = 8;
  const NetworkRealization dropped = drop_network(desk(), 3);
  std::vector<int> pilot(8);
  std::iota(pilot.begin(), pilot.end(), 1);
  const NetworkRealization r = realization_from_fading(wide, dropped.beta, pilot, 3);
  const auto f = build_quadratic_forms(r);
  const std::vector<double> p = {1.0, 0.5, 0.2, 0.9, 0.4, 0.7, 1.0, 0.1};
  for (int k = 0; k < 8; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    std::vector<double> expect(20);
    double norm = 0.0;
    for (std::size_t m = 0; m < 20; ++m) {
      double d = r.xi(m, uk);
      for (std::size_t i = 0; i < 8; ++i) d += r.rho * p[i] * r.xi(m, uk) * r.beta(m, i);
      expect[m] = r.xi(m, uk) / d;
      norm += expect[m] * expect[m];
    }
    const auto t = optimal_filter(k, p, f, r.rho);
    for (std::size_t m = 0; m < 20; ++m) EXPECT_NEAR(t[m], expect[m] / std::sqrt(norm), 1e-12);
  }
}

TEST(OptimalFilter, BeatsRandomUnitVectors) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int inst = 0; inst < 5; ++inst) {
    const NetworkRealization r = drop_network(desk(), mix_seed(5, static_cast<std::uint64_t>(inst)));
    const auto f = build_quadratic_forms(r);
    std::vector<double> p(8);
    for (double& v : p) v = u(rng);
    for (int k = 0; k < 8; ++k) {
      const auto t = optimal_filter(k, p, f, r.rho);
      const double best = direct_sinr(r, k, p, t);
      for (int trial = 0; trial < 2000; ++trial) {
        const auto v = random_unit(20, rng);
        ASSERT_GE(best, direct_sinr(r, k, p, v) * (1.0 - 1e-12) - 1e-9);
      }
    }
  }
}

TEST(OptimalFilter, UnitNormAndAchievedSinr) {
  const NetworkRealization r = drop_network(desk(), 8);
  const auto f = build_quadratic_forms(r);
  const std::vector<double> p(8, 0.6);
  const Matrix t = optimal_filters(p, f, r.rho);
  const auto c = sinr_coefficients(t, f, r.rho);
  for (int k = 0; k < 8; ++k) {
    const auto col = t.column(static_cast<std::size_t>(k));
    double n = 0.0;
    for (double v : col) n += v * v;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-12);
    EXPECT_NEAR(sinr(p, c, k) / direct_sinr(r, k, p, col), 1.0, 1e-12);
  }
}

TEST(SinrCoefficients, SingleUserHandValues) {
  // M = K = 1, rho = 1, beta = 1, xi = 0.5, t = 1.
  NetworkRealization r;
  r.pilots = 1;
  r.rho = 1.0;
  r.beta = Matrix(1, 1, 1.0);
  r.xi = Matrix(1, 1, 0.5);
  r.pilot = {1};
  const auto f = build_quadratic_forms(r);
  const auto c = sinr_coefficients(Matrix(1, 1, 1.0), f, 1.0);
  EXPECT_DOUBLE_EQ(c.alpha[0], 0.25);
  EXPECT_DOUBLE_EQ(c.chi(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(c.delta[0], 0.5);
  EXPECT_DOUBLE_EQ(c.eta(0, 0), 0.0);

  const std::vector<double> p = {1.0};
  EXPECT_DOUBLE_EQ(sinr(p, c, 0), 0.25);
  EXPECT_DOUBLE_EQ(rate(p, c, 0), std::log2(1.25));
}

TEST(SinrCoefficients, OrthogonalPilotsHaveNoEta) {
  NetworkConfig c = desk();
  c.pilots = 8;
  c.pilot_assignment = PilotAssignment::kOrthogonalFirst;
  const auto r = drop_network(c, 4);
  const auto f = build_quadratic_forms(r);
  const auto coeffs = sinr_coefficients(optimal_filters(std::vector<double>(8, 1.0), f, r.rho), f, r.rho);
  for (double v : coeffs.eta.data()) EXPECT_EQ(v, 0.0);
}

TEST(SinrCoefficients, FilterSignDoesNotMatter) {
  const auto r = drop_network(desk(), 12);
  const auto f = build_quadratic_forms(r);
  const std::vector<double> p(8, 1.0);
  Matrix t = optimal_filters(p, f, r.rho);
  const auto a = sinr_coefficients(t, f, r.rho);
  for (double& v : t.data()) v = -v;
  const auto b = sinr_coefficients(t, f, r.rho);
  EXPECT_EQ(a.alpha, b.alpha);
  EXPECT_EQ(a.chi, b.chi);
  EXPECT_EQ(a.eta, b.eta);
  EXPECT_EQ(a.delta, b.delta);
}

TEST(Sinr, VanishesAtTinyPower) {
  const auto c = single_user(0.25, 0.5, 0.5);
  const std::vector<double> p = {1e-300};
  EXPECT_LT(sinr(p, c, 0), 1e-299);
  EXPECT_LT(rate(p, c, 0), 1e-299);
}

TEST(Sinr, HomogeneousOfDegreeZero) {
  const auto r = drop_network(desk(), 13);
  const auto f = build_quadratic_forms(r);
  const std::vector<double> p = {1.0, 0.4, 0.3, 0.8, 0.5, 0.9, 0.2, 0.7};
  auto c = sinr_coefficients(optimal_filters(p, f, r.rho), f, r.rho);
  std::vector<double> before;
  for (int k = 0; k < 8; ++k) before.push_back(sinr(p, c, k));
  for (double& v : c.alpha) v *= 2.0;
  for (double& v : c.delta) v *= 2.0;
  for (double& v : c.chi.data()) v *= 2.0;
  for (double& v : c.eta.data()) v *= 2.0;
  for (int k = 0; k < 8; ++k) EXPECT_DOUBLE_EQ(sinr(p, c, k), before[static_cast<std::size_t>(k)]);
}

TEST(PfObjective, Examples) {
  const std::vector<double> one = {1.0};
  EXPECT_DOUBLE_EQ(pf_objective(one, single_user(3.0, 0.0, 1.0)), 1.0);  // R = 2
  EXPECT_DOUBLE_EQ(pf_objective(one, single_user(1.0, 0.0, 1.0)), 0.0);  // R = 1

  SinrCoefficients two;
  two.alpha = {3.0, 15.0};
  two.chi = Matrix(2, 2, 0.0);
  two.eta = Matrix(2, 2, 0.0);
  two.delta = {1.0, 1.0};
  const std::vector<double> p = {1.0, 1.0};
  EXPECT_DOUBLE_EQ(pf_objective(p, two), 3.0);
}

TEST(PfObjective, ZeroPowerIsInfeasible) {
  const std::vector<double> zero = {0.0};
  EXPECT_THROW(pf_objective(zero, single_user(1.0, 0.5, 0.5)), std::domain_error);
  EXPECT_THROW(pf_gradient(zero, single_user(1.0, 0.5, 0.5)), std::domain_error);
}

TEST(PfGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int trial = 0; trial < 40; ++trial) {
    const auto r = drop_network(desk(), mix_seed(77, static_cast<std::uint64_t>(trial)));
    const auto f = build_quadratic_forms(r);
    std::vector<double> p(8);
    for (double& v : p) v = u(rng);
    const auto c = sinr_coefficients(optimal_filters(p, f, r.rho), f, r.rho);
    const auto g = pf_gradient(p, c);
    for (std::size_t j = 0; j < p.size(); ++j) {
      auto hi = p;
      auto lo = p;
      hi[j] += 1e-6;
      lo[j] -= 1e-6;
      const double fd = (pf_objective(hi, c) - pf_objective(lo, c)) / 2e-6;
      EXPECT_LT(std::abs(fd - g[j]) / std::max(std::abs(g[j]), 1e-8), 1e-5)
          << "trial " << trial << " j " << j;
    }
  }
}

TEST(PfGradient, SingleUserWithoutSelfInterferenceIsIncreasing) {
  const auto c = single_user(2.0, 0.0, 0.7);
  for (double p : {1e-6, 0.01, 0.3, 1.0}) {
    const std::vector<double> v = {p};
    EXPECT_GT(pf_gradient(v, c)[0], 0.0);
  }
}

TEST(PfGradient, SymmetricInstanceHasEqualComponents) {
  SinrCoefficients c;
  c.alpha = {2.0, 2.0};
  c.chi = Matrix(2, 2, 0.1);
  c.eta = Matrix(2, 2, 0.0);
  c.eta(0, 1) = c.eta(1, 0) = 0.3;
  c.delta = {0.5, 0.5};
  const std::vector<double> p = {0.4, 0.4};
  const auto g = pf_gradient(p, c);
  EXPECT_DOUBLE_EQ(g[0], g[1]);
}

TEST(ProjectBox, ClampsAndIsIdempotent) {
  const std::vector<double> raw = {-0.2, 0.5, 1.4};
  const auto p = project_box(raw, 1e-6);
  EXPECT_EQ(p, (std::vector<double>{1e-6, 0.5, 1.0}));
  EXPECT_EQ(project_box(p, 1e-6), p);
}

TEST(SolvePowers, SingleUserGoesToFullPower) {
  const auto c = single_user(0.25, 0.5, 0.5);
  // Grid oracle: the objective is maximized at the top of the grid.
  double best_p = 0.0;
  double best_f = -1e300;
  for (int i = 1; i <= 1000; ++i) {
    const std::vector<double> p = {i * 1e-3};
    const double f = pf_objective(p, c);
    if (f > best_f) {
      best_f = f;
      best_p = p[0];
    }
  }
  ASSERT_DOUBLE_EQ(best_p, 1.0);
  const std::vector<double> p0 = {0.1};
  EXPECT_DOUBLE_EQ(solve_powers(p0, c, SolverOptions{})[0], 1.0);
}

TEST(SolvePowers, SymmetryPreserved) {
  SinrCoefficients c;
  c.alpha = {2.0, 2.0};
  c.chi = Matrix(2, 2, 0.4);
  c.eta = Matrix(2, 2, 0.0);
  c.eta(0, 1) = c.eta(1, 0) = 1.5;
  c.delta = {0.2, 0.2};
  const std::vector<double> p0 = {0.3, 0.3};
  const auto p = solve_powers(p0, c, SolverOptions{});
  EXPECT_DOUBLE_EQ(p[0], p[1]);
}

TEST(SolvePowers, NeverDecreasesObjective) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(1e-3, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto r = drop_network(desk(), mix_seed(9, static_cast<std::uint64_t>(trial)));
    const auto f = build_quadratic_forms(r);
    std::vector<double> p0(8);
    for (double& v : p0) v = u(rng);
    const auto c = sinr_coefficients(optimal_filters(p0, f, r.rho), f, r.rho);
    const auto p = solve_powers(p0, c, SolverOptions{});
    EXPECT_GE(pf_objective(p, c), pf_objective(p0, c));
    for (double v : p) EXPECT_TRUE(v >= 1e-6 && v <= 1.0);
  }
}

TEST(SolveAlternating, ScalarInstance) {
  // K = M = 1: p* = 1, t* = 1, f = log2(log2(1 + SINR(1))) with
  // SINR(1) = rho xi^2 / (rho xi beta + xi).
  const double beta = 3e-11;
  const double rho = 3.1698e11;
  const auto r = make_realization(Matrix(1, 1, beta), {1}, 1, rho);
  const double xi = r.xi(0, 0);
  const double s = rho * xi * xi / (rho * xi * beta + xi);
  const SolverResult res = solve_alternating(r, SolverOptions{});
  EXPECT_DOUBLE_EQ(res.powers[0], 1.0);
  EXPECT_DOUBLE_EQ(res.filters(0, 0), 1.0);
  EXPECT_NEAR(res.objective, std::log2(std::log2(1.0 + s)), 1e-12);
}

TEST(SolveAlternating, MonotoneTraceAndFeasibleOutput) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto r = drop_network(desk(), mix_seed(123, s));
    const SolverResult res = solve_alternating(r, SolverOptions{});
    ASSERT_EQ(res.trace.size(), static_cast<std::size_t>(res.outer_iterations) + 1);
    ASSERT_EQ(res.filter_trace.size(), static_cast<std::size_t>(res.outer_iterations));
    for (std::size_t j = 1; j < res.trace.size(); ++j) {
      // filter step then power step, each non-decreasing
      EXPECT_GE(res.filter_trace[j - 1], res.trace[j - 1] - 1e-9);
      EXPECT_GE(res.trace[j], res.filter_trace[j - 1] - 1e-9);
    }
    EXPECT_GE(res.objective, res.trace.back() - 1e-9);
    EXPECT_LE(res.outer_iterations, 100);
    for (double p : res.powers) EXPECT_TRUE(p >= 1e-6 && p <= 1.0);
    for (std::size_t k = 0; k < res.filters.cols(); ++k) {
      double n = 0.0;
      for (double v : res.filters.column(k)) n += v * v;
      EXPECT_NEAR(std::sqrt(n), 1.0, 1e-12);
    }
  }
}

TEST(SolveAlternating, Deterministic) {
  const auto r = drop_network(desk(), 55);
  const SolverResult a = solve_alternating(r, SolverOptions{});
  const SolverResult b = solve_alternating(r, SolverOptions{});
  EXPECT_EQ(a.powers, b.powers);
  EXPECT_EQ(a.filters, b.filters);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.rates, b.rates);
}

TEST(SolveAlternating, MaxOuterExhaustionIsReported) {
  const auto r = drop_network(desk(), 3);
  SolverOptions o;
  o.max_outer = 1;
  o.epsilon = 1e-12;
  const SolverResult res = solve_alternating(r, o);
  EXPECT_EQ(res.outer_iterations, 1);
  EXPECT_FALSE(res.converged);
}

TEST(SolverOptions, Validation) {
  SolverOptions o;
  o.armijo_shrink = 1.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o = SolverOptions{};
  o.p_min = 0.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace cfpf
