#include "cfpf/pf_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cfpf {
namespace {

constexpr double kMinStep = 1e-12;

// Solves A x = b in place for symmetric positive definite A (lower Cholesky).
// A is Jacobi-scaled first so the factorization sees a unit diagonal; the
// entries of D_k span many orders of magnitude.
std::vector<double> spd_solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  std::vector<double> scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(a(i, i) > 0.0)) throw std::runtime_error("spd_solve: nonpositive diagonal");
    scale[i] = 1.0 / std::sqrt(a(i, i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) *= scale[i] * scale[j];
    b[i] *= scale[i];
  }
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t p = 0; p < j; ++p) d -= a(j, p) * a(j, p);
    if (!(d > 0.0) || !std::isfinite(d))
      throw std::runtime_error("spd_solve: matrix is not positive definite");
    const double l = std::sqrt(d);
    a(j, j) = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= a(i, p) * a(j, p);
      a(i, j) = s / l;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t p = 0; p < i; ++p) s -= a(i, p) * b[p];
    b[i] = s / a(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t p = i + 1; p < n; ++p) s -= a(p, i) * b[p];
    b[i] = s / a(i, i);
  }
  for (std::size_t i = 0; i < n; ++i) b[i] *= scale[i];
  return b;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double relative_gain(double f_new, double f_old) {
  return (f_new - f_old) / std::max(std::abs(f_old), 1e-300);
}

}  // namespace

void SolverOptions::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("solver: epsilon must be > 0");
  if (max_outer < 1) throw std::invalid_argument("solver: max_outer must be >= 1");
  if (gp_max_iter < 1) throw std::invalid_argument("solver: gp_max_iter must be >= 1");
  if (!(armijo_sigma > 0.0 && armijo_sigma < 1.0))
    throw std::invalid_argument("solver: armijo_sigma must be in (0,1)");
  if (!(armijo_shrink > 0.0 && armijo_shrink < 1.0))
    throw std::invalid_argument("solver: armijo_shrink must be in (0,1)");
  if (!(initial_step > 0.0)) throw std::invalid_argument("solver: initial_step must be > 0");
  if (!(p_min > 0.0 && p_min < 1.0)) throw std::invalid_argument("solver: p_min must be in (0,1)");
}

QuadraticForms build_quadratic_forms(const NetworkRealization& realization) {
  QuadraticForms forms;
  forms.xi = realization.xi;
  forms.beta = realization.beta;
  forms.gram = pilot_gram(realization.pilot);
  const auto m_count = static_cast<std::size_t>(forms.aps());
  const int k_count = forms.users();
  for (double b : forms.beta.data())
    if (!(b > 0.0)) throw std::invalid_argument("build_quadratic_forms: beta must be > 0");

  forms.zeta.resize(static_cast<std::size_t>(k_count * k_count));
  for (int k = 0; k < k_count; ++k) {
    for (int i = 0; i < k_count; ++i) {
      const double g = forms.gram(static_cast<std::size_t>(k), static_cast<std::size_t>(i));
      if (i == k || g == 0.0) continue;
      auto& z = forms.zeta[static_cast<std::size_t>(k * k_count + i)];
      z.resize(m_count);
      for (std::size_t m = 0; m < m_count; ++m) {
        z[m] = g * forms.xi(m, static_cast<std::size_t>(k)) *
               forms.beta(m, static_cast<std::size_t>(i)) /
               forms.beta(m, static_cast<std::size_t>(k));
      }
    }
  }
  return forms;
}

std::vector<double> optimal_filter(int k, std::span<const double> powers,
                                   const QuadraticForms& forms, double rho) {
  const auto m_count = static_cast<std::size_t>(forms.aps());
  const int k_count = forms.users();
  const auto uk = static_cast<std::size_t>(k);

  Matrix d(m_count, m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    double diag = 0.0;
    for (int i = 0; i < k_count; ++i)
      diag += rho * powers[static_cast<std::size_t>(i)] * forms.beta(m, static_cast<std::size_t>(i));
    d(m, m) = forms.xi(m, uk) * (diag + 1.0);
  }
  for (int i = 0; i < k_count; ++i) {
    const auto z = forms.zeta_of(k, i);
    if (z.empty()) continue;
    const double w = rho * powers[static_cast<std::size_t>(i)];
    for (std::size_t a = 0; a < m_count; ++a)
      for (std::size_t b = 0; b < m_count; ++b) d(a, b) += w * z[a] * z[b];
  }

  std::vector<double> t = spd_solve(std::move(d), forms.xi.column(uk));
  const double norm = std::sqrt(dot(t, t));
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw std::runtime_error("optimal_filter: degenerate filter");
  for (double& v : t) v /= norm;
  return t;
}

Matrix optimal_filters(std::span<const double> powers, const QuadraticForms& forms,
                       double rho) {
  Matrix t(static_cast<std::size_t>(forms.aps()), static_cast<std::size_t>(forms.users()));
  for (int k = 0; k < forms.users(); ++k)
    t.set_column(static_cast<std::size_t>(k), optimal_filter(k, powers, forms, rho));
  return t;
}

SinrCoefficients sinr_coefficients(const Matrix& filters, const QuadraticForms& forms,
                                   double rho) {
  const auto m_count = static_cast<std::size_t>(forms.aps());
  const auto k_count = static_cast<std::size_t>(forms.users());
  SinrCoefficients c;
  c.alpha.resize(k_count);
  c.delta.resize(k_count);
  c.chi = Matrix(k_count, k_count);
  c.eta = Matrix(k_count, k_count);
  std::vector<double> t(m_count);
  std::vector<double> t2xi(m_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t m = 0; m < m_count; ++m) {
      t[m] = filters(m, k);
      t2xi[m] = t[m] * t[m] * forms.xi(m, k);
    }
    double txi = 0.0;
    double delta = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) {
      txi += t[m] * forms.xi(m, k);
      delta += t2xi[m];
    }
    c.alpha[k] = rho * txi * txi;
    c.delta[k] = delta;
    for (std::size_t i = 0; i < k_count; ++i) {
      double chi = 0.0;
      for (std::size_t m = 0; m < m_count; ++m) chi += t2xi[m] * forms.beta(m, i);
      c.chi(k, i) = rho * chi;
      const auto z = forms.zeta_of(static_cast<int>(k), static_cast<int>(i));
      if (!z.empty()) {
        const double tz = dot(t, z);
        c.eta(k, i) = rho * tz * tz;
      }
    }
  }
  return c;
}

namespace {

double interference(std::span<const double> p, const SinrCoefficients& c, std::size_t k) {
  double den = c.delta[k];
  for (std::size_t i = 0; i < p.size(); ++i) den += (c.chi(k, i) + c.eta(k, i)) * p[i];
  return den;
}

}  // namespace

double sinr(std::span<const double> powers, const SinrCoefficients& c, int k) {
  const auto uk = static_cast<std::size_t>(k);
  return c.alpha[uk] * powers[uk] / interference(powers, c, uk);
}

double rate(std::span<const double> powers, const SinrCoefficients& c, int k) {
  return std::log2(1.0 + sinr(powers, c, k));
}

std::vector<double> rates(std::span<const double> powers, const SinrCoefficients& c) {
  std::vector<double> r(powers.size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = rate(powers, c, static_cast<int>(k));
  return r;
}

double pf_objective(std::span<const double> powers, const SinrCoefficients& c) {
  double f = 0.0;
  for (std::size_t k = 0; k < powers.size(); ++k) {
    const double r = rate(powers, c, static_cast<int>(k));
    if (!(r > 0.0)) throw std::domain_error("pf_objective: nonpositive rate (infeasible power)");
    f += std::log2(r);
  }
  return f;
}

std::vector<double> pf_gradient(std::span<const double> powers, const SinrCoefficients& c) {
  const std::size_t n = powers.size();
  std::vector<double> grad(n, 0.0);
  constexpr double ln2 = std::numbers::ln2;
  for (std::size_t k = 0; k < n; ++k) {
    const double den = interference(powers, c, k);
    const double s = c.alpha[k] * powers[k] / den;
    const double r = std::log2(1.0 + s);
    if (!(r > 0.0)) throw std::domain_error("pf_gradient: nonpositive rate (infeasible power)");
    const double outer = 1.0 / (r * ln2) / ((1.0 + s) * ln2);
    const double den2 = den * den;
    for (std::size_t j = 0; j < n; ++j) {
      double ds;
      if (j == k) {
        ds = c.alpha[k] * (den - powers[k] * c.chi(k, k)) / den2;
      } else {
        ds = -c.alpha[k] * powers[k] * (c.chi(k, j) + c.eta(k, j)) / den2;
      }
      grad[j] += outer * ds;
    }
  }
  return grad;
}

std::vector<double> project_box(std::span<const double> raw, double p_min) {
  std::vector<double> p(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) p[k] = std::clamp(raw[k], p_min, 1.0);
  return p;
}

std::vector<double> solve_powers(std::span<const double> p0, const SinrCoefficients& c,
                                 const SolverOptions& options) {
  std::vector<double> p(p0.begin(), p0.end());
  double f = pf_objective(p, c);
  std::vector<double> trial(p.size());
  for (int iter = 0; iter < options.gp_max_iter; ++iter) {
    const std::vector<double> g = pf_gradient(p, c);
    double step = options.initial_step;
    double f_trial = f;
    bool accepted = false;
    while (step >= kMinStep) {
      for (std::size_t k = 0; k < p.size(); ++k)
        trial[k] = std::clamp(p[k] + step * g[k], options.p_min, 1.0);
      double ascent = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) ascent += g[k] * (trial[k] - p[k]);
      f_trial = pf_objective(trial, c);
      if (f_trial >= f + options.armijo_sigma * ascent) {
        accepted = true;
        break;
      }
      step *= options.armijo_shrink;
    }
    if (!accepted) break;  // stationary up to the step floor
    const double gain = relative_gain(f_trial, f);
    p = trial;
    f = f_trial;
    if (gain < options.epsilon) break;
  }
  return p;
}

SolverResult solve_alternating(const NetworkRealization& realization,
                               const SolverOptions& options) {
  options.validate();
  const auto start = std::chrono::steady_clock::now();
  const QuadraticForms forms = build_quadratic_forms(realization);
  const double rho = realization.rho;

  SolverResult result;
  std::vector<double> p(static_cast<std::size_t>(forms.users()), 1.0);
  Matrix t = optimal_filters(p, forms, rho);
  SinrCoefficients coeffs = sinr_coefficients(t, forms, rho);
  double f_prev = pf_objective(p, coeffs);
  result.trace.push_back(f_prev);

  for (int outer = 1; outer <= options.max_outer; ++outer) {
    if (outer > 1) {
      t = optimal_filters(p, forms, rho);
      coeffs = sinr_coefficients(t, forms, rho);
    }
    result.filter_trace.push_back(pf_objective(p, coeffs));
    p = solve_powers(p, coeffs, options);
    const double f = pf_objective(p, coeffs);
    result.trace.push_back(f);
    result.outer_iterations = outer;
    if (relative_gain(f, f_prev) <= options.epsilon) {
      result.converged = true;
      break;
    }
    f_prev = f;
  }

  // Filters are re-derived at the final powers so that (t*, p*) is a
  // fixed point of the filter step; this only increases f.
  result.filters = optimal_filters(p, forms, rho);
  coeffs = sinr_coefficients(result.filters, forms, rho);
  result.rates = rates(p, coeffs);
  result.objective = pf_objective(p, coeffs);
  result.powers = std::move(p);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace cfpf
