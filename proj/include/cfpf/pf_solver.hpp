#pragma once

#include <span>
#include <vector>

#include "cfpf/channel_model.hpp"
#include "cfpf/matrix.hpp"

namespace cfpf {

// Per-user statistics entering the SINR quadratic forms. For user k:
//   xi_k          column k of xi
//   Y_ki          diag(xi_k .* beta_i)
//   zeta_ki       gram(k,i) * xi_k .* beta_i ./ beta_k
//   Xi_k          diag(xi_k)
// Y and Xi are diagonal and are not materialized; zeta is stored for
// co-pilot pairs only.
struct QuadraticForms {
  Matrix xi;    // M x K
  Matrix beta;  // M x K
  Matrix gram;  // K x K
  // zeta[k * K + i] is empty when users k and i use orthogonal pilots or i == k.
  std::vector<std::vector<double>> zeta;

  int aps() const { return static_cast<int>(xi.rows()); }
  int users() const { return static_cast<int>(xi.cols()); }
  std::span<const double> zeta_of(int k, int i) const {
    return zeta[static_cast<std::size_t>(k * users() + i)];
  }
};

struct SinrCoefficients {
  std::vector<double> alpha;  // K
  Matrix chi;                 // K x K
  Matrix eta;                 // K x K, zero diagonal
  std::vector<double> delta;  // K
};

struct SolverOptions {
  double epsilon = 1e-3;
  int max_outer = 100;
  int gp_max_iter = 500;
  double armijo_sigma = 1e-4;
  double armijo_shrink = 0.5;
  double initial_step = 1.0;
  double p_min = 1e-6;

  void validate() const;
};

struct SolverResult {
  Matrix filters;               // M x K, unit-norm columns t*
  std::vector<double> powers;   // p*
  std::vector<double> rates;    // R_k at (t*, p*)
  double objective = 0.0;       // f(t*, p*)
  // trace[0] is f after the first filter update at the initial powers;
  // trace[j] is f after the power update of outer iteration j.
  std::vector<double> trace;
  // filter_trace[j-1] is f after the filter update of outer iteration j.
  std::vector<double> filter_trace;
  int outer_iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
};

QuadraticForms build_quadratic_forms(const NetworkRealization& realization);

// Closed-form maximizer of the generalized Rayleigh quotient for user k:
// t_k = D_k^{-1} xi_k / ||D_k^{-1} xi_k||. Throws std::runtime_error when
// D_k is not numerically positive definite.
std::vector<double> optimal_filter(int k, std::span<const double> powers,
                                   const QuadraticForms& forms, double rho);

Matrix optimal_filters(std::span<const double> powers, const QuadraticForms& forms,
                       double rho);

SinrCoefficients sinr_coefficients(const Matrix& filters, const QuadraticForms& forms,
                                   double rho);

double sinr(std::span<const double> powers, const SinrCoefficients& c, int k);
double rate(std::span<const double> powers, const SinrCoefficients& c, int k);
std::vector<double> rates(std::span<const double> powers, const SinrCoefficients& c);

// Sum of log2(R_k). Throws std::domain_error if any R_k <= 0.
double pf_objective(std::span<const double> powers, const SinrCoefficients& c);
std::vector<double> pf_gradient(std::span<const double> powers, const SinrCoefficients& c);

std::vector<double> project_box(std::span<const double> raw, double p_min);

// Gradient projection with Armijo backtracking on the power box.
std::vector<double> solve_powers(std::span<const double> p0, const SinrCoefficients& c,
                                 const SolverOptions& options);

SolverResult solve_alternating(const NetworkRealization& realization,
                               const SolverOptions& options);

}  // namespace cfpf
