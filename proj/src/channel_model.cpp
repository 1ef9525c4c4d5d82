#include "cfpf/channel_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cfpf {

void NetworkConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("network config: " + what);
  };
  if (aps < 1) fail("aps must be >= 1");
  if (users < 1) fail("users must be >= 1");
  if (pilots < 1) fail("pilots must be >= 1");
  if (!(d0_km > 0.0 && d0_km < d1_km && d1_km < area_km)) fail("need 0 < d0 < d1 < area");
  if (pilots >= coherence) fail("pilots must be < coherence");
  if (!(pilot_power_mw > 0.0 && data_power_mw > 0.0)) fail("powers must be > 0");
  if (shadow_std_db < 0.0) fail("shadow_std_db must be >= 0");
}

double wrapped_distance(Point2 a, Point2 b, double side_km) {
  auto axis = [side_km](double u, double v) {
    const double d = std::abs(u - v);
    return std::min(d, side_km - d);
  };
  return std::hypot(axis(a.x, b.x), axis(a.y, b.y));
}

double path_loss_db(double d_km, const NetworkConfig& config) {
  const double l = config.path_loss_db;
  const double d1 = config.d1_km;
  const double d0 = config.d0_km;
  if (d_km > d1) return -l - 35.0 * std::log10(d_km);
  if (d_km > d0) return -l - 15.0 * std::log10(d1) - 20.0 * std::log10(d_km);
  return -l - 15.0 * std::log10(d1) - 20.0 * std::log10(d0);
}

double large_scale_fading(double pl_db, double shadow_draw, double shadow_std_db) {
  return std::pow(10.0, pl_db / 10.0) * std::pow(10.0, shadow_std_db * shadow_draw / 10.0);
}

std::vector<int> assign_pilots(int users, int pilots, std::mt19937_64& rng,
                               PilotAssignment mode) {
  if (pilots < 1) throw std::invalid_argument("assign_pilots: pilots must be >= 1");
  std::vector<int> out(static_cast<std::size_t>(users));
  std::uniform_int_distribution<int> pick(1, pilots);
  int first = 0;
  if (mode == PilotAssignment::kOrthogonalFirst) {
    std::vector<int> perm(static_cast<std::size_t>(pilots));
    std::iota(perm.begin(), perm.end(), 1);
    std::shuffle(perm.begin(), perm.end(), rng);
    first = std::min(users, pilots);
    std::copy_n(perm.begin(), first, out.begin());
  }
  for (int k = first; k < users; ++k) out[static_cast<std::size_t>(k)] = pick(rng);
  return out;
}

Matrix pilot_gram(std::span<const int> pilot) {
  const std::size_t k = pilot.size();
  Matrix g(k, k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) g(a, b) = pilot[a] == pilot[b] ? 1.0 : 0.0;
  return g;
}

std::vector<double> estimation_quality(const Matrix& beta, int k, const Matrix& gram,
                                       double rho_p, int pilots) {
  const std::size_t m_count = beta.rows();
  const std::size_t k_count = beta.cols();
  const auto uk = static_cast<std::size_t>(k);
  const double gain = static_cast<double>(pilots) * rho_p;
  std::vector<double> xi(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    const double b = beta(m, uk);
    if (!(b > 0.0)) throw std::invalid_argument("estimation_quality: beta must be > 0");
    double contamination = 0.0;
    for (std::size_t i = 0; i < k_count; ++i) contamination += beta(m, i) * gram(uk, i);
    xi[m] = gain * b * b / (gain * contamination + 1.0);
  }
  return xi;
}

NormalizedSnr normalized_snrs(const NetworkConfig& config) {
  const double noise_mw = std::pow(10.0, config.noise_dbm / 10.0);
  return {config.pilot_power_mw / noise_mw, config.data_power_mw / noise_mw};
}

Matrix estimation_quality_all(const Matrix& beta, std::span<const int> pilot, double rho_p,
                              int pilots) {
  const Matrix gram = pilot_gram(pilot);
  Matrix xi(beta.rows(), beta.cols());
  for (std::size_t k = 0; k < beta.cols(); ++k)
    xi.set_column(k, estimation_quality(beta, static_cast<int>(k), gram, rho_p, pilots));
  return xi;
}

NetworkRealization drop_network(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, config.area_km);
  std::normal_distribution<double> shadow(0.0, 1.0);

  NetworkRealization r;
  r.seed = seed;
  r.pilots = config.pilots;
  const auto m_count = static_cast<std::size_t>(config.aps);
  const auto k_count = static_cast<std::size_t>(config.users);

  // Draw order is part of the reproducibility contract: APs, users,
  // shadowing (AP-major), pilots.
  r.ap_pos.resize(m_count);
  for (auto& p : r.ap_pos) {
    p.x = coord(rng);
    p.y = coord(rng);
  }
  r.user_pos.resize(k_count);
  for (auto& p : r.user_pos) {
    p.x = coord(rng);
    p.y = coord(rng);
  }
  r.beta = Matrix(m_count, k_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    for (std::size_t k = 0; k < k_count; ++k) {
      // Coincident points land in the flat d <= d0 branch.
      const double d = std::max(wrapped_distance(r.ap_pos[m], r.user_pos[k], config.area_km),
                                config.d0_km);
      r.beta(m, k) = large_scale_fading(path_loss_db(d, config), shadow(rng),
                                        config.shadow_std_db);
    }
  }
  r.pilot = assign_pilots(config.users, config.pilots, rng, config.pilot_assignment);

  const auto snr = normalized_snrs(config);
  r.rho_p = snr.rho_p;
  r.rho = snr.rho;
  r.xi = estimation_quality_all(r.beta, r.pilot, r.rho_p, r.pilots);
  return r;
}

NetworkRealization realization_from_fading(const NetworkConfig& config, Matrix beta,
                                           std::vector<int> pilot, std::uint64_t seed) {
  if (beta.rows() != static_cast<std::size_t>(config.aps) ||
      beta.cols() != static_cast<std::size_t>(config.users) ||
      pilot.size() != beta.cols())
    throw std::invalid_argument("realization_from_fading: shape mismatch with config");
  NetworkRealization r;
  r.seed = seed;
  r.pilots = config.pilots;
  r.beta = std::move(beta);
  r.pilot = std::move(pilot);
  const auto snr = normalized_snrs(config);
  r.rho_p = snr.rho_p;
  r.rho = snr.rho;
  r.xi = estimation_quality_all(r.beta, r.pilot, r.rho_p, r.pilots);
  return r;
}

std::uint64_t mix_seed(std::uint64_t master_seed, std::uint64_t index) {
  std::uint64_t z = master_seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace cfpf
