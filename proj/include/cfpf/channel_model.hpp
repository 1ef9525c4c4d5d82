#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "cfpf/matrix.hpp"

namespace cfpf {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

enum class PilotAssignment { kUniform, kOrthogonalFirst };

// Network layout and radio parameters. Distances in km, powers in mW,
// noise in dBm.
struct NetworkConfig {
  int aps = 20;
  int users = 8;
  int pilots = 4;
  double area_km = 1.0;
  double d1_km = 0.05;
  double d0_km = 0.01;
  double path_loss_db = 140.7;
  double shadow_std_db = 8.0;
  double pilot_power_mw = 200.0;
  double data_power_mw = 200.0;
  double noise_dbm = -92.0;
  // Recorded for completeness; the noise power above already includes it.
  double noise_figure_db = 9.0;
  int coherence = 200;
  PilotAssignment pilot_assignment = PilotAssignment::kUniform;

  // Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
};

// One dropped network. beta and xi are M x K (row = AP, column = user);
// pilot[k] is the 1-based pilot index of user k.
struct NetworkRealization {
  std::vector<Point2> ap_pos;
  std::vector<Point2> user_pos;
  Matrix beta;
  std::vector<int> pilot;
  Matrix xi;
  double rho_p = 0.0;
  double rho = 0.0;
  int pilots = 1;
  std::uint64_t seed = 0;

  int aps() const { return static_cast<int>(beta.rows()); }
  int users() const { return static_cast<int>(beta.cols()); }

  friend bool operator==(const NetworkRealization&, const NetworkRealization&) = default;
};

double wrapped_distance(Point2 a, Point2 b, double side_km);

// Three-slope path loss in dB (negative) for a distance in km.
double path_loss_db(double d_km, const NetworkConfig& config);

double large_scale_fading(double pl_db, double shadow_draw, double shadow_std_db);

std::vector<int> assign_pilots(int users, int pilots, std::mt19937_64& rng,
                               PilotAssignment mode = PilotAssignment::kUniform);

// K x K matrix of |phi_k^H phi_i|^2 for canonical orthonormal pilots.
Matrix pilot_gram(std::span<const int> pilot);

// MMSE estimate variance for user k at every AP. beta is the full M x K
// fading matrix; only column k and its co-pilot columns are read.
std::vector<double> estimation_quality(const Matrix& beta, int k, const Matrix& gram,
                                       double rho_p, int pilots);

struct NormalizedSnr {
  double rho_p;
  double rho;
};
NormalizedSnr normalized_snrs(const NetworkConfig& config);

// Recomputes xi for every user from beta, pilot, rho_p.
Matrix estimation_quality_all(const Matrix& beta, std::span<const int> pilot, double rho_p,
                              int pilots);

NetworkRealization drop_network(const NetworkConfig& config, std::uint64_t seed);

// Builds a realization from stored large-scale statistics (positions left
// empty). Used when replaying dataset records.
NetworkRealization realization_from_fading(const NetworkConfig& config, Matrix beta,
                                           std::vector<int> pilot, std::uint64_t seed);

// Per-sample seed derivation: splitmix64 finalizer applied to
// master_seed + (index + 1) * 0x9E3779B97F4A7C15.
std::uint64_t mix_seed(std::uint64_t master_seed, std::uint64_t index);

}  // namespace cfpf
