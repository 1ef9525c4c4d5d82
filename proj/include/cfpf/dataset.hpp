#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cfpf/channel_model.hpp"
#include "cfpf/matrix.hpp"
#include "cfpf/pf_solver.hpp"

namespace cfpf {

enum class FeatureEncoding : std::uint8_t { kLinear = 0, kDb = 1 };

// One labeled record as stored on disk. fading is K x M (row k holds the
// fading from user k to every AP) in the file's encoding.
struct Sample {
  std::vector<std::uint32_t> pilot;
  Matrix fading;
  std::vector<double> label;
  double objective = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct DatasetHeader {
  std::uint32_t version = 1;
  std::uint32_t aps = 0;
  std::uint32_t users = 0;
  std::uint32_t pilots = 0;
  std::uint64_t count = 0;
  FeatureEncoding encoding = FeatureEncoding::kDb;
  std::uint64_t master_seed = 0;

  friend bool operator==(const DatasetHeader&, const DatasetHeader&) = default;
};

struct DatasetFile {
  DatasetHeader header;
  std::vector<Sample> samples;
};

// Generation bookkeeping that is not part of the container.
struct SampleMeta {
  bool converged = true;
  int outer_iterations = 0;
  double wall_seconds = 0.0;
  std::vector<double> rates;
};

struct GeneratedDataset {
  DatasetFile file;
  std::vector<SampleMeta> meta;
};

// K x (M+1) network input: column 0 is the pilot index, column m+1 the
// fading of each user to AP m in dB.
Matrix build_input(const NetworkRealization& realization);

// Same layout from a stored record; linear records are converted to dB.
Matrix sample_input(const Sample& sample, FeatureEncoding encoding);

Sample make_sample(const NetworkRealization& realization, const SolverResult& result,
                   FeatureEncoding encoding);

// Rebuilds the realization (fading, pilots, xi) a record was labeled on.
NetworkRealization realization_from_sample(const NetworkConfig& config, const Sample& sample,
                                           FeatureEncoding encoding);

// Sample i is drawn from mix_seed(master_seed, i) and labeled by
// solve_alternating. Output is independent of jobs.
GeneratedDataset generate(const NetworkConfig& config, std::size_t count,
                          std::uint64_t master_seed, const SolverOptions& options,
                          int jobs = 1, FeatureEncoding encoding = FeatureEncoding::kDb);

std::string serialize(const DatasetFile& file);
DatasetFile deserialize(std::string_view bytes);
void write_dataset(const std::filesystem::path& path, const DatasetFile& file);
DatasetFile read_dataset(const std::filesystem::path& path);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Consecutive ranges: first train_n, next val_n, next test_n.
Split split(std::size_t count, std::size_t train_n, std::size_t val_n, std::size_t test_n);

struct NormalizationStats {
  double pov_scale = 1.0;     // 1 / tau
  std::vector<double> mean;   // per AP column, dB
  std::vector<double> stddev; // per AP column, dB

  friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

NormalizationStats fit_normalization(const DatasetFile& file, std::span<const std::size_t> train);
NormalizationStats fit_normalization(std::span<const Matrix> inputs, int pilots);

// In place on a K x (M+1) input from build_input / sample_input.
void apply_normalization(const NormalizationStats& stats, Matrix& input);
void invert_normalization(const NormalizationStats& stats, Matrix& input);

}  // namespace cfpf
