#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cfpf/channel_model.hpp"
#include "cfpf/dataset.hpp"
#include "cfpf/matrix.hpp"

namespace cfpf {

enum class Activation : std::uint8_t { kTanh = 0, kRelu = 1 };
enum class OutputActivation : std::uint8_t { kSigmoid = 0, kTanhRescaled = 1 };

struct RdnConfig {
  int growth = 32;  // G
  int layers = 4;   // L, dense layers inside the block
  int aps = 20;
  int users = 8;
  int pilots = 4;
  Activation inner = Activation::kTanh;
  OutputActivation output = OutputActivation::kSigmoid;

  void validate() const;
  friend bool operator==(const RdnConfig&, const RdnConfig&) = default;
};

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims);
  std::size_t size() const { return data.size(); }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

// Kernels are laid out [out][in][kh][kw]. Feature maps have height K and
// width 1, so 3x3 kernels only ever touch their centre column; the other
// columns are allocated and counted but always see zero padding.
struct Parameters {
  Tensor fel_w;                 // G x 1 x 1 x (M+1)
  Tensor fel_b;                 // G
  std::vector<Tensor> dense_w;  // layer l: G x lG x 3 x 3
  std::vector<Tensor> dense_b;  // layer l: G
  Tensor fuse_w;                // G x (L+1)G x 1 x 1
  Tensor fuse_b;                // G
  Tensor frl_w;                 // 1 x G x 3 x 3
  Tensor frl_b;                 // 1

  // Visits every tensor in declaration order.
  void for_each(const std::function<void(Tensor&)>& fn);
  void for_each(const std::function<void(const Tensor&)>& fn) const;
  std::size_t element_count() const;

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

// Zero tensors shaped for config.
Parameters zero_parameters(const RdnConfig& config);

// Glorot-uniform weights, zero biases.
Parameters init_parameters(const RdnConfig& config, std::uint64_t seed);

struct ParameterCount {
  std::size_t weights;
  std::size_t biases;
  std::size_t total;
};
ParameterCount count_parameters(const RdnConfig& config);

struct ForwardCache {
  Matrix input;              // K x (M+1), normalized
  std::vector<Matrix> maps;  // B_0..B_L, each G x K
  Matrix fused;              // B_G
  Matrix block_out;          // B_F = B_0 + B_G
  std::vector<double> frl_pre;
  std::vector<double> output;
};

std::vector<double> forward(const RdnConfig& config, const Parameters& params,
                            const Matrix& input, ForwardCache* cache = nullptr);

// Adds scale * d(||target - output||^2)/d(params) into grads.
void accumulate_gradients(const RdnConfig& config, const Parameters& params,
                          const ForwardCache& cache, std::span<const double> target,
                          double scale, Parameters& grads);

// Gradient of the per-sample squared error ||target - output||^2.
Parameters backward(const RdnConfig& config, const Parameters& params, const ForwardCache& cache,
                    std::span<const double> target);

// Euclidean norm of the difference.
double rmse(std::span<const double> p, std::span<const double> p_hat);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Parameters m;
  Parameters v;
  long step = 0;
};

AdamState make_adam_state(const RdnConfig& config);
void adam_step(Parameters& params, const Parameters& grads, AdamState& state, double lr,
               const AdamOptions& options = {});

struct TrainConfig {
  int epochs = 40;
  int batch_size = 128;
  double learning_rate = 1e-4;
  double lr_drop_factor = 0.1;
  int lr_drop_period = 20;  // 0 disables the schedule
  AdamOptions adam;
  std::uint64_t seed = 1;

  void validate() const;
  double learning_rate_at(int epoch) const;  // epoch is 1-based
};

struct TrainingSet {
  std::vector<Matrix> inputs;  // normalized
  std::vector<std::vector<double>> labels;
  std::size_t size() const { return inputs.size(); }
};

TrainingSet make_training_set(const DatasetFile& file, std::span<const std::size_t> indices,
                              const NormalizationStats& stats);

struct EpochStats {
  int epoch;
  double learning_rate;
  double train_rmse;  // mean per-sample ||p - p_hat|| after the epoch
  double val_rmse;
};

struct TrainResult {
  Parameters params;  // best on validation
  std::vector<EpochStats> curve;
  int best_epoch = 0;
};

TrainResult train(const RdnConfig& config, const TrainConfig& train_config,
                  const TrainingSet& train_set, const TrainingSet& val_set);

double mean_rmse(const RdnConfig& config, const Parameters& params, const TrainingSet& set);

// Self-contained inference bundle.
struct Checkpoint {
  RdnConfig config;
  Parameters params;
  NormalizationStats stats;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

struct Prediction {
  std::vector<double> powers;  // network output
  Matrix filters;              // optimal filters at those powers
  std::vector<double> rates;   // gross R_k
  std::vector<double> net_rates;
};

// forward(normalize(build_input(r))) followed by one filter solve at the
// predicted powers. Throws std::invalid_argument on a shape mismatch.
Prediction predict_and_refine(const Checkpoint& ckpt, const NetworkRealization& realization,
                              int coherence);

// Rates for a given power vector with filters recomputed at those powers.
Prediction refine_powers(std::vector<double> powers, const NetworkRealization& realization,
                         int coherence);

}  // namespace cfpf
