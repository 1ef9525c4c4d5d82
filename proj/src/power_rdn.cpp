#include "cfpf/power_rdn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cfpf/metrics.hpp"
#include "cfpf/pf_solver.hpp"

namespace cfpf {
namespace {

std::size_t usz(int v) { return static_cast<std::size_t>(v); }

// Offsets of the centre column (kw = 1) of a 3x3 kernel for rows kh = 0,1,2.
constexpr std::size_t kTap[3] = {1, 4, 7};

double activate(Activation a, double z) {
  return a == Activation::kTanh ? std::tanh(z) : std::max(z, 0.0);
}

// Derivative expressed through the activation output.
double activate_grad(Activation a, double y) {
  return a == Activation::kTanh ? 1.0 - y * y : (y > 0.0 ? 1.0 : 0.0);
}

double output_activate(OutputActivation a, double z) {
  if (a == OutputActivation::kSigmoid) return 1.0 / (1.0 + std::exp(-z));
  return 0.5 * (std::tanh(z) + 1.0);
}

double output_activate_grad(OutputActivation a, double y) {
  // sigmoid: y(1-y); (tanh+1)/2: (1 - tanh^2)/2 = 2y(1-y)
  return a == OutputActivation::kSigmoid ? y * (1.0 - y) : 2.0 * y * (1.0 - y);
}

// Channel c of the concatenation [B_0, ..., B_{n-1}].
std::span<const double> concat_channel(const std::vector<Matrix>& maps, std::size_t c,
                                       std::size_t growth) {
  return maps[c / growth].row(c % growth);
}

// out(g, k) += sum_c sum_kh w[g][c][kh][1] * in_c[k + kh - 1]
template <typename ChannelFn>
void conv3_forward(const Tensor& w, std::size_t in_channels, ChannelFn channel, Matrix& out) {
  const std::size_t out_channels = out.rows();
  const std::size_t k_count = out.cols();
  for (std::size_t g = 0; g < out_channels; ++g) {
    auto o = out.row(g);
    for (std::size_t c = 0; c < in_channels; ++c) {
      const double* wk = &w.data[(g * in_channels + c) * 9];
      const double w0 = wk[kTap[0]];
      const double w1 = wk[kTap[1]];
      const double w2 = wk[kTap[2]];
      const auto x = channel(c);
      for (std::size_t k = 0; k < k_count; ++k) {
        double s = w1 * x[k];
        if (k > 0) s += w0 * x[k - 1];
        if (k + 1 < k_count) s += w2 * x[k + 1];
        o[k] += s;
      }
    }
  }
}

// Given dz (out_channels x K), accumulates kernel/bias gradients and the
// input gradient through dchannel(c).
template <typename ChannelFn, typename GradFn>
void conv3_backward(const Tensor& w, std::size_t in_channels, ChannelFn channel,
                    GradFn dchannel, const Matrix& dz, double scale, Tensor& dw, Tensor& db) {
  const std::size_t out_channels = dz.rows();
  const std::size_t k_count = dz.cols();
  for (std::size_t g = 0; g < out_channels; ++g) {
    const auto d = dz.row(g);
    db.data[g] += scale * std::accumulate(d.begin(), d.end(), 0.0);
    for (std::size_t c = 0; c < in_channels; ++c) {
      const std::size_t base = (g * in_channels + c) * 9;
      const auto x = channel(c);
      double g0 = 0.0, g1 = 0.0, g2 = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) {
        g1 += d[k] * x[k];
        if (k > 0) g0 += d[k] * x[k - 1];
        if (k + 1 < k_count) g2 += d[k] * x[k + 1];
      }
      dw.data[base + kTap[0]] += scale * g0;
      dw.data[base + kTap[1]] += scale * g1;
      dw.data[base + kTap[2]] += scale * g2;

      const double w0 = w.data[base + kTap[0]];
      const double w1 = w.data[base + kTap[1]];
      const double w2 = w.data[base + kTap[2]];
      auto dx = dchannel(c);
      for (std::size_t j = 0; j < k_count; ++j) {
        // x[j] feeds z[j+1] via w0, z[j] via w1, z[j-1] via w2.
        double s = w1 * d[j];
        if (j + 1 < k_count) s += w0 * d[j + 1];
        if (j > 0) s += w2 * d[j - 1];
        dx[j] += s;
      }
    }
  }
}

}  // namespace

void RdnConfig::validate() const {
  if (growth < 1) throw std::invalid_argument("model: growth must be >= 1");
  if (layers < 1) throw std::invalid_argument("model: layers must be >= 1");
  if (aps < 1 || users < 1 || pilots < 1)
    throw std::invalid_argument("model: aps, users, pilots must be >= 1");
}

Tensor::Tensor(std::vector<std::size_t> dims) : shape(std::move(dims)) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  data.assign(n, 0.0);
}

void Parameters::for_each(const std::function<void(Tensor&)>& fn) {
  fn(fel_w);
  fn(fel_b);
  for (std::size_t l = 0; l < dense_w.size(); ++l) {
    fn(dense_w[l]);
    fn(dense_b[l]);
  }
  fn(fuse_w);
  fn(fuse_b);
  fn(frl_w);
  fn(frl_b);
}

void Parameters::for_each(const std::function<void(const Tensor&)>& fn) const {
  const_cast<Parameters*>(this)->for_each([&](Tensor& t) { fn(t); });
}

std::size_t Parameters::element_count() const {
  std::size_t n = 0;
  for_each([&](const Tensor& t) { n += t.size(); });
  return n;
}

Parameters zero_parameters(const RdnConfig& config) {
  config.validate();
  const std::size_t g = usz(config.growth);
  const std::size_t l_count = usz(config.layers);
  Parameters p;
  p.fel_w = Tensor({g, 1, 1, usz(config.aps) + 1});
  p.fel_b = Tensor({g});
  for (std::size_t l = 1; l <= l_count; ++l) {
    p.dense_w.emplace_back(std::vector<std::size_t>{g, l * g, 3, 3});
    p.dense_b.emplace_back(std::vector<std::size_t>{g});
  }
  p.fuse_w = Tensor({g, (l_count + 1) * g, 1, 1});
  p.fuse_b = Tensor({g});
  p.frl_w = Tensor({1, g, 3, 3});
  p.frl_b = Tensor({1});
  return p;
}

Parameters init_parameters(const RdnConfig& config, std::uint64_t seed) {
  Parameters p = zero_parameters(config);
  std::mt19937_64 rng(seed);
  auto glorot = [&rng](Tensor& w) {
    const std::size_t receptive = w.shape[2] * w.shape[3];
    const double fan_in = static_cast<double>(w.shape[1] * receptive);
    const double fan_out = static_cast<double>(w.shape[0] * receptive);
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-s, s);
    for (double& v : w.data) v = u(rng);
  };
  glorot(p.fel_w);
  for (auto& w : p.dense_w) glorot(w);
  glorot(p.fuse_w);
  glorot(p.frl_w);
  return p;
}

ParameterCount count_parameters(const RdnConfig& config) {
  config.validate();
  const std::size_t g = usz(config.growth);
  const std::size_t l = usz(config.layers);
  const std::size_t m = usz(config.aps);
  const std::size_t weights = g * (m + 1) + 9 * g * g * l * (l + 1) / 2 + (l + 1) * g * g + 9 * g;
  const std::size_t biases = g + l * g + g + 1;
  return {weights, biases, weights + biases};
}

std::vector<double> forward(const RdnConfig& config, const Parameters& params,
                            const Matrix& input, ForwardCache* cache) {
  const std::size_t g_count = usz(config.growth);
  const std::size_t l_count = usz(config.layers);
  const std::size_t k_count = usz(config.users);
  const std::size_t width = usz(config.aps) + 1;
  if (input.rows() != k_count || input.cols() != width)
    throw std::invalid_argument("forward: input must be K x (M+1)");

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.input = input;
  c.maps.assign(l_count + 1, Matrix(g_count, k_count));

  // Feature extraction: 1 x (M+1) kernel with valid padding.
  Matrix& b0 = c.maps[0];
  for (std::size_t g = 0; g < g_count; ++g) {
    const double* w = &params.fel_w.data[g * width];
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto x = input.row(k);
      double z = params.fel_b.data[g];
      for (std::size_t j = 0; j < width; ++j) z += w[j] * x[j];
      b0(g, k) = activate(config.inner, z);
    }
  }

  for (std::size_t l = 1; l <= l_count; ++l) {
    Matrix& out = c.maps[l];
    const auto& b = params.dense_b[l - 1].data;
    for (std::size_t g = 0; g < g_count; ++g)
      for (std::size_t k = 0; k < k_count; ++k) out(g, k) = b[g];
    conv3_forward(params.dense_w[l - 1], l * g_count,
                  [&](std::size_t ch) { return concat_channel(c.maps, ch, g_count); }, out);
    for (double& v : out.data()) v = activate(config.inner, v);
  }

  // Local feature fusion (1x1, no activation) and residual add.
  const std::size_t fused_in = (l_count + 1) * g_count;
  c.fused = Matrix(g_count, k_count);
  for (std::size_t g = 0; g < g_count; ++g) {
    auto o = c.fused.row(g);
    std::fill(o.begin(), o.end(), params.fuse_b.data[g]);
    for (std::size_t ch = 0; ch < fused_in; ++ch) {
      const double w = params.fuse_w.data[g * fused_in + ch];
      const auto x = concat_channel(c.maps, ch, g_count);
      for (std::size_t k = 0; k < k_count; ++k) o[k] += w * x[k];
    }
  }
  c.block_out = c.fused;
  for (std::size_t i = 0; i < b0.data().size(); ++i) c.block_out.data()[i] += b0.data()[i];

  Matrix pre(1, k_count, params.frl_b.data[0]);
  conv3_forward(params.frl_w, g_count, [&](std::size_t ch) { return c.block_out.row(ch); },
                pre);
  c.frl_pre.assign(pre.data().begin(), pre.data().end());
  c.output.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k)
    c.output[k] = output_activate(config.output, c.frl_pre[k]);
  return c.output;
}

void accumulate_gradients(const RdnConfig& config, const Parameters& params,
                          const ForwardCache& cache, std::span<const double> target,
                          double scale, Parameters& grads) {
  const std::size_t g_count = usz(config.growth);
  const std::size_t l_count = usz(config.layers);
  const std::size_t k_count = usz(config.users);
  const std::size_t width = usz(config.aps) + 1;
  if (target.size() != k_count) throw std::invalid_argument("backward: target length mismatch");

  Matrix d_pre(1, k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const double y = cache.output[k];
    d_pre(0, k) = 2.0 * (y - target[k]) * output_activate_grad(config.output, y);
  }

  std::vector<Matrix> d_maps(l_count + 1, Matrix(g_count, k_count));
  Matrix d_block(g_count, k_count);
  conv3_backward(
      params.frl_w, g_count, [&](std::size_t ch) { return cache.block_out.row(ch); },
      [&](std::size_t ch) { return d_block.row(ch); }, d_pre, scale, grads.frl_w, grads.frl_b);

  // B_F = B_0 + B_G
  for (std::size_t i = 0; i < d_block.data().size(); ++i) d_maps[0].data()[i] += d_block.data()[i];

  const std::size_t fused_in = (l_count + 1) * g_count;
  for (std::size_t g = 0; g < g_count; ++g) {
    const auto d = d_block.row(g);
    grads.fuse_b.data[g] += scale * std::accumulate(d.begin(), d.end(), 0.0);
    for (std::size_t ch = 0; ch < fused_in; ++ch) {
      const auto x = concat_channel(cache.maps, ch, g_count);
      double gw = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) gw += d[k] * x[k];
      grads.fuse_w.data[g * fused_in + ch] += scale * gw;
      const double w = params.fuse_w.data[g * fused_in + ch];
      auto dx = d_maps[ch / g_count].row(ch % g_count);
      for (std::size_t k = 0; k < k_count; ++k) dx[k] += w * d[k];
    }
  }

  // Dense layers in reverse; each B_l's gradient is complete once every
  // later consumer has been processed.
  for (std::size_t l = l_count; l >= 1; --l) {
    Matrix dz = d_maps[l];
    const auto y = cache.maps[l].data();
    for (std::size_t i = 0; i < y.size(); ++i) dz.data()[i] *= activate_grad(config.inner, y[i]);
    conv3_backward(
        params.dense_w[l - 1], l * g_count,
        [&](std::size_t ch) { return concat_channel(cache.maps, ch, g_count); },
        [&](std::size_t ch) { return d_maps[ch / g_count].row(ch % g_count); }, dz, scale,
        grads.dense_w[l - 1], grads.dense_b[l - 1]);
  }

  const Matrix& b0 = cache.maps[0];
  for (std::size_t g = 0; g < g_count; ++g) {
    double* gw = &grads.fel_w.data[g * width];
    double gb = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      const double dz = d_maps[0](g, k) * activate_grad(config.inner, b0(g, k));
      if (dz == 0.0) continue;
      gb += dz;
      const auto x = cache.input.row(k);
      for (std::size_t j = 0; j < width; ++j) gw[j] += scale * dz * x[j];
    }
    grads.fel_b.data[g] += scale * gb;
  }
}

Parameters backward(const RdnConfig& config, const Parameters& params, const ForwardCache& cache,
                    std::span<const double> target) {
  Parameters grads = zero_parameters(config);
  accumulate_gradients(config, params, cache, target, 1.0, grads);
  return grads;
}

double rmse(std::span<const double> p, std::span<const double> p_hat) {
  if (p.size() != p_hat.size()) throw std::invalid_argument("rmse: length mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += (p[k] - p_hat[k]) * (p[k] - p_hat[k]);
  return std::sqrt(s);
}

AdamState make_adam_state(const RdnConfig& config) {
  return {zero_parameters(config), zero_parameters(config), 0};
}

void adam_step(Parameters& params, const Parameters& grads, AdamState& state, double lr,
               const AdamOptions& options) {
  ++state.step;
  const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.step));
  std::vector<Tensor*> p_list, m_list, v_list;
  std::vector<const Tensor*> g_list;
  params.for_each([&](Tensor& t) { p_list.push_back(&t); });
  state.m.for_each([&](Tensor& t) { m_list.push_back(&t); });
  state.v.for_each([&](Tensor& t) { v_list.push_back(&t); });
  grads.for_each([&](const Tensor& t) { g_list.push_back(&t); });
  if (p_list.size() != g_list.size()) throw std::invalid_argument("adam_step: shape mismatch");
  for (std::size_t t = 0; t < p_list.size(); ++t) {
    auto& p = p_list[t]->data;
    auto& m = m_list[t]->data;
    auto& v = v_list[t]->data;
    const auto& g = g_list[t]->data;
    if (p.size() != g.size()) throw std::invalid_argument("adam_step: shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g[i];
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + options.epsilon);
    }
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
  if (!(lr_drop_factor > 0.0)) throw std::invalid_argument("train: lr_drop_factor must be > 0");
  if (lr_drop_period < 0) throw std::invalid_argument("train: lr_drop_period must be >= 0");
}

double TrainConfig::learning_rate_at(int epoch) const {
  if (lr_drop_period == 0) return learning_rate;
  return learning_rate * std::pow(lr_drop_factor, (epoch - 1) / lr_drop_period);
}

TrainingSet make_training_set(const DatasetFile& file, std::span<const std::size_t> indices,
                              const NormalizationStats& stats) {
  TrainingSet set;
  for (std::size_t i : indices) {
    const Sample& s = file.samples.at(i);
    Matrix in = sample_input(s, file.header.encoding);
    apply_normalization(stats, in);
    set.inputs.push_back(std::move(in));
    set.labels.push_back(s.label);
  }
  return set;
}

double mean_rmse(const RdnConfig& config, const Parameters& params, const TrainingSet& set) {
  if (set.size() == 0) throw std::invalid_argument("mean_rmse: empty set");
  double total = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i)
    total += rmse(set.labels[i], forward(config, params, set.inputs[i]));
  return total / static_cast<double>(set.size());
}

TrainResult train(const RdnConfig& config, const TrainConfig& tc, const TrainingSet& train_set,
                  const TrainingSet& val_set) {
  config.validate();
  tc.validate();
  if (train_set.size() == 0 || val_set.size() == 0)
    throw std::invalid_argument("train: empty training or validation split");

  TrainResult result;
  Parameters params = init_parameters(config, mix_seed(tc.seed, 0));
  AdamState adam = make_adam_state(config);
  std::mt19937_64 shuffle_rng(mix_seed(tc.seed, 1));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  Parameters grads = zero_parameters(config);
  ForwardCache cache;
  double best_val = std::numeric_limits<double>::infinity();
  result.params = params;

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    const double lr = tc.learning_rate_at(epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += usz(tc.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + usz(tc.batch_size));
      const double scale = 1.0 / static_cast<double>(stop - start);
      grads.for_each([](Tensor& t) { std::fill(t.data.begin(), t.data.end(), 0.0); });
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        forward(config, params, train_set.inputs[i], &cache);
        accumulate_gradients(config, params, cache, train_set.labels[i], scale, grads);
      }
      adam_step(params, grads, adam, lr, tc.adam);
    }
    const double train_rmse = mean_rmse(config, params, train_set);
    const double val_rmse = mean_rmse(config, params, val_set);
    result.curve.push_back({epoch, lr, train_rmse, val_rmse});
    if (val_rmse < best_val) {
      best_val = val_rmse;
      result.params = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

namespace {

constexpr char kCheckpointMagic[4] = {'C', 'F', 'N', 'N'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f64(std::string& out, double v) {
  const auto u = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

struct Cursor {
  std::string_view in;
  std::size_t pos = 0;
  unsigned char byte() {
    if (pos >= in.size()) throw std::runtime_error("checkpoint: truncated file");
    return static_cast<unsigned char>(in[pos++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }
  double f64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return std::bit_cast<double>(v);
  }
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const RdnConfig& c = ckpt.config;
  std::string out(kCheckpointMagic, 4);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(c.growth));
  put_u32(out, static_cast<std::uint32_t>(c.layers));
  put_u32(out, static_cast<std::uint32_t>(c.aps));
  put_u32(out, static_cast<std::uint32_t>(c.users));
  put_u32(out, static_cast<std::uint32_t>(c.pilots));
  out.push_back(static_cast<char>(c.inner));
  out.push_back(static_cast<char>(c.output));
  if (ckpt.params.element_count() != count_parameters(c).total)
    throw std::invalid_argument("checkpoint: parameters do not match config");
  ckpt.params.for_each([&](const Tensor& t) {
    for (double v : t.data) put_f64(out, v);
  });
  if (ckpt.stats.mean.size() != usz(c.aps) || ckpt.stats.stddev.size() != usz(c.aps))
    throw std::invalid_argument("checkpoint: normalization stats do not match config");
  put_f64(out, ckpt.stats.pov_scale);
  for (double v : ckpt.stats.mean) put_f64(out, v);
  for (double v : ckpt.stats.stddev) put_f64(out, v);
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Cursor cur{bytes};
  for (char ch : kCheckpointMagic)
    if (static_cast<char>(cur.byte()) != ch) throw std::runtime_error("checkpoint: bad magic");
  if (cur.u32() != 1) throw std::runtime_error("checkpoint: unsupported version");
  Checkpoint ckpt;
  RdnConfig& c = ckpt.config;
  c.growth = static_cast<int>(cur.u32());
  c.layers = static_cast<int>(cur.u32());
  c.aps = static_cast<int>(cur.u32());
  c.users = static_cast<int>(cur.u32());
  c.pilots = static_cast<int>(cur.u32());
  const auto inner = cur.byte();
  const auto output = cur.byte();
  if (inner > 1 || output > 1) throw std::runtime_error("checkpoint: unknown activation");
  c.inner = static_cast<Activation>(inner);
  c.output = static_cast<OutputActivation>(output);
  ckpt.params = zero_parameters(c);
  ckpt.params.for_each([&](Tensor& t) {
    for (double& v : t.data) v = cur.f64();
  });
  ckpt.stats.pov_scale = cur.f64();
  ckpt.stats.mean.resize(usz(c.aps));
  ckpt.stats.stddev.resize(usz(c.aps));
  for (double& v : ckpt.stats.mean) v = cur.f64();
  for (double& v : ckpt.stats.stddev) v = cur.f64();
  if (cur.pos != bytes.size()) throw std::runtime_error("checkpoint: trailing bytes");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

Prediction refine_powers(std::vector<double> powers, const NetworkRealization& realization,
                         int coherence) {
  const QuadraticForms forms = build_quadratic_forms(realization);
  Prediction out;
  out.filters = optimal_filters(powers, forms, realization.rho);
  const SinrCoefficients coeffs = sinr_coefficients(out.filters, forms, realization.rho);
  out.rates = rates(powers, coeffs);
  out.net_rates = net_rates(out.rates, realization.pilots, coherence);
  out.powers = std::move(powers);
  return out;
}

Prediction predict_and_refine(const Checkpoint& ckpt, const NetworkRealization& realization,
                              int coherence) {
  const RdnConfig& c = ckpt.config;
  if (realization.aps() != c.aps || realization.users() != c.users)
    throw std::invalid_argument("predict_and_refine: realization shape differs from model");
  Matrix in = build_input(realization);
  apply_normalization(ckpt.stats, in);
  return refine_powers(forward(c, ckpt.params, in), realization, coherence);
}

}  // namespace cfpf
