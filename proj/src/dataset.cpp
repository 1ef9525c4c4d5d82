#include "cfpf/dataset.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace cfpf {
namespace {

constexpr char kMagic[4] = {'C', 'F', 'P', 'F'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4 + 8 + 1 + 8;

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  template <typename T>
  void le(T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(buf, sizeof(T));
  }
  void f64(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite value");
    le(std::bit_cast<std::uint64_t>(v));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}
  void bytes(void* p, std::size_t n) {
    if (pos_ + n > in_.size()) throw std::runtime_error("dataset: truncated file");
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T le() {
    unsigned char buf[sizeof(T)];
    bytes(buf, sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
  }
  double f64() {
    const double v = std::bit_cast<double>(le<std::uint64_t>());
    if (!std::isfinite(v)) throw std::runtime_error("dataset: non-finite value in file");
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

Matrix build_input(const NetworkRealization& realization) {
  const auto m_count = static_cast<std::size_t>(realization.aps());
  const auto k_count = static_cast<std::size_t>(realization.users());
  Matrix in(k_count, m_count + 1);
  for (std::size_t k = 0; k < k_count; ++k) {
    in(k, 0) = static_cast<double>(realization.pilot[k]);
    for (std::size_t m = 0; m < m_count; ++m)
      in(k, m + 1) = 10.0 * std::log10(realization.beta(m, k));
  }
  return in;
}

Matrix sample_input(const Sample& sample, FeatureEncoding encoding) {
  const std::size_t k_count = sample.fading.rows();
  const std::size_t m_count = sample.fading.cols();
  Matrix in(k_count, m_count + 1);
  for (std::size_t k = 0; k < k_count; ++k) {
    in(k, 0) = static_cast<double>(sample.pilot[k]);
    for (std::size_t m = 0; m < m_count; ++m) {
      const double v = sample.fading(k, m);
      in(k, m + 1) = encoding == FeatureEncoding::kDb ? v : 10.0 * std::log10(v);
    }
  }
  return in;
}

Sample make_sample(const NetworkRealization& realization, const SolverResult& result,
                   FeatureEncoding encoding) {
  const auto m_count = static_cast<std::size_t>(realization.aps());
  const auto k_count = static_cast<std::size_t>(realization.users());
  Sample s;
  s.pilot.assign(realization.pilot.begin(), realization.pilot.end());
  s.fading = Matrix(k_count, m_count);
  for (std::size_t k = 0; k < k_count; ++k)
    for (std::size_t m = 0; m < m_count; ++m) {
      const double b = realization.beta(m, k);
      s.fading(k, m) = encoding == FeatureEncoding::kDb ? 10.0 * std::log10(b) : b;
    }
  s.label = result.powers;
  s.objective = result.objective;
  s.seed = realization.seed;
  return s;
}

NetworkRealization realization_from_sample(const NetworkConfig& config, const Sample& sample,
                                           FeatureEncoding encoding) {
  const std::size_t k_count = sample.fading.rows();
  const std::size_t m_count = sample.fading.cols();
  Matrix beta(m_count, k_count);
  for (std::size_t k = 0; k < k_count; ++k)
    for (std::size_t m = 0; m < m_count; ++m) {
      const double v = sample.fading(k, m);
      beta(m, k) = encoding == FeatureEncoding::kDb ? std::pow(10.0, v / 10.0) : v;
    }
  std::vector<int> pilot(sample.pilot.begin(), sample.pilot.end());
  return realization_from_fading(config, std::move(beta), std::move(pilot), sample.seed);
}

GeneratedDataset generate(const NetworkConfig& config, std::size_t count,
                          std::uint64_t master_seed, const SolverOptions& options, int jobs,
                          FeatureEncoding encoding) {
  if (count == 0) throw std::invalid_argument("generate: count must be >= 1");
  config.validate();
  options.validate();

  GeneratedDataset out;
  out.file.header.aps = static_cast<std::uint32_t>(config.aps);
  out.file.header.users = static_cast<std::uint32_t>(config.users);
  out.file.header.pilots = static_cast<std::uint32_t>(config.pilots);
  out.file.header.count = count;
  out.file.header.encoding = encoding;
  out.file.header.master_seed = master_seed;
  out.file.samples.resize(count);
  out.meta.resize(count);

  // Workers claim indices; every result lands in its own slot, so the
  // container order is the index order whatever the interleaving.
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    try {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        const NetworkRealization r = drop_network(config, mix_seed(master_seed, i));
        SolverResult result = solve_alternating(r, options);
        out.file.samples[i] = make_sample(r, result, encoding);
        out.meta[i] = {result.converged, result.outer_iterations, result.wall_seconds,
                       std::move(result.rates)};
      }
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };
  const int n_threads = std::max(1, jobs);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::string serialize(const DatasetFile& file) {
  const auto& h = file.header;
  if (h.count != file.samples.size())
    throw std::invalid_argument("serialize: header count does not match samples");
  ByteWriter w;
  w.bytes(kMagic, 4);
  w.le<std::uint32_t>(h.version);
  w.le<std::uint32_t>(h.aps);
  w.le<std::uint32_t>(h.users);
  w.le<std::uint32_t>(h.pilots);
  w.le<std::uint64_t>(h.count);
  w.le<std::uint8_t>(static_cast<std::uint8_t>(h.encoding));
  w.le<std::uint64_t>(h.master_seed);
  for (const auto& s : file.samples) {
    if (s.pilot.size() != h.users || s.label.size() != h.users || s.fading.rows() != h.users ||
        s.fading.cols() != h.aps)
      throw std::invalid_argument("serialize: sample shape does not match header");
    for (auto p : s.pilot) w.le<std::uint32_t>(p);
    for (double v : s.fading.data()) w.f64(v);
    for (double v : s.label) w.f64(v);
    w.f64(s.objective);
    w.le<std::uint64_t>(s.seed);
  }
  return w.take();
}

DatasetFile deserialize(std::string_view bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("dataset: bad magic");
  DatasetFile file;
  auto& h = file.header;
  h.version = r.le<std::uint32_t>();
  if (h.version != 1) throw std::runtime_error("dataset: unsupported version");
  h.aps = r.le<std::uint32_t>();
  h.users = r.le<std::uint32_t>();
  h.pilots = r.le<std::uint32_t>();
  h.count = r.le<std::uint64_t>();
  const auto enc = r.le<std::uint8_t>();
  if (enc > 1) throw std::runtime_error("dataset: unknown feature encoding");
  h.encoding = static_cast<FeatureEncoding>(enc);
  h.master_seed = r.le<std::uint64_t>();

  const std::size_t record_bytes = 4 * h.users + 8 * (std::size_t{h.users} * h.aps) +
                                   8 * h.users + 8 + 8;
  if (bytes.size() != kHeaderBytes + record_bytes * h.count)
    throw std::runtime_error("dataset: record count does not match file size");
  file.samples.resize(h.count);
  for (auto& s : file.samples) {
    s.pilot.resize(h.users);
    for (auto& p : s.pilot) p = r.le<std::uint32_t>();
    s.fading = Matrix(h.users, h.aps);
    for (double& v : s.fading.data()) v = r.f64();
    s.label.resize(h.users);
    for (double& v : s.label) v = r.f64();
    s.objective = r.f64();
    s.seed = r.le<std::uint64_t>();
  }
  return file;
}

void write_dataset(const std::filesystem::path& path, const DatasetFile& file) {
  const std::string bytes = serialize(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

DatasetFile read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

Split split(std::size_t count, std::size_t train_n, std::size_t val_n, std::size_t test_n) {
  if (train_n + val_n + test_n > count)
    throw std::invalid_argument("split: requested more samples than available");
  Split s;
  std::size_t i = 0;
  for (; i < train_n; ++i) s.train.push_back(i);
  for (; i < train_n + val_n; ++i) s.val.push_back(i);
  for (; i < train_n + val_n + test_n; ++i) s.test.push_back(i);
  return s;
}

NormalizationStats fit_normalization(std::span<const Matrix> inputs, int pilots) {
  if (inputs.empty()) throw std::invalid_argument("fit_normalization: empty training split");
  if (pilots < 1) throw std::invalid_argument("fit_normalization: pilots must be >= 1");
  const std::size_t cols = inputs.front().cols();
  const std::size_t features = cols - 1;
  NormalizationStats stats;
  stats.pov_scale = 1.0 / static_cast<double>(pilots);
  stats.mean.assign(features, 0.0);
  stats.stddev.assign(features, 0.0);
  double n = 0.0;
  for (const auto& in : inputs) {
    if (in.cols() != cols) throw std::invalid_argument("fit_normalization: shape mismatch");
    for (std::size_t k = 0; k < in.rows(); ++k)
      for (std::size_t m = 0; m < features; ++m) stats.mean[m] += in(k, m + 1);
    n += static_cast<double>(in.rows());
  }
  for (double& v : stats.mean) v /= n;
  for (const auto& in : inputs)
    for (std::size_t k = 0; k < in.rows(); ++k)
      for (std::size_t m = 0; m < features; ++m) {
        const double d = in(k, m + 1) - stats.mean[m];
        stats.stddev[m] += d * d;
      }
  for (std::size_t m = 0; m < features; ++m) {
    stats.stddev[m] = std::sqrt(stats.stddev[m] / n);
    if (!(stats.stddev[m] > 0.0))
      throw std::invalid_argument("fit_normalization: zero-variance feature column " +
                                  std::to_string(m));
  }
  return stats;
}

NormalizationStats fit_normalization(const DatasetFile& file,
                                     std::span<const std::size_t> train) {
  std::vector<Matrix> inputs;
  inputs.reserve(train.size());
  for (std::size_t i : train) {
    if (i >= file.samples.size()) throw std::out_of_range("fit_normalization: bad index");
    inputs.push_back(sample_input(file.samples[i], file.header.encoding));
  }
  return fit_normalization(inputs, static_cast<int>(file.header.pilots));
}

void apply_normalization(const NormalizationStats& stats, Matrix& input) {
  if (input.cols() != stats.mean.size() + 1)
    throw std::invalid_argument("apply_normalization: shape mismatch");
  for (std::size_t k = 0; k < input.rows(); ++k) {
    input(k, 0) *= stats.pov_scale;
    for (std::size_t m = 0; m < stats.mean.size(); ++m)
      input(k, m + 1) = (input(k, m + 1) - stats.mean[m]) / stats.stddev[m];
  }
}

void invert_normalization(const NormalizationStats& stats, Matrix& input) {
  if (input.cols() != stats.mean.size() + 1)
    throw std::invalid_argument("invert_normalization: shape mismatch");
  for (std::size_t k = 0; k < input.rows(); ++k) {
    input(k, 0) /= stats.pov_scale;
    for (std::size_t m = 0; m < stats.mean.size(); ++m)
      input(k, m + 1) = input(k, m + 1) * stats.stddev[m] + stats.mean[m];
  }
}

}  // namespace cfpf
