#pragma once

#include <cstdint>
#include <string>

#include "cfpf/channel_model.hpp"
#include "cfpf/dataset.hpp"
#include "cfpf/pf_solver.hpp"
#include "cfpf/power_rdn.hpp"

namespace cfpf {

struct DatasetOptions {
  std::size_t count = 2400;
  FeatureEncoding encoding = FeatureEncoding::kDb;
  std::size_t train_count = 2000;
  std::size_t val_count = 200;
  std::size_t test_count = 200;
};

struct PathOptions {
  std::string data;
  std::string checkpoint;
  std::string out;
};

// Resolved run configuration. Model geometry (aps, users, pilots) always
// follows the network section.
struct RunConfig {
  std::uint64_t seed = 1;
  NetworkConfig network;
  SolverOptions solver;
  RdnConfig model;
  TrainConfig train;
  DatasetOptions dataset;
  PathOptions paths;

  void validate() const;
};

// Parses a JSON document; missing keys take defaults, unknown keys and
// type mismatches throw std::invalid_argument.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Fully resolved config as pretty-printed JSON (round-trips through
// parse_run_config).
std::string to_json(const RunConfig& config);

// 64-bit FNV-1a of the resolved JSON, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace cfpf
