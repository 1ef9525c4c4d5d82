#include "cfpf/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cfpf {
namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

// Reads keys out of one JSON object, remembering which ones were consumed
// so leftovers can be reported.
class Section {
 public:
  Section(const json& parent, const std::string& name) : name_(name) {
    if (!parent.contains(name)) return;
    obj_ = &parent.at(name);
    if (!obj_->is_object()) throw std::invalid_argument("config: '" + name + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (obj_ == nullptr || !obj_->contains(key)) return;
    const json& v = obj_->at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        if constexpr (std::is_unsigned_v<T>)
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
            throw std::invalid_argument("expected a nonnegative integer");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      throw std::invalid_argument("config: " + name_ + "." + key + ": " + e.what());
    }
  }

  void finish() const {
    if (obj_ == nullptr) return;
    for (const auto& [k, _] : obj_->items())
      if (!seen_.count(k)) throw std::invalid_argument("config: unknown key " + name_ + "." + k);
  }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string> seen_;
};

template <typename E>
E parse_enum(const std::string& where, const std::string& value,
             std::initializer_list<std::pair<const char*, E>> table) {
  for (const auto& [name, e] : table)
    if (value == name) return e;
  throw std::invalid_argument("config: " + where + ": unrecognized value '" + value + "'");
}

const char* pilot_mode_name(PilotAssignment p) {
  return p == PilotAssignment::kUniform ? "uniform" : "orthogonal_first";
}
const char* encoding_name(FeatureEncoding e) { return e == FeatureEncoding::kDb ? "db" : "linear"; }
const char* inner_name(Activation a) { return a == Activation::kTanh ? "tanh" : "relu"; }
const char* output_name(OutputActivation a) {
  return a == OutputActivation::kSigmoid ? "sigmoid" : "tanh_rescaled";
}

}  // namespace

void RunConfig::validate() const {
  network.validate();
  solver.validate();
  model.validate();
  train.validate();
  if (dataset.count == 0) throw std::invalid_argument("config: dataset.count must be >= 1");
  if (dataset.train_count == 0 || dataset.val_count == 0)
    throw std::invalid_argument("config: dataset.train_count and val_count must be >= 1");
}

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw std::invalid_argument("config: top level must be an object");
  static const std::set<std::string> kTop = {"seed",  "network", "solver", "model",
                                             "train", "dataset", "paths"};
  for (const auto& [k, _] : root.items())
    if (!kTop.count(k)) throw std::invalid_argument("config: unknown key " + k);

  RunConfig c;
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned())
      throw std::invalid_argument("config: seed must be a nonnegative integer");
    c.seed = root["seed"].get<std::uint64_t>();
  }

  {
    Section s(root, "network");
    auto& n = c.network;
    std::string mode = pilot_mode_name(n.pilot_assignment);
    s.read("aps", n.aps);
    s.read("users", n.users);
    s.read("pilots", n.pilots);
    s.read("area_km", n.area_km);
    s.read("d1_km", n.d1_km);
    s.read("d0_km", n.d0_km);
    s.read("path_loss_db", n.path_loss_db);
    s.read("shadow_std_db", n.shadow_std_db);
    s.read("pilot_power_mw", n.pilot_power_mw);
    s.read("data_power_mw", n.data_power_mw);
    s.read("noise_dbm", n.noise_dbm);
    s.read("noise_figure_db", n.noise_figure_db);
    s.read("coherence", n.coherence);
    s.read("pilot_assignment", mode);
    s.finish();
    n.pilot_assignment =
        parse_enum<PilotAssignment>("network.pilot_assignment", mode,
                                    {{"uniform", PilotAssignment::kUniform},
                                     {"orthogonal_first", PilotAssignment::kOrthogonalFirst}});
  }
  {
    Section s(root, "solver");
    auto& o = c.solver;
    s.read("epsilon", o.epsilon);
    s.read("max_outer", o.max_outer);
    s.read("gp_max_iter", o.gp_max_iter);
    s.read("armijo_sigma", o.armijo_sigma);
    s.read("armijo_shrink", o.armijo_shrink);
    s.read("initial_step", o.initial_step);
    s.read("p_min", o.p_min);
    s.finish();
  }
  {
    Section s(root, "model");
    auto& m = c.model;
    std::string inner = inner_name(m.inner);
    std::string output = output_name(m.output);
    s.read("growth", m.growth);
    s.read("layers", m.layers);
    s.read("inner_activation", inner);
    s.read("output_activation", output);
    s.finish();
    m.inner = parse_enum<Activation>("model.inner_activation", inner,
                                     {{"tanh", Activation::kTanh}, {"relu", Activation::kRelu}});
    m.output = parse_enum<OutputActivation>(
        "model.output_activation", output,
        {{"sigmoid", OutputActivation::kSigmoid},
         {"tanh_rescaled", OutputActivation::kTanhRescaled}});
  }
  {
    Section s(root, "train");
    auto& t = c.train;
    s.read("epochs", t.epochs);
    s.read("batch_size", t.batch_size);
    s.read("learning_rate", t.learning_rate);
    s.read("lr_drop_factor", t.lr_drop_factor);
    s.read("lr_drop_period", t.lr_drop_period);
    s.read("adam_beta1", t.adam.beta1);
    s.read("adam_beta2", t.adam.beta2);
    s.read("adam_epsilon", t.adam.epsilon);
    s.read("seed", t.seed);
    s.finish();
  }
  {
    Section s(root, "dataset");
    auto& d = c.dataset;
    std::string enc = encoding_name(d.encoding);
    s.read("count", d.count);
    s.read("feature_encoding", enc);
    s.read("train_count", d.train_count);
    s.read("val_count", d.val_count);
    s.read("test_count", d.test_count);
    s.finish();
    d.encoding = parse_enum<FeatureEncoding>(
        "dataset.feature_encoding", enc,
        {{"db", FeatureEncoding::kDb}, {"linear", FeatureEncoding::kLinear}});
  }
  {
    Section s(root, "paths");
    s.read("data", c.paths.data);
    s.read("checkpoint", c.paths.checkpoint);
    s.read("out", c.paths.out);
    s.finish();
  }

  c.model.aps = c.network.aps;
  c.model.users = c.network.users;
  c.model.pilots = c.network.pilots;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string to_json(const RunConfig& c) {
  const auto& n = c.network;
  const auto& o = c.solver;
  const auto& m = c.model;
  const auto& t = c.train;
  const auto& d = c.dataset;
  ojson j;
  j["seed"] = c.seed;
  j["network"] = {{"aps", n.aps},
                  {"users", n.users},
                  {"pilots", n.pilots},
                  {"area_km", n.area_km},
                  {"d1_km", n.d1_km},
                  {"d0_km", n.d0_km},
                  {"path_loss_db", n.path_loss_db},
                  {"shadow_std_db", n.shadow_std_db},
                  {"pilot_power_mw", n.pilot_power_mw},
                  {"data_power_mw", n.data_power_mw},
                  {"noise_dbm", n.noise_dbm},
                  {"noise_figure_db", n.noise_figure_db},
                  {"coherence", n.coherence},
                  {"pilot_assignment", pilot_mode_name(n.pilot_assignment)}};
  j["solver"] = {{"epsilon", o.epsilon},
                 {"max_outer", o.max_outer},
                 {"gp_max_iter", o.gp_max_iter},
                 {"armijo_sigma", o.armijo_sigma},
                 {"armijo_shrink", o.armijo_shrink},
                 {"initial_step", o.initial_step},
                 {"p_min", o.p_min}};
  j["model"] = {{"growth", m.growth},
                {"layers", m.layers},
                {"inner_activation", inner_name(m.inner)},
                {"output_activation", output_name(m.output)}};
  j["train"] = {{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"lr_drop_factor", t.lr_drop_factor},
                {"lr_drop_period", t.lr_drop_period},
                {"adam_beta1", t.adam.beta1},
                {"adam_beta2", t.adam.beta2},
                {"adam_epsilon", t.adam.epsilon},
                {"seed", t.seed}};
  j["dataset"] = {{"count", d.count},
                  {"feature_encoding", encoding_name(d.encoding)},
                  {"train_count", d.train_count},
                  {"val_count", d.val_count},
                  {"test_count", d.test_count}};
  j["paths"] = {{"data", c.paths.data}, {"checkpoint", c.paths.checkpoint}, {"out", c.paths.out}};
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cfpf
