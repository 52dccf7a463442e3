#include "ohio/config.hpp"

#include <cstdio>
#include <cstdlib>

#include "ohio/dataset_io.hpp"

namespace ohio {

using nlohmann::json;

namespace {

json build_defaults() {
  return json::parse(R"({
  "seed": 0,
  "env": {
    "kind": "linear",
    "linear": {"dt": 0.5, "noise_std": 0.0, "goal_low": -5.0, "goal_high": 5.0,
               "episode_length": 40, "action_bound": 100.0},
    "point_mass": {"dt": 0.5, "kappa": 0.05, "noise_std": 0.0, "goal_low": -5.0, "goal_high": 5.0,
                   "episode_length": 40, "action_bound": 100.0},
    "supply_chain": {"preset": "1w3s", "strict": true, "episode_length": 30, "forecast_noise": 0.1},
    "routing": {"stations": 4, "fleet": 20, "episode_length": 30, "seasonality": 0.5, "forecast_noise": 0.1}
  },
  "lowlevel": {"q_diag": [], "r_weight": 0.2, "t_abs": 5},
  "policy": {
    "kind": "hierarchical_expert",
    "episodes": 250,
    "exploration_noise": 0.0,
    "random_action_scale": 1.0,
    "store_levels": [],
    "warehouse_level": -1.0,
    "state_only": false,
    "log_rewards": true
  },
  "relabel": {
    "method": "analytic_horizon",
    "network_method": "flow_balance",
    "baseline": "ohio",
    "reward_source": "observed",
    "loss_threshold": 0.2,
    "overlap": false,
    "threads": 0,
    "lr": 0.01,
    "max_steps": 10000,
    "cem_samples": 50,
    "regularizer_weight": 0.0,
    "cem_fallback": true
  },
  "learn": {
    "algorithm": "bc",
    "lr": 0.001,
    "batch": 100,
    "gamma": 0.97,
    "expectile": 0.9,
    "beta": 3.0,
    "epochs": 200,
    "weight_clip": 100.0,
    "hidden": [64, 64],
    "value_sweeps": 20,
    "value_epochs": 10
  },
  "eval": {"episodes": 50, "seed": 100000, "reference": null, "reference_policy": "default"},
  "paths": {"raw": "raw.jsonl", "relabeled": "relabeled.jsonl", "model": "model.json",
            "results": "results.json", "table": ""}
})");
}

bool compatible(const json& def, const json& val) {
  if (def.is_null()) return val.is_null() || val.is_number();
  if (def.is_number()) return val.is_number();
  if (def.is_array()) return val.is_array();
  return def.type() == val.type();
}

void merge_into(json& dst, const json& def, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) fail(ErrorCode::InvalidConfig, "section \"" + prefix + "\" must be an object");
  for (const auto& [key, val] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!def.contains(key)) fail(ErrorCode::InvalidConfig, "unknown config key \"" + path + "\"");
    if (def[key].is_object()) {
      merge_into(dst[key], def[key], val, path);
    } else {
      if (!compatible(def[key], val))
        fail(ErrorCode::InvalidConfig, "config key \"" + path + "\" expects " + def[key].type_name() + ", got " +
                                           val.type_name());
      dst[key] = val;
    }
  }
}

template <class T>
T get(const json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string(section) + "." + key + ": " + e.what());
  }
}

Vec to_vec(const json& arr) {
  const auto xs = arr.get<std::vector<double>>();
  return Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

// Turns enum-parsing failures into configuration errors naming the key.
template <class F>
auto parse_enum(const std::string& key, F f) {
  try {
    return f();
  } catch (const Error& e) {
    fail(ErrorCode::InvalidConfig, key + ": " + e.message());
  }
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

const json& RunConfig::defaults() {
  static const json d = build_defaults();
  return d;
}

RunConfig::RunConfig() : tree_(defaults()) {}

RunConfig RunConfig::load(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::pair<std::string, std::string>>& overrides, bool use_env_seed) {
  RunConfig cfg;
  if (file) {
    json patch;
    try {
      patch = json::parse(read_text_file(*file));
    } catch (const json::parse_error& e) {
      fail(ErrorCode::InvalidConfig, file->string() + ": " + e.what());
    }
    cfg.merge(patch);
  }
  if (use_env_seed) {
    if (const char* env = std::getenv("OHIO_SEED"); env && *env) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (*end != '\0' || env[0] == '-') fail(ErrorCode::InvalidConfig, std::string("OHIO_SEED is not an unsigned integer: ") + env);
      cfg.tree_["seed"] = v;
    }
  }
  for (const auto& [key, value] : overrides) cfg.set(key, value);
  return cfg;
}

void RunConfig::merge(const json& patch) { merge_into(tree_, defaults(), patch, ""); }

void RunConfig::set(const std::string& dotted_key, const std::string& value) {
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }
  json patch = parsed;
  std::string rest = dotted_key;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
    parts.push_back(rest.substr(0, pos));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  merge(patch);
}

std::uint64_t RunConfig::seed() const {
  if (!tree_["seed"].is_number_unsigned() && !(tree_["seed"].is_number_integer() && tree_["seed"].get<std::int64_t>() >= 0))
    fail(ErrorCode::InvalidConfig, "seed must be a nonnegative integer");
  return tree_["seed"].get<std::uint64_t>();
}

EnvKind RunConfig::env_kind() const {
  return parse_enum("env.kind", [&] { return env_kind_from_string(get<std::string>(tree_, "env", "kind")); });
}

std::unique_ptr<Env> RunConfig::make_env() const {
  const json& env = tree_["env"];
  switch (env_kind()) {
    case EnvKind::Linear: {
      const json& j = env["linear"];
      LinearEnvConfig c;
      c.dyn = double_integrator(1, j["dt"].get<double>());
      c.noise_std = j["noise_std"].get<double>();
      c.goal_low = j["goal_low"].get<double>();
      c.goal_high = j["goal_high"].get<double>();
      c.episode_length = j["episode_length"].get<int>();
      c.action_bound = j["action_bound"].get<double>();
      return std::make_unique<LinearEnv>(c);
    }
    case EnvKind::PointMass: {
      const json& j = env["point_mass"];
      PointMassConfig c;
      c.dt = j["dt"].get<double>();
      c.kappa = j["kappa"].get<double>();
      c.noise_std = j["noise_std"].get<double>();
      c.goal_low = j["goal_low"].get<double>();
      c.goal_high = j["goal_high"].get<double>();
      c.episode_length = j["episode_length"].get<int>();
      c.action_bound = j["action_bound"].get<double>();
      return std::make_unique<PointMassEnv>(c);
    }
    case EnvKind::SupplyChain: {
      const json& j = env["supply_chain"];
      const std::string preset = j["preset"].get<std::string>();
      SupplyChainConfig c;
      if (preset == "1w3s") c = SupplyChainConfig::one_warehouse_three_stores();
      else if (preset == "1w10s") c = SupplyChainConfig::one_warehouse_ten_stores();
      else fail(ErrorCode::InvalidConfig, "env.supply_chain.preset must be 1w3s or 1w10s, got " + preset);
      c.strict = j["strict"].get<bool>();
      c.episode_length = j["episode_length"].get<int>();
      c.forecast_noise = j["forecast_noise"].get<double>();
      return std::make_unique<SupplyChainEnv>(c);
    }
    case EnvKind::Routing: {
      const json& j = env["routing"];
      RoutingConfig c;
      c.stations = j["stations"].get<int>();
      c.fleet = j["fleet"].get<int>();
      c.episode_length = j["episode_length"].get<int>();
      c.seasonality = j["seasonality"].get<double>();
      c.forecast_noise = j["forecast_noise"].get<double>();
      return std::make_unique<RoutingEnv>(c);
    }
  }
  fail(ErrorCode::InvalidConfig, "unsupported env kind");
}

LowLevelSpec RunConfig::low_level() const {
  LowLevelSpec s;
  s.q_diag = to_vec(tree_["lowlevel"]["q_diag"]);
  s.r_weight = get<double>(tree_, "lowlevel", "r_weight");
  s.t_abs = get<int>(tree_, "lowlevel", "t_abs");
  return s;
}

PolicyKind RunConfig::policy_kind() const {
  return parse_enum("policy.kind", [&] { return policy_kind_from_string(get<std::string>(tree_, "policy", "kind")); });
}

PolicyParams RunConfig::policy_params() const {
  PolicyParams p;
  p.exploration_noise = get<double>(tree_, "policy", "exploration_noise");
  p.random_action_scale = get<double>(tree_, "policy", "random_action_scale");
  p.store_levels = to_vec(tree_["policy"]["store_levels"]);
  p.warehouse_level = get<double>(tree_, "policy", "warehouse_level");
  return p;
}

RelabelConfig RunConfig::relabel() const {
  const json& j = tree_["relabel"];
  RelabelConfig c;
  c.inversion.method = parse_enum("relabel.method", [&] { return inversion_method_from_string(j["method"].get<std::string>()); });
  c.inversion.lr = j["lr"].get<double>();
  c.inversion.max_steps = j["max_steps"].get<int>();
  c.inversion.cem_samples = j["cem_samples"].get<int>();
  c.inversion.regularizer_weight = j["regularizer_weight"].get<double>();
  c.inversion.cem_fallback = j["cem_fallback"].get<bool>();
  c.loss_threshold = j["loss_threshold"].get<double>();
  c.inversion.loss_threshold = c.loss_threshold;
  c.t_abs = get<int>(tree_, "lowlevel", "t_abs");
  c.network_method = parse_enum("relabel.network_method", [&] { return network_inverse_from_string(j["network_method"].get<std::string>()); });
  c.baseline = parse_enum("relabel.baseline", [&] { return relabel_baseline_from_string(j["baseline"].get<std::string>()); });
  c.reward_source = parse_enum("relabel.reward_source", [&] { return reward_source_from_string(j["reward_source"].get<std::string>()); });
  c.overlap = j["overlap"].get<bool>();
  c.threads = j["threads"].get<int>();
  c.validate();
  return c;
}

LearnerConfig RunConfig::learner() const {
  const json& j = tree_["learn"];
  LearnerConfig c;
  c.algorithm = parse_enum("learn.algorithm", [&] { return algorithm_from_string(j["algorithm"].get<std::string>()); });
  c.lr = j["lr"].get<double>();
  c.batch = j["batch"].get<int>();
  c.gamma = j["gamma"].get<double>();
  c.expectile = j["expectile"].get<double>();
  c.beta = j["beta"].get<double>();
  c.epochs = j["epochs"].get<int>();
  c.weight_clip = j["weight_clip"].get<double>();
  c.hidden = j["hidden"].get<std::vector<int>>();
  c.value_sweeps = j["value_sweeps"].get<int>();
  c.value_epochs = j["value_epochs"].get<int>();
  c.seed = seed();
  c.validate();
  return c;
}

std::string RunConfig::hash() const {
  json canon = tree_;
  canon.erase("paths");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canon.dump())));
  return buf;
}

}  // namespace ohio
