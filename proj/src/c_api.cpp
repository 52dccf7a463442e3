#include "ohio/ohio.h"

#include <cstring>
#include <string>

#include "ohio/acceptance.hpp"
#include "ohio/dataset_io.hpp"
#include "ohio/pipeline.hpp"

struct ohio_config {
  ohio::RunConfig cfg;
  std::string hash;
  std::string json;
};

struct ohio_env {
  std::unique_ptr<ohio::Env> env;
};

struct ohio_policy {
  ohio::TrainedPolicy policy;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_error_kind;
ohio_warning_fn g_warning_fn = nullptr;

ohio_status set_error(ohio_status status, std::string kind, std::string message) {
  g_error_kind = std::move(kind);
  g_error = std::move(message);
  return status;
}

template <class F>
ohio_status guarded(F&& f) {
  try {
    f();
    g_error.clear();
    g_error_kind.clear();
    return OHIO_OK;
  } catch (const ohio::Error& e) {
    return set_error(static_cast<ohio_status>(ohio::exit_category(e.code())), std::string(ohio::to_string(e.code())),
                     e.what());
  } catch (const std::bad_alloc&) {
    return set_error(OHIO_ERR_DATA, "OutOfMemory", "out of memory");
  } catch (const std::exception& e) {
    return set_error(OHIO_ERR_DATA, "Internal", e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) ohio::fail(ohio::ErrorCode::Usage, std::string(what) + " must not be NULL");
}

std::string opt(const char* s) { return s ? s : ""; }

void forward_warning(const std::string& message) {
  if (g_warning_fn) g_warning_fn(message.c_str());
}

}  // namespace

extern "C" {

const char* ohio_version(void) { return "1.0.0"; }
const char* ohio_last_error(void) { return g_error.c_str(); }
const char* ohio_last_error_kind(void) { return g_error_kind.c_str(); }

void ohio_set_warning_callback(ohio_warning_fn fn) {
  g_warning_fn = fn;
  ohio::set_warning_handler(fn ? &forward_warning : nullptr);
}

ohio_status ohio_config_new(const char* path, int use_env_seed, ohio_config** out) {
  return guarded([&] {
    require(out != nullptr, "out");
    *out = nullptr;
    std::optional<std::filesystem::path> file;
    if (path && *path) file = path;
    auto handle = std::make_unique<ohio_config>();
    handle->cfg = ohio::RunConfig::load(file, {}, use_env_seed != 0);
    *out = handle.release();
  });
}

void ohio_config_free(ohio_config* cfg) { delete cfg; }

ohio_status ohio_config_set(ohio_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg && key && value, "config, key and value");
    cfg->cfg.set(key, value);
  });
}

ohio_status ohio_config_seed(const ohio_config* cfg, uint64_t* seed) {
  return guarded([&] {
    require(cfg && seed, "config and seed");
    *seed = cfg->cfg.seed();
  });
}

const char* ohio_config_hash(ohio_config* cfg) {
  if (!cfg) return "";
  cfg->hash = cfg->cfg.hash();
  return cfg->hash.c_str();
}

const char* ohio_config_json(ohio_config* cfg) {
  if (!cfg) return "";
  cfg->json = cfg->cfg.tree().dump(2);
  return cfg->json.c_str();
}

ohio_status ohio_collect(const ohio_config* cfg, const char* out_path, size_t* records) {
  return guarded([&] {
    require(cfg && out_path, "config and output path");
    const ohio::CollectSummary s = ohio::cmd_collect(cfg->cfg, out_path);
    if (records) *records = s.records;
  });
}

ohio_status ohio_relabel(const ohio_config* cfg, const char* in_path, const char* out_path,
                         ohio_relabel_summary* summary) {
  return guarded([&] {
    require(cfg && in_path && out_path, "config, input and output paths");
    const ohio::RelabelOutput r = ohio::cmd_relabel(cfg->cfg, in_path, out_path);
    if (summary) *summary = {r.report.windows, r.report.retained, r.report.mean_inv_loss, r.report.max_inv_loss};
  });
}

ohio_status ohio_train(const ohio_config* cfg, const char* dataset_path, const char* model_path, double* final_loss) {
  return guarded([&] {
    require(cfg && dataset_path && model_path, "config, dataset and model paths");
    const ohio::TrainResult r = ohio::cmd_train(cfg->cfg, dataset_path, model_path);
    if (final_loss) *final_loss = r.curve.empty() ? 0.0 : r.curve.back().loss;
  });
}

ohio_status ohio_eval(const ohio_config* cfg, const char* model_path, const char* results_path, const char* table_path,
                      const char* label, ohio_eval_summary* summary) {
  return guarded([&] {
    require(cfg != nullptr, "config");
    const ohio::EvalResult r = ohio::cmd_eval(cfg->cfg, {opt(model_path), opt(results_path), opt(table_path), opt(label)});
    if (summary) *summary = {r.mean, r.stddev, r.normalized, r.reference, static_cast<int>(r.returns.size())};
  });
}

ohio_status ohio_check(uint64_t seed, const int* criteria, size_t count, const char* artifacts, ohio_check_fn on_result,
                       void* user, int* failed) {
  return guarded([&] {
    ohio::AcceptanceOptions options;
    options.seed = seed;
    if (criteria) options.only.assign(criteria, criteria + count);
    for (int id : options.only)
      if (id < 1 || id > ohio::kCriteria) ohio::fail(ohio::ErrorCode::Usage, "no acceptance criterion " + std::to_string(id));
    if (artifacts) options.artifacts = artifacts;
    if (on_result)
      options.on_result = [&](const ohio::CriterionResult& r) {
        on_result(r.id, r.passed ? 1 : 0, ohio::format_result(r).c_str(), user);
      };
    int n_failed = 0;
    for (const auto& r : ohio::run_acceptance(options)) n_failed += !r.passed;
    if (failed) *failed = n_failed;
  });
}

ohio_status ohio_env_new(const ohio_config* cfg, ohio_env** out) {
  return guarded([&] {
    require(cfg && out, "config and out");
    *out = nullptr;
    auto handle = std::make_unique<ohio_env>();
    handle->env = cfg->cfg.make_env();
    *out = handle.release();
  });
}

void ohio_env_free(ohio_env* env) { delete env; }

size_t ohio_env_observation_dim(const ohio_env* env) {
  return env ? static_cast<size_t>(env->env->observation_dim()) : 0;
}

size_t ohio_env_action_dim(const ohio_env* env) { return env ? static_cast<size_t>(env->env->action_dim()) : 0; }

ohio_status ohio_env_reset(ohio_env* env, uint64_t seed, double* obs) {
  return guarded([&] {
    require(env && obs, "env and obs");
    const ohio::Vec o = env->env->reset(seed);
    std::memcpy(obs, o.data(), sizeof(double) * static_cast<size_t>(o.size()));
  });
}

ohio_status ohio_env_step(ohio_env* env, const double* action, size_t action_len, double* obs, double* reward,
                          int* done) {
  return guarded([&] {
    require(env && action && obs, "env, action and obs");
    if (action_len != static_cast<size_t>(env->env->action_dim()))
      ohio::fail(ohio::ErrorCode::DimMismatch, "action has " + std::to_string(action_len) + " entries, env expects " +
                                                   std::to_string(env->env->action_dim()));
    const ohio::StepResult r =
        env->env->step(Eigen::Map<const ohio::Vec>(action, static_cast<Eigen::Index>(action_len)));
    std::memcpy(obs, r.observation.data(), sizeof(double) * static_cast<size_t>(r.observation.size()));
    if (reward) *reward = r.reward;
    if (done) *done = r.done ? 1 : 0;
  });
}

ohio_status ohio_policy_load(const char* path, ohio_policy** out) {
  return guarded([&] {
    require(path && out, "path and out");
    *out = nullptr;
    auto handle = std::make_unique<ohio_policy>();
    handle->policy = ohio::load_checkpoint(path);
    *out = handle.release();
  });
}

void ohio_policy_free(ohio_policy* policy) { delete policy; }

size_t ohio_policy_input_dim(const ohio_policy* policy) {
  return policy ? static_cast<size_t>(policy->policy.net.input_dim()) : 0;
}

size_t ohio_policy_output_dim(const ohio_policy* policy) {
  return policy ? static_cast<size_t>(policy->policy.net.output_dim()) : 0;
}

ohio_status ohio_policy_act(const ohio_policy* policy, const double* obs, size_t obs_len, double* out) {
  return guarded([&] {
    require(policy && obs && out, "policy, obs and out");
    const ohio::HighAction u =
        policy->policy.act(Eigen::Map<const ohio::Vec>(obs, static_cast<Eigen::Index>(obs_len)));
    std::memcpy(out, u.values().data(), sizeof(double) * static_cast<size_t>(u.dim()));
  });
}

}  // extern "C"
