#include "ohio/pipeline.hpp"

#include <fstream>

#include <json.hpp>

#include "ohio/dataset_io.hpp"

namespace ohio {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path sibling(const fs::path& p, const std::string& suffix) {
  fs::path out = p;
  out.replace_extension();
  return out.string() + suffix;
}


void check_dims(std::size_t index, Eigen::Index got, int want, const char* what) {
  if (got != want)
    fail(ErrorCode::DimMismatch, "record " + std::to_string(index) + ": " + what + " has dimension " +
                                     std::to_string(got) + ", env expects " + std::to_string(want));
}

}  // namespace

fs::path manifest_path(const fs::path& dataset) { return sibling(dataset, ".manifest.json"); }
fs::path report_path(const fs::path& dataset) { return sibling(dataset, ".report.json"); }
fs::path curve_path(const fs::path& model) { return sibling(model, ".curve.csv"); }

std::vector<Transition> collect_dataset(Env& env, PolicyKind kind, const PolicyParams& params, const LowLevelSpec& spec,
                                        std::uint64_t seed, int episodes) {
  const SeededRng root(seed);
  std::vector<Transition> out;
  for (int ep = 0; ep < episodes; ++ep) {
    auto tr = collect_episode(env, kind, params, spec, root.derive(static_cast<std::uint64_t>(ep)).seed(), ep);
    out.insert(out.end(), std::make_move_iterator(tr.begin()), std::make_move_iterator(tr.end()));
  }
  return out;
}

HighPolicy reference_policy(const RunConfig& config, const Env& env) {
  std::string name = config.tree()["eval"]["reference_policy"].get<std::string>();
  if (name == "default") {
    switch (env.kind()) {
      case EnvKind::Linear:
      case EnvKind::PointMass: name = "hierarchical_expert"; break;
      case EnvKind::SupplyChain: name = "order_up_to"; break;
      case EnvKind::Routing: name = "proportional_heuristic"; break;
    }
  }
  PolicyKind kind;
  try {
    kind = policy_kind_from_string(name);
  } catch (const Error& e) {
    fail(ErrorCode::InvalidConfig, "eval.reference_policy: " + e.message());
  }
  PolicyParams params = config.policy_params();
  params.exploration_noise = 0.0;
  return make_behavior_policy(kind, env, params);
}

CollectSummary cmd_collect(const RunConfig& config, const fs::path& out) {
  auto env = config.make_env();
  const int episodes = config.tree()["policy"]["episodes"].get<int>();
  if (episodes <= 0) fail(ErrorCode::InvalidConfig, "policy.episodes must be positive");
  const bool state_only = config.tree()["policy"]["state_only"].get<bool>();
  const bool log_rewards = config.tree()["policy"]["log_rewards"].get<bool>();

  auto data = collect_dataset(*env, config.policy_kind(), config.policy_params(), config.low_level(), config.seed(),
                              episodes);
  for (auto& tr : data) {
    if (state_only) tr.a.reset();
    if (!log_rewards) tr.r.reset();
  }
  write_raw_jsonl(out, data);

  CollectSummary summary{data.size(), episodes, config.hash()};
  json manifest = {{"format", "ohio-raw"},
                   {"config_hash", summary.config_hash},
                   {"seed", config.seed()},
                   {"env", to_string(env->kind())},
                   {"policy", to_string(config.policy_kind())},
                   {"episodes", episodes},
                   {"records", data.size()},
                   {"state_only", state_only},
                   {"log_rewards", log_rewards}};
  write_text_file(manifest_path(out), manifest.dump(1) + '\n');
  return summary;
}

RelabelOutput cmd_relabel(const RunConfig& config, const fs::path& in, const fs::path& out) {
  const auto raw = read_raw_jsonl(in);
  if (raw.empty()) fail(ErrorCode::EmptyDataset, in.string() + " has no records");
  validate_trajectory(raw);
  auto env = config.make_env();
  check_dims(0, raw.front().s.size(), env->observation_dim(), "s");

  const RelabelConfig rc = config.relabel();
  RelabelOutput result;
  if (const auto* goal_env = dynamic_cast<const GoalEnv*>(env.get()))
    result = relabel_dataset(raw, *goal_env, config.low_level(), rc, config.seed());
  else
    result = relabel_network_dataset(raw, *env, rc);
  write_relabeled_jsonl(out, result.samples);

  const RelabelReport& r = result.report;
  json report = {{"method", r.method},
                 {"baseline", to_string(rc.baseline)},
                 {"windows", r.windows},
                 {"retained", r.retained},
                 {"dropped", r.dropped},
                 {"retention", r.retention()},
                 {"mean_inv_loss", r.mean_inv_loss},
                 {"max_inv_loss", r.max_inv_loss},
                 {"cem_fallbacks", r.cem_fallbacks},
                 {"rank_deficient", r.rank_deficient},
                 {"seconds", r.seconds},
                 {"config_hash", config.hash()},
                 {"seed", config.seed()}};
  write_text_file(report_path(out), report.dump(1) + '\n');
  return result;
}

TrainResult cmd_train(const RunConfig& config, const fs::path& dataset, const fs::path& model_out) {
  const auto data = read_relabeled_jsonl(dataset);
  if (data.empty()) fail(ErrorCode::EmptyDataset, dataset.string() + " has no records");
  auto env = config.make_env();
  for (std::size_t i = 0; i < data.size(); ++i) check_dims(i, data[i].s.size(), env->observation_dim(), "s");

  const LearnerConfig lc = config.learner();
  TrainResult result = train(data, lc);

  save_checkpoint(model_out, result.policy,
                  {std::string(to_string(env->kind())), env->observation_dim(), std::string(to_string(lc.algorithm)),
                   lc.seed, config.hash()});
  const bool awr = lc.algorithm == Algorithm::AWR;
  std::string csv = awr ? "epoch,loss,mean_weight\n" : "epoch,loss\n";
  for (const auto& e : result.curve) {
    csv += std::to_string(e.epoch) + ',' + format_double(e.loss);
    if (awr) csv += ',' + format_double(e.mean_weight);
    csv += '\n';
  }
  write_text_file(curve_path(model_out), csv);
  return result;
}

EvalResult cmd_eval(const RunConfig& config, const EvalRequest& request) {
  auto env = config.make_env();
  const LowLevelSpec spec = config.low_level();
  const json& ev = config.tree()["eval"];
  const int episodes = ev["episodes"].get<int>();
  if (episodes <= 0) fail(ErrorCode::InvalidConfig, "eval.episodes must be positive");
  const auto seed = ev["seed"].get<std::uint64_t>();

  HighPolicy policy;
  std::string label = request.label;
  if (!request.model.empty()) {
    CheckpointMeta meta;
    TrainedPolicy trained = load_checkpoint(request.model, &meta);
    if (meta.env_kind != to_string(env->kind()) || meta.observation_dim != env->observation_dim() ||
        trained.kind != env->high_action_kind())
      fail(ErrorCode::IncompatibleModel, request.model.string() + " was trained for " + meta.env_kind + " with " +
                                             std::to_string(meta.observation_dim) + "-dim observations");
    policy = trained.as_policy();
    if (label.empty()) label = request.model.filename().string();
  } else {
    policy = reference_policy(config, *env);
    if (label.empty()) label = "reference";
  }

  double reference = 0.0;
  if (ev["reference"].is_number()) {
    reference = ev["reference"].get<double>();
  } else {
    reference = evaluate_policy(reference_policy(config, *env), *env, spec, episodes, seed).mean;
  }
  EvalResult result = evaluate_policy(policy, *env, spec, episodes, seed, reference);

  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < episodes; ++i) seeds.push_back(seed + static_cast<std::uint64_t>(i));
  json out = {{"label", label},
              {"env", to_string(env->kind())},
              {"mean", result.mean},
              {"std", result.stddev},
              {"normalized", result.normalized},
              {"reference", result.reference},
              {"episodes", episodes},
              {"seeds", seeds},
              {"returns", result.returns},
              {"config_hash", config.hash()}};
  if (!request.results.empty()) write_text_file(request.results, out.dump(1) + '\n');

  if (!request.table.empty()) {
    const bool fresh = !fs::exists(request.table);
    std::ofstream table(request.table, std::ios::app);
    if (!table) fail(ErrorCode::IoError, "cannot append to " + request.table.string());
    if (fresh) table << "label,mean,std,normalized,episodes\n";
    table << label << ',' << format_double(result.mean) << ',' << format_double(result.stddev) << ','
          << format_double(result.normalized) << ',' << episodes << '\n';
  }
  return result;
}

}  // namespace ohio
