#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "ohio/config.hpp"

namespace ohio {

// Sibling artifact paths: raw.jsonl -> raw.manifest.json, etc.
std::filesystem::path manifest_path(const std::filesystem::path& dataset);
std::filesystem::path report_path(const std::filesystem::path& dataset);
std::filesystem::path curve_path(const std::filesystem::path& model);

struct CollectSummary {
  std::size_t records = 0;
  int episodes = 0;
  std::string config_hash;
};

/// Episode i runs from reset(SeededRng(seed).derive(i).seed()).
std::vector<Transition> collect_dataset(Env& env, PolicyKind kind, const PolicyParams& params, const LowLevelSpec& spec,
                                        std::uint64_t seed, int episodes);

HighPolicy reference_policy(const RunConfig& config, const Env& env);

CollectSummary cmd_collect(const RunConfig& config, const std::filesystem::path& out);
RelabelOutput cmd_relabel(const RunConfig& config, const std::filesystem::path& in, const std::filesystem::path& out);
TrainResult cmd_train(const RunConfig& config, const std::filesystem::path& dataset, const std::filesystem::path& model_out);

struct EvalRequest {
  std::filesystem::path model;  // empty: evaluate the reference policy itself
  std::filesystem::path results;
  std::filesystem::path table;  // optional CSV, one row appended per call
  std::string label;
};

EvalResult cmd_eval(const RunConfig& config, const EvalRequest& request);

}  // namespace ohio
