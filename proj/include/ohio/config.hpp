#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ohio/learn.hpp"
#include "ohio/relabel.hpp"

namespace ohio {

/// Pipeline configuration. Stored as a JSON tree whose shape is fixed by
/// `RunConfig::defaults()`: a user file may only set keys that exist there,
/// and `--section.key value` overrides address the same dotted paths.
class RunConfig {
 public:
  RunConfig();

  static const nlohmann::json& defaults();

  /// Defaults, then the file (if given), then the OHIO_SEED environment
  /// variable if `use_env_seed`, then overrides in order.
  static RunConfig load(const std::optional<std::filesystem::path>& file,
                        const std::vector<std::pair<std::string, std::string>>& overrides = {},
                        bool use_env_seed = true);

  void merge(const nlohmann::json& patch);
  // `value` is parsed as JSON when possible and as a bare string otherwise.
  void set(const std::string& dotted_key, const std::string& value);

  const nlohmann::json& tree() const { return tree_; }
  std::uint64_t seed() const;

  EnvKind env_kind() const;
  std::unique_ptr<Env> make_env() const;
  LowLevelSpec low_level() const;
  PolicyKind policy_kind() const;
  PolicyParams policy_params() const;
  RelabelConfig relabel() const;
  LearnerConfig learner() const;

  /// FNV-1a 64 of the canonical dump, excluding the paths section.
  std::string hash() const;

 private:
  nlohmann::json tree_;
};

std::uint64_t fnv1a64(std::string_view data);

}  // namespace ohio
