#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "ohio/envs.hpp"

namespace ohio {

enum class PolicyKind {
  HierarchicalExpert,
  DirichletDispersion,
  ProportionalHeuristic,
  OrderUpTo,
  RandomLowLevel,
  ObservedStateBaseline,
};

std::string_view to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(std::string_view name);

/// Upper policy: observation of `env` to a high-level action.
using HighPolicy = std::function<HighAction(const Env& env, SeededRng& rng)>;

/// Symmetric Dirichlet(1, ..., 1) draw via normalized unit-rate Gamma samples.
HighAction dirichlet_dispersion(int n, SeededRng& rng);

/// Distribution proportional to the forecast; uniform (with a warning) when
/// the forecast is all zero.
HighAction proportional_heuristic(const Vec& forecast);

/// Elementwise max(0, S - q - in_transit).
Vec order_up_to(const Vec& inventory, const Vec& in_transit, const Vec& levels);

/// Order-up-to rule on a supply-chain snapshot. Store orders use the
/// inventory left after this step's sales; the warehouse produces up to
/// `warehouse_level` counting what remains after shipping. Orders larger
/// than the warehouse stock are scaled down proportionally.
HighAction order_up_to_action(const NetworkProblem& net, const Vec& store_levels, double warehouse_level);

struct PolicyParams {
  double exploration_noise = 0.0;  // goal envs: std of the Gaussian added to the goal
  double random_action_scale = 1.0;  // RandomLowLevel: uniform in +/- scale * action bound
  Vec store_levels;                  // OrderUpTo; empty uses the frozen grid-search optimum
  double warehouse_level = -1.0;     // OrderUpTo; negative uses the production capacity
};

/// Frozen result of the 1W3S order-up-to grid search over {5..20}^3.
Vec default_order_up_to_levels(const SupplyChainConfig& config);

/// Behavior policy of the given kind for `env` (ObservedStateBaseline and
/// RandomLowLevel have no high level and are rejected).
HighPolicy make_behavior_policy(PolicyKind kind, const Env& env, const PolicyParams& params = {});

/// Uniform random primitive action inside the env's bounds.
Vec random_low_level_action(const Env& env, double scale, SeededRng& rng);

/// Runs one episode from reset(seed). RandomLowLevel acts on primitive
/// actions directly; every other kind goes through env_step_hierarchical.
/// Logged transitions never contain the high-level action.
std::vector<Transition> collect_episode(Env& env, PolicyKind kind, const PolicyParams& params, const LowLevelSpec& spec,
                                        std::uint64_t seed, std::int64_t episode);

/// Sum of rewards of one hierarchical episode driven by `policy`.
double run_episode(Env& env, const HighPolicy& policy, const LowLevelSpec& spec, std::uint64_t seed);

struct GridSearchResult {
  Vec best_levels;
  double best_mean = 0.0;
  std::size_t evaluated = 0;
};

/// Exhaustive search of store order-up-to levels (the same candidate set for
/// every store); scores are mean episode reward over `episodes` seeded runs.
GridSearchResult order_up_to_grid_search(const SupplyChainConfig& config, const std::vector<double>& candidates,
                                         int episodes, std::uint64_t seed);

}  // namespace ohio
