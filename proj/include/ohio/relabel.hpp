#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ohio/envs.hpp"
#include "ohio/inversion.hpp"

namespace ohio {

enum class RewardSource { Observed, Model };
enum class RelabelBaseline { Ohio, ObservedState };
enum class NetworkInverse { FlowBalance, Duality };

std::string_view to_string(RewardSource v);
std::string_view to_string(RelabelBaseline v);
std::string_view to_string(NetworkInverse v);
RewardSource reward_source_from_string(std::string_view s);
RelabelBaseline relabel_baseline_from_string(std::string_view s);
NetworkInverse network_inverse_from_string(std::string_view s);

struct RelabelConfig {
  InversionConfig inversion;
  int t_abs = 5;
  RewardSource reward_source = RewardSource::Observed;
  double loss_threshold = 0.2;
  RelabelBaseline baseline = RelabelBaseline::Ohio;
  bool overlap = false;  // stride 1 instead of t_abs
  NetworkInverse network_method = NetworkInverse::FlowBalance;
  int threads = 0;       // 0: hardware concurrency

  void validate() const;
};

struct RelabelReport {
  std::size_t windows = 0;
  std::size_t retained = 0;
  std::size_t dropped = 0;
  double mean_inv_loss = 0.0;  // over all windows, filtered or not
  double max_inv_loss = 0.0;
  std::size_t cem_fallbacks = 0;
  std::size_t rank_deficient = 0;
  std::string method;
  double seconds = 0.0;

  double retention() const { return windows ? static_cast<double>(retained) / windows : 0.0; }
};

struct RelabelOutput {
  std::vector<RelabeledSample> samples;  // sorted by (episode, t)
  RelabelReport report;
};

/// Goal envs: each window (s_t, ..., s_{t+T_abs}) is inverted to the goal the
/// LQR low level (`spec` costs, horizon T_abs) would need to produce it, using
/// the env's local linear model at every observed state. Windows whose
/// inversion loss exceeds the threshold are dropped; trailing partial
/// windows are discarded.
RelabelOutput relabel_dataset(std::span<const Transition> raw, const GoalEnv& env, const LowLevelSpec& spec,
                              const RelabelConfig& config, std::uint64_t seed);

/// Network envs: every logged step is inverted through the LP low level
/// (flow balance or duality). The observed reward is copied.
RelabelOutput relabel_network_dataset(std::span<const Transition> raw, const Env& env, const RelabelConfig& config);

/// High-level action equivalent to the node targets q_hat (and production
/// w_hat for supply chains) on the snapshot `net`.
HighAction high_action_from_targets(const NetworkProblem& net, const Vec& q_hat, const Vec& w_hat);

}  // namespace ohio
