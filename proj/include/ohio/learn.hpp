#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "ohio/mlp.hpp"
#include "ohio/policies.hpp"

namespace ohio {

enum class Algorithm { BC, AWR };

std::string_view to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view name);

struct LearnerConfig {
  Algorithm algorithm = Algorithm::BC;
  double lr = 1e-3;
  int batch = 100;
  double gamma = 0.97;
  double expectile = 0.9;
  double beta = 3.0;  // +inf turns every advantage weight into 1
  int epochs = 200;
  double weight_clip = 100.0;
  std::uint64_t seed = 0;
  std::vector<int> hidden{64, 64};
  int value_sweeps = 20;
  int value_epochs = 10;  // epochs of expectile regression per sweep

  void validate() const;
};

/// Learned upper policy with input and linear-output standardization.
struct TrainedPolicy {
  Mlp net;
  HighActionKind kind = HighActionKind::GoalState;
  int production_dim = 0;
  Vec in_mean, in_scale;
  Vec out_mean, out_scale;  // linear outputs only

  HighAction act(const Vec& observation) const;
  HighPolicy as_policy() const;
};

struct EpochStat {
  int epoch = 0;
  double loss = 0.0;
  double mean_weight = 1.0;
};

struct TrainResult {
  TrainedPolicy policy;
  std::vector<EpochStat> curve;
};

/// Behavior cloning: squared error for goal actions, cross-entropy for
/// distributions, both for mixed actions; mini-batch Adam.
TrainResult bc_train(std::span<const RelabeledSample> data, const LearnerConfig& config);

/// Expectile value fitting followed by advantage-weighted cloning with
/// weights min(exp(A / beta), weight_clip).
TrainResult awr_train(std::span<const RelabeledSample> data, const LearnerConfig& config);

TrainResult train(std::span<const RelabeledSample> data, const LearnerConfig& config);

/// Asymmetric least-squares location: argmin_v sum |tau - 1[x < v]| (x - v)^2.
double fit_expectile(std::span<const double> values, double tau);

struct EvalResult {
  double mean = 0.0;
  double stddev = 0.0;
  double normalized = 0.0;
  double reference = 0.0;
  std::vector<double> returns;
  std::uint64_t seed = 0;
};

/// Seeded episodes (seed + i for episode i) through env_step_hierarchical.
/// A zero reference leaves `normalized` at zero.
EvalResult evaluate_policy(const HighPolicy& policy, Env& env, const LowLevelSpec& spec, int episodes,
                           std::uint64_t seed, double reference = 0.0);

}  // namespace ohio
