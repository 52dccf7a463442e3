#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "ohio/control.hpp"
#include "ohio/core.hpp"
#include "ohio/inversion.hpp"
#include "ohio/network.hpp"
#include "ohio/rng.hpp"

namespace ohio {

enum class EnvKind { Linear, PointMass, SupplyChain, Routing };

std::string_view to_string(EnvKind kind);
EnvKind env_kind_from_string(std::string_view name);

struct StepResult {
  Vec observation;
  double reward = 0.0;
  bool done = false;
};

/// Common interface of the simulators. Every environment owns its random
/// stream, which reset() reseeds, so a (seed, action sequence) pair fully
/// determines the trajectory.
class Env {
 public:
  virtual ~Env() = default;

  virtual EnvKind kind() const = 0;
  virtual Vec reset(std::uint64_t seed) = 0;
  virtual StepResult step(const Vec& action) = 0;
  virtual Vec observation() const = 0;
  virtual int observation_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual HighActionKind high_action_kind() const = 0;
  virtual int high_action_dim() const = 0;
  virtual int production_dim() const { return 0; }
  virtual int episode_length() const = 0;
  virtual int t() const = 0;
  bool done() const { return t() >= episode_length(); }
  virtual std::unique_ptr<Env> clone() const = 0;
};

// ---------------------------------------------------------------------------
// Goal-reaching environments. Observation = [physical state; goal state].
// Reward exp(-(|s' - goal|^2 + 0.01 |a|^2)) lies in (0, 1].

double goal_reward(const Vec& s_next, const Vec& goal, const Vec& a);

struct LinearEnvConfig {
  LinearDynamics dyn = default_dynamics();
  double noise_std = 0.0;
  double goal_low = -5.0;   // position box for goals and start states
  double goal_high = 5.0;
  int position_dims = 1;    // leading state entries sampled from the box; the rest start at zero
  int episode_length = 40;
  double action_bound = 100.0;

  static LinearDynamics default_dynamics();
  void validate() const;
};

class GoalEnv : public Env {
 public:
  int physical_dim() const { return static_cast<int>(state_.size()); }
  const Vec& physical_state() const { return state_; }
  const Vec& goal() const { return goal_; }
  Vec observation() const override;
  int observation_dim() const override { return 2 * physical_dim(); }
  HighActionKind high_action_kind() const override { return HighActionKind::GoalState; }
  int high_action_dim() const override { return physical_dim(); }
  int t() const override { return t_; }
  virtual double action_bound() const = 0;
  // Deterministic part of the transition (no noise, no bounds check).
  virtual Vec nominal_step(const Vec& s, const Vec& a) const = 0;
  // Local linear model used by the LQR low level.
  virtual LinearDynamics model_at(const Vec& s) const = 0;
  // Box for scaling goals in numeric inversion.
  virtual ActionScaling goal_box() const = 0;

 protected:
  Vec state_;
  Vec goal_;
  int t_ = 0;
  SeededRng rng_{0};
};

class LinearEnv : public GoalEnv {
 public:
  explicit LinearEnv(LinearEnvConfig config = {});
  EnvKind kind() const override { return EnvKind::Linear; }
  Vec reset(std::uint64_t seed) override;
  StepResult step(const Vec& a) override;
  int action_dim() const override { return config_.dyn.action_dim(); }
  int episode_length() const override { return config_.episode_length; }
  double action_bound() const override { return config_.action_bound; }
  Vec nominal_step(const Vec& s, const Vec& a) const override { return config_.dyn.step(s, a); }
  LinearDynamics model_at(const Vec&) const override { return config_.dyn; }
  ActionScaling goal_box() const override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<LinearEnv>(*this); }
  const LinearEnvConfig& config() const { return config_; }
  // Places the environment in a given state (tests and evaluation).
  void set_state(const Vec& s, const Vec& goal);

 private:
  LinearEnvConfig config_;
};

/// Planar point mass with cubic velocity drag:
///   acc = a - kappa v^3,  p' = p + dt v + dt^2/2 acc,  v' = v + dt acc.
struct PointMassConfig {
  double dt = 0.5;
  double kappa = 0.05;
  double action_bound = 100.0;
  double goal_low = -5.0;
  double goal_high = 5.0;
  double noise_std = 0.0;
  int episode_length = 40;

  void validate() const;
};

class PointMassEnv : public GoalEnv {
 public:
  explicit PointMassEnv(PointMassConfig config = {});
  EnvKind kind() const override { return EnvKind::PointMass; }
  Vec reset(std::uint64_t seed) override;
  StepResult step(const Vec& a) override;
  int action_dim() const override { return 2; }
  int episode_length() const override { return config_.episode_length; }
  double action_bound() const override { return config_.action_bound; }
  Vec nominal_step(const Vec& s, const Vec& a) const override;
  LinearDynamics model_at(const Vec& s) const override;
  ActionScaling goal_box() const override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<PointMassEnv>(*this); }
  const PointMassConfig& config() const { return config_; }
  void set_state(const Vec& s, const Vec& goal);

 private:
  PointMassConfig config_;
};

// ---------------------------------------------------------------------------
// Supply chain: one warehouse (node 0) feeding S stores.

struct SupplyChainConfig {
  std::vector<double> d_max{5, 15, 20};
  std::vector<double> d_var{2, 2, 2};
  std::vector<double> frequency{2, 4, 6};
  std::vector<double> shift{1, 3, 6};
  std::vector<int> travel_time{1, 1, 1};
  int production_time = 1;
  std::vector<double> storage_capacity{50, 15, 15, 15};  // warehouse first
  std::vector<double> storage_cost{0.1, 0.5, 0.5, 0.5};
  double production_cost = 5.0;
  double production_capacity = 25.0;
  double transport_cost = 0.5;
  double price = 15.0;
  double backorder_cost = 1.5;
  int episode_length = 30;
  double initial_fill = 0.5;     // initial inventory as a fraction of storage capacity
  int forecast_horizon = 6;
  double forecast_noise = 0.1;   // forecast std as a fraction of the mean
  bool strict = true;            // raise ConstraintViolation instead of charging overflow

  static SupplyChainConfig one_warehouse_three_stores();
  static SupplyChainConfig one_warehouse_ten_stores();
  int stores() const { return static_cast<int>(d_max.size()); }
  void validate() const;
};

/// Seasonal demand without the noise term: d_max/2 (1 + cos(f pi (2r + t) / T)).
double demand_mean(double d_max, double frequency, double shift, int t, int period);
/// floor(mean + U(0, d_var)).
double sample_demand(double d_max, double d_var, double frequency, double shift, int t, int period, SeededRng& rng);

struct SupplyChainRewardTerms {
  double revenue = 0, storage = 0, production = 0, transport = 0, overflow = 0, backorder = 0;
  double total() const { return revenue - storage - production - transport - overflow - backorder; }
};

class SupplyChainEnv : public Env {
 public:
  explicit SupplyChainEnv(SupplyChainConfig config = SupplyChainConfig::one_warehouse_three_stores());

  EnvKind kind() const override { return EnvKind::SupplyChain; }
  Vec reset(std::uint64_t seed) override;
  // action = [flow to each store; production]; integer-valued.
  StepResult step(const Vec& action) override;
  Vec observation() const override;
  int observation_dim() const override;
  int action_dim() const override { return config_.stores() + 1; }
  HighActionKind high_action_kind() const override { return HighActionKind::MixedProductionDistribution; }
  int high_action_dim() const override { return 1 + 1 + config_.stores(); }
  int production_dim() const override { return 1; }
  int episode_length() const override { return config_.episode_length; }
  int t() const override { return t_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<SupplyChainEnv>(*this); }

  const SupplyChainConfig& config() const { return config_; }
  const Vec& inventory() const { return q_; }
  const Vec& backorders() const { return backorder_; }
  const Vec& demand() const { return demand_; }
  // Units arriving at each node over the coming steps, summed.
  Vec pipeline_total() const;
  Vec forecast() const;  // forecast_horizon x stores, row-major by step
  const SupplyChainRewardTerms& last_terms() const { return terms_; }

  /// Network snapshot for the LP low level (targets left empty).
  NetworkProblem network() const;
  /// Rebuilds the snapshot from a logged observation.
  NetworkProblem network_from_observation(const Vec& obs) const;
  /// Targets from a high-level action [production; shares over (warehouse, stores)]:
  /// store inflow target share_s * warehouse inventory.
  static NetworkProblem with_targets(NetworkProblem net, const HighAction& u);

  int pipeline_length() const { return static_cast<int>(pipeline_.size()); }

 private:
  void realize_demand();

  SupplyChainConfig config_;
  Vec q_;           // node inventories, warehouse first
  Vec backorder_;   // per store
  Vec demand_;      // current demand per store
  Vec forecast_;    // drawn together with the demand so observation() stays const
  std::vector<Vec> pipeline_;  // pipeline_[k] arrives at the end of step t + k
  int t_ = 0;
  SeededRng rng_{0};
  SupplyChainRewardTerms terms_;
};

// ---------------------------------------------------------------------------
// Station-level vehicle routing on a complete graph.

struct RoutingConfig {
  int stations = 4;
  int fleet = 20;
  int episode_length = 30;
  std::vector<double> base_rate;     // stations x stations Poisson rates; empty: default pattern
  std::vector<double> price;         // stations x stations; empty: 4
  std::vector<double> cost;          // stations x stations; empty: 1
  std::vector<int> travel_time;      // stations x stations; empty: 1
  double seasonality = 0.5;          // relative amplitude of the rate cycle
  int forecast_horizon = 6;
  double forecast_noise = 0.1;

  void validate() const;
  double rate(int i, int j, int t) const;
  double price_of(int i, int j) const;
  double cost_of(int i, int j) const;
  int travel(int i, int j) const;
};

class RoutingEnv : public Env {
 public:
  explicit RoutingEnv(RoutingConfig config = {});

  EnvKind kind() const override { return EnvKind::Routing; }
  Vec reset(std::uint64_t seed) override;
  // action = rebalancing flow per edge (edge order of edges()).
  StepResult step(const Vec& action) override;
  Vec observation() const override;
  int observation_dim() const override;
  int action_dim() const override { return static_cast<int>(edges_.size()); }
  HighActionKind high_action_kind() const override { return HighActionKind::Distribution; }
  int high_action_dim() const override { return config_.stations; }
  int episode_length() const override { return config_.episode_length; }
  int t() const override { return t_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<RoutingEnv>(*this); }

  const RoutingConfig& config() const { return config_; }
  const std::vector<NetworkEdge>& edges() const { return edges_; }
  const Vec& idle() const { return idle_; }
  double in_transit() const;
  Vec forecast() const;  // mean outgoing demand per station over the forecast window
  double last_served() const { return served_; }

  NetworkProblem network() const;
  NetworkProblem network_from_observation(const Vec& obs) const;
  /// Desired idle counts: largest-remainder rounding of u * total idle.
  static NetworkProblem with_targets(NetworkProblem net, const HighAction& u);

  int pipeline_length() const { return static_cast<int>(pipeline_.size()); }

 private:
  void draw_forecast();

  RoutingConfig config_;
  std::vector<NetworkEdge> edges_;
  Vec idle_;
  Vec forecast_;
  std::vector<Vec> pipeline_;  // pipeline_[k] arrives at the start of step t + 1 + k
  int t_ = 0;
  double served_ = 0.0;
  double passenger_profit_ = 0.0;
  SeededRng rng_{0};
};

std::unique_ptr<Env> make_env(EnvKind kind);

// ---------------------------------------------------------------------------
// Hierarchical stepping.

/// LQR tracking low level for goal envs: Q = diag(q_diag) (ones when empty),
/// R = r_weight * I, gains recomputed over `t_abs` steps from a model
/// linearized at the window's first state.
struct LowLevelSpec {
  Vec q_diag;
  double r_weight = 0.2;
  int t_abs = 5;

  Mat Q(int n) const;
  Mat R(int m) const;
  void validate() const;
};

GainSchedule low_level_gains(const GoalEnv& env, const LowLevelSpec& spec, const Vec& s);

/// Integer action the LP low level takes for `u` in the current network state.
Vec network_low_level_action(const Env& env, const HighAction& u);

struct HierarchicalStep {
  Vec observation;
  double reward = 0.0;  // undiscounted sum over the window
  bool done = false;
  std::vector<Transition> transitions;  // low-level steps, u withheld
};

/// Goal envs run the LQR low level for t_abs steps (fewer at the episode end);
/// network envs take one LP decision and one environment step.
HierarchicalStep env_step_hierarchical(Env& env, const HighAction& u, const LowLevelSpec& spec,
                                       std::int64_t episode = 0);

}  // namespace ohio
