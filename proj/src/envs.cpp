#include "ohio/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace ohio {

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::Linear: return "linear";
    case EnvKind::PointMass: return "point_mass";
    case EnvKind::SupplyChain: return "supply_chain";
    case EnvKind::Routing: return "routing";
  }
  return "?";
}

EnvKind env_kind_from_string(std::string_view name) {
  for (EnvKind k : {EnvKind::Linear, EnvKind::PointMass, EnvKind::SupplyChain, EnvKind::Routing})
    if (to_string(k) == name) return k;
  fail(ErrorCode::InvalidConfig, "unknown env kind '" + std::string(name) + "'");
}

namespace {

void check_action(const Vec& a, int dim, double bound) {
  if (a.size() != dim) fail(ErrorCode::DimMismatch, "action has " + std::to_string(a.size()) + " entries, expected " + std::to_string(dim));
  if (!all_finite(a)) fail(ErrorCode::NonFiniteValue, "action contains NaN/Inf");
  if (a.size() > 0 && a.cwiseAbs().maxCoeff() > bound)
    fail(ErrorCode::ActionOutOfBounds, "action magnitude " + std::to_string(a.cwiseAbs().maxCoeff()) +
                                           " exceeds bound " + std::to_string(bound));
}

void check_not_done(const Env& env) {
  if (env.done()) fail(ErrorCode::InvalidArgument, "episode is over; call reset first");
}

void check_box(double lo, double hi, const char* what) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
    fail(ErrorCode::InvalidConfig, std::string(what) + " must satisfy low < high");
}

}  // namespace

double goal_reward(const Vec& s_next, const Vec& goal, const Vec& a) {
  return std::exp(-((s_next - goal).squaredNorm() + 0.01 * a.squaredNorm()));
}

// ---------------------------------------------------------------------------

LinearDynamics LinearEnvConfig::default_dynamics() { return double_integrator(1, 0.5); }

void LinearEnvConfig::validate() const {
  try {
    dyn.validate();
  } catch (const Error& e) {
    fail(ErrorCode::InvalidConfig, "dynamics: " + e.message());
  }
  if (noise_std < 0.0) fail(ErrorCode::InvalidConfig, "noise_std must be >= 0");
  check_box(goal_low, goal_high, "goal box");
  if (position_dims < 0 || position_dims > dyn.state_dim()) fail(ErrorCode::InvalidConfig, "position_dims out of range");
  if (episode_length < 1) fail(ErrorCode::InvalidConfig, "episode_length must be >= 1");
  if (!(action_bound > 0.0)) fail(ErrorCode::InvalidConfig, "action_bound must be > 0");
}

Vec GoalEnv::observation() const {
  Vec o(2 * state_.size());
  o << state_, goal_;
  return o;
}

LinearEnv::LinearEnv(LinearEnvConfig config) : config_(std::move(config)) {
  config_.validate();
  state_ = Vec::Zero(config_.dyn.state_dim());
  goal_ = state_;
}

Vec LinearEnv::reset(std::uint64_t seed) {
  rng_ = SeededRng(seed);
  const int n = config_.dyn.state_dim();
  state_ = Vec::Zero(n);
  goal_ = Vec::Zero(n);
  for (int i = 0; i < config_.position_dims; ++i) state_(i) = rng_.uniform(config_.goal_low, config_.goal_high);
  for (int i = 0; i < config_.position_dims; ++i) goal_(i) = rng_.uniform(config_.goal_low, config_.goal_high);
  t_ = 0;
  return observation();
}

StepResult LinearEnv::step(const Vec& a) {
  check_not_done(*this);
  check_action(a, action_dim(), config_.action_bound);
  Vec next = config_.dyn.step(state_, a);
  if (config_.noise_std > 0.0)
    for (Eigen::Index i = 0; i < next.size(); ++i) next(i) += config_.noise_std * rng_.normal();
  const double r = goal_reward(next, goal_, a);
  state_ = std::move(next);
  ++t_;
  return {observation(), r, done()};
}

ActionScaling LinearEnv::goal_box() const {
  const int n = config_.dyn.state_dim();
  return {Vec::Constant(n, config_.goal_low), Vec::Constant(n, config_.goal_high), true};
}

void LinearEnv::set_state(const Vec& s, const Vec& goal) {
  if (s.size() != config_.dyn.state_dim() || goal.size() != s.size())
    fail(ErrorCode::DimMismatch, "state/goal size does not match the dynamics");
  state_ = s;
  goal_ = goal;
}

// ---------------------------------------------------------------------------

void PointMassConfig::validate() const {
  if (!(dt > 0.0)) fail(ErrorCode::InvalidConfig, "dt must be > 0");
  if (!(kappa >= 0.0)) fail(ErrorCode::InvalidConfig, "kappa must be >= 0");
  if (!(action_bound > 0.0)) fail(ErrorCode::InvalidConfig, "action_bound must be > 0");
  if (noise_std < 0.0) fail(ErrorCode::InvalidConfig, "noise_std must be >= 0");
  check_box(goal_low, goal_high, "goal box");
  if (episode_length < 1) fail(ErrorCode::InvalidConfig, "episode_length must be >= 1");
}

PointMassEnv::PointMassEnv(PointMassConfig config) : config_(config) {
  config_.validate();
  state_ = Vec::Zero(4);
  goal_ = Vec::Zero(4);
}

Vec PointMassEnv::reset(std::uint64_t seed) {
  rng_ = SeededRng(seed);
  state_ = Vec::Zero(4);
  goal_ = Vec::Zero(4);
  for (int i = 0; i < 2; ++i) state_(i) = rng_.uniform(config_.goal_low, config_.goal_high);
  for (int i = 0; i < 2; ++i) goal_(i) = rng_.uniform(config_.goal_low, config_.goal_high);
  t_ = 0;
  return observation();
}

Vec PointMassEnv::nominal_step(const Vec& s, const Vec& a) const {
  const double dt = config_.dt;
  const Vec p = s.head(2);
  const Vec v = s.tail(2);
  const Vec acc = a - config_.kappa * v.array().cube().matrix();
  Vec next(4);
  next << p + dt * v + 0.5 * dt * dt * acc, v + dt * acc;
  return next;
}

LinearDynamics PointMassEnv::model_at(const Vec& s) const {
  const double dt = config_.dt;
  LinearDynamics lin = double_integrator(2, dt);
  for (int i = 0; i < 2; ++i) {
    const double dacc = -3.0 * config_.kappa * s(2 + i) * s(2 + i);
    lin.A(i, 2 + i) += 0.5 * dt * dt * dacc;
    lin.A(2 + i, 2 + i) += dt * dacc;
  }
  lin.c = nominal_step(s, Vec::Zero(2)) - lin.A * s;
  return lin;
}

StepResult PointMassEnv::step(const Vec& a) {
  check_not_done(*this);
  check_action(a, 2, config_.action_bound);
  Vec next = nominal_step(state_, a);
  if (config_.noise_std > 0.0)
    for (int i = 0; i < 4; ++i) next(i) += config_.noise_std * rng_.normal();
  if (!all_finite(next)) fail(ErrorCode::NonFiniteValue, "point-mass state diverged");
  const double r = goal_reward(next, goal_, a);
  state_ = std::move(next);
  ++t_;
  return {observation(), r, done()};
}

ActionScaling PointMassEnv::goal_box() const {
  return {Vec::Constant(4, config_.goal_low), Vec::Constant(4, config_.goal_high), true};
}

void PointMassEnv::set_state(const Vec& s, const Vec& goal) {
  if (s.size() != 4 || goal.size() != 4) fail(ErrorCode::DimMismatch, "point-mass state is 4-dimensional");
  state_ = s;
  goal_ = goal;
}

// ---------------------------------------------------------------------------

SupplyChainConfig SupplyChainConfig::one_warehouse_three_stores() { return {}; }

SupplyChainConfig SupplyChainConfig::one_warehouse_ten_stores() {
  SupplyChainConfig c;
  c.d_max = {5, 5, 5, 5, 10, 10, 10, 18, 18, 18};
  c.d_var = std::vector<double>(10, 2.0);
  c.frequency = {2, 4, 6, 2, 4, 6, 2, 4, 6, 3};
  c.shift = {1, 1, 1, 3, 3, 3, 6, 6, 6, 2};
  c.travel_time = std::vector<int>(10, 1);
  c.storage_capacity = {80};
  c.storage_capacity.insert(c.storage_capacity.end(), 10, 15.0);
  c.storage_cost = {0.005};
  c.storage_cost.insert(c.storage_cost.end(), 10, 2.0);
  c.production_capacity = 60;
  return c;
}

void SupplyChainConfig::validate() const {
  const std::size_t S = d_max.size();
  if (S == 0) fail(ErrorCode::InvalidConfig, "supply chain needs at least one store");
  if (d_var.size() != S || frequency.size() != S || shift.size() != S || travel_time.size() != S)
    fail(ErrorCode::InvalidConfig, "per-store lists must have one entry per store");
  if (storage_capacity.size() != S + 1 || storage_cost.size() != S + 1)
    fail(ErrorCode::InvalidConfig, "storage lists need the warehouse followed by every store");
  auto nonneg = [](const std::vector<double>& v) { return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; }); };
  if (!nonneg(d_max) || !nonneg(d_var) || !nonneg(storage_cost))
    fail(ErrorCode::InvalidConfig, "demand parameters and costs must be >= 0");
  if (!std::all_of(storage_capacity.begin(), storage_capacity.end(), [](double c) { return c > 0.0; }) ||
      !(production_capacity > 0.0))
    fail(ErrorCode::InvalidConfig, "capacities must be > 0");
  if (production_cost < 0 || transport_cost < 0 || price < 0 || backorder_cost < 0)
    fail(ErrorCode::InvalidConfig, "costs must be >= 0");
  if (production_time < 1 || std::any_of(travel_time.begin(), travel_time.end(), [](int t) { return t < 1; }))
    fail(ErrorCode::InvalidConfig, "travel and production times must be >= 1");
  if (episode_length < 1) fail(ErrorCode::InvalidConfig, "episode_length must be >= 1");
  if (!(initial_fill >= 0.0 && initial_fill <= 1.0)) fail(ErrorCode::InvalidConfig, "initial_fill must lie in [0, 1]");
  if (forecast_horizon < 1) fail(ErrorCode::InvalidConfig, "forecast_horizon must be >= 1");
  if (forecast_noise < 0.0) fail(ErrorCode::InvalidConfig, "forecast_noise must be >= 0");
}

double demand_mean(double d_max, double frequency, double shift, int t, int period) {
  return 0.5 * d_max * (1.0 + std::cos(frequency * std::numbers::pi * (2.0 * shift + t) / period));
}

double sample_demand(double d_max, double d_var, double frequency, double shift, int t, int period, SeededRng& rng) {
  const double noise = d_var > 0.0 ? rng.uniform(0.0, d_var) : 0.0;
  return std::floor(demand_mean(d_max, frequency, shift, t, period) + noise);
}

SupplyChainEnv::SupplyChainEnv(SupplyChainConfig config) : config_(std::move(config)) {
  config_.validate();
  reset(0);
}

void SupplyChainEnv::realize_demand() {
  const int S = config_.stores();
  const int K = config_.forecast_horizon;
  const int T = config_.episode_length;
  demand_ = Vec::Zero(S);
  forecast_ = Vec::Zero(K * S);
  if (done()) return;
  for (int s = 0; s < S; ++s)
    demand_(s) = sample_demand(config_.d_max[s], config_.d_var[s], config_.frequency[s], config_.shift[s], t_, T, rng_);
  for (int k = 0; k < K; ++k)
    for (int s = 0; s < S; ++s) {
      const double mean = demand_mean(config_.d_max[s], config_.frequency[s], config_.shift[s], t_ + 1 + k, T) +
                          0.5 * config_.d_var[s];
      forecast_(k * S + s) = std::max(0.0, mean + config_.forecast_noise * mean * rng_.normal());
    }
}

Vec SupplyChainEnv::reset(std::uint64_t seed) {
  rng_ = SeededRng(seed);
  const int S = config_.stores();
  q_ = Vec(S + 1);
  for (int i = 0; i <= S; ++i) q_(i) = std::floor(config_.initial_fill * config_.storage_capacity[i]);
  backorder_ = Vec::Zero(S);
  int L = config_.production_time;
  for (int tt : config_.travel_time) L = std::max(L, tt);
  pipeline_.assign(L, Vec::Zero(S + 1));
  t_ = 0;
  terms_ = {};
  realize_demand();
  return observation();
}

StepResult SupplyChainEnv::step(const Vec& action) {
  check_not_done(*this);
  const int S = config_.stores();
  if (action.size() != S + 1) fail(ErrorCode::DimMismatch, "supply-chain action is [flow per store; production]");
  if (!all_finite(action)) fail(ErrorCode::NonFiniteValue, "action contains NaN/Inf");
  if ((action.array() < 0.0).any()) fail(ErrorCode::ActionOutOfBounds, "flows and production must be >= 0");
  constexpr double tol = 1e-9;
  Vec flows = action.head(S);
  double production = action(S);
  const double shipped = flows.sum();

  if (shipped > q_(0) + tol) {
    if (config_.strict)
      fail(ErrorCode::ConstraintViolation, "warehouse ships " + std::to_string(shipped) + " but holds " + std::to_string(q_(0)));
    flows *= q_(0) / shipped;
  }
  if (production > config_.production_capacity + tol) {
    if (config_.strict)
      fail(ErrorCode::ConstraintViolation, "production " + std::to_string(production) + " exceeds capacity " +
                                               std::to_string(config_.production_capacity));
    production = config_.production_capacity;
  }

  SupplyChainRewardTerms terms;
  for (int i = 0; i <= S; ++i) terms.storage += config_.storage_cost[i] * q_(i);
  terms.production = config_.production_cost * production;
  terms.transport = config_.transport_cost * flows.sum();

  q_(0) = std::max(0.0, q_(0) - flows.sum());
  for (int s = 0; s < S; ++s) pipeline_[config_.travel_time[s] - 1](1 + s) += flows(s);
  pipeline_[config_.production_time - 1](0) += production;

  for (int s = 0; s < S; ++s) {
    const double wanted = demand_(s) + backorder_(s);
    const double sold = std::min(wanted, q_(1 + s));
    q_(1 + s) -= sold;
    backorder_(s) = wanted - sold;
    terms.revenue += config_.price * sold;
    terms.backorder += config_.backorder_cost * backorder_(s);
  }

  q_ += pipeline_.front();
  pipeline_.erase(pipeline_.begin());
  pipeline_.push_back(Vec::Zero(S + 1));

  for (int i = 0; i <= S; ++i) {
    const double excess = q_(i) - config_.storage_capacity[i];
    if (excess > tol) {
      if (config_.strict)
        fail(ErrorCode::ConstraintViolation, "node " + std::to_string(i) + " holds " + std::to_string(q_(i)) +
                                                 " units above capacity " + std::to_string(config_.storage_capacity[i]));
      if (i > 0) terms.overflow += 1.5 * config_.price * excess;
      q_(i) = config_.storage_capacity[i];
    }
  }

  terms_ = terms;
  ++t_;
  realize_demand();
  return {observation(), terms.total(), done()};
}

Vec SupplyChainEnv::pipeline_total() const {
  Vec total = Vec::Zero(config_.stores() + 1);
  for (const Vec& p : pipeline_) total += p;
  return total;
}

Vec SupplyChainEnv::forecast() const { return forecast_; }

int SupplyChainEnv::observation_dim() const {
  const int S = config_.stores();
  return (S + 1) + 2 * S + config_.forecast_horizon * S + pipeline_length() * (S + 1) + 1;
}

// Layout: inventories (warehouse first), backorders, current demand,
// forecast (step-major), pipeline arrivals per future step, t / T.
Vec SupplyChainEnv::observation() const {
  const int S = config_.stores();
  Vec o(observation_dim());
  int at = 0;
  o.segment(at, S + 1) = q_, at += S + 1;
  o.segment(at, S) = backorder_, at += S;
  o.segment(at, S) = demand_, at += S;
  o.segment(at, forecast_.size()) = forecast_, at += static_cast<int>(forecast_.size());
  for (const Vec& p : pipeline_) o.segment(at, S + 1) = p, at += S + 1;
  o(at) = static_cast<double>(t_) / config_.episode_length;
  return o;
}

NetworkProblem SupplyChainEnv::network_from_observation(const Vec& obs) const {
  const int S = config_.stores();
  if (obs.size() != observation_dim()) fail(ErrorCode::DimMismatch, "observation does not match the supply-chain layout");
  NetworkProblem net;
  net.roles.assign(1, NodeRole::Warehouse);
  net.roles.insert(net.roles.end(), S, NodeRole::Store);
  for (int s = 0; s < S; ++s) net.edges.push_back({0, 1 + s, config_.transport_cost});
  net.q = obs.head(S + 1);
  const Vec backlog = obs.segment(S + 1, S);
  const Vec demand = obs.segment(2 * S + 1, S);
  net.expected_sales = Vec::Zero(S + 1);
  for (int s = 0; s < S; ++s) net.expected_sales(1 + s) = std::min(demand(s) + backlog(s), net.q(1 + s));
  net.pipeline = Vec::Zero(S + 1);
  int at = 3 * S + 1 + config_.forecast_horizon * S;
  for (int k = 0; k < pipeline_length(); ++k, at += S + 1) net.pipeline += obs.segment(at, S + 1);
  net.storage_capacity = Eigen::Map<const Vec>(config_.storage_capacity.data(), S + 1);
  net.production_capacity = Vec::Zero(S + 1);
  net.production_capacity(0) = config_.production_capacity;
  return net;
}

NetworkProblem SupplyChainEnv::network() const { return network_from_observation(observation()); }

NetworkProblem SupplyChainEnv::with_targets(NetworkProblem net, const HighAction& u) {
  const int n = net.num_nodes();
  if (u.kind() != HighActionKind::MixedProductionDistribution || u.production_dim() != 1 || u.dim() != n + 1)
    fail(ErrorCode::DimMismatch, "supply-chain high action is [production; share per node]");
  const Vec shares = u.shares();
  net.q_hat = Vec::Zero(n);
  for (int i = 1; i < n; ++i) net.q_hat(i) = shares(i) * net.q(0);
  net.w_hat = Vec::Zero(n);
  net.w_hat(0) = std::max(0.0, u.production()(0));
  return net;
}

// ---------------------------------------------------------------------------

void RoutingConfig::validate() const {
  if (stations < 2) fail(ErrorCode::InvalidConfig, "routing needs at least two stations");
  if (fleet <= 0) fail(ErrorCode::InvalidConfig, "fleet size must be > 0");
  if (episode_length < 1) fail(ErrorCode::InvalidConfig, "episode_length must be >= 1");
  const std::size_t nn = static_cast<std::size_t>(stations) * stations;
  for (const auto* v : {&base_rate, &price, &cost})
    if (!v->empty() && v->size() != nn) fail(ErrorCode::InvalidConfig, "OD matrices need stations^2 entries");
  if (!travel_time.empty() && travel_time.size() != nn) fail(ErrorCode::InvalidConfig, "travel_time needs stations^2 entries");
  if (std::any_of(base_rate.begin(), base_rate.end(), [](double r) { return !(r >= 0.0); }))
    fail(ErrorCode::InvalidConfig, "demand rates must be >= 0");
  if (std::any_of(cost.begin(), cost.end(), [](double c) { return !(c >= 0.0); }))
    fail(ErrorCode::InvalidConfig, "costs must be >= 0");
  for (int i = 0; i < stations; ++i)
    for (int j = 0; j < stations; ++j)
      if (i != j && travel(i, j) < 1) fail(ErrorCode::InvalidConfig, "travel times must be >= 1");
  if (!(seasonality >= 0.0 && seasonality <= 1.0)) fail(ErrorCode::InvalidConfig, "seasonality must lie in [0, 1]");
  if (forecast_horizon < 1) fail(ErrorCode::InvalidConfig, "forecast_horizon must be >= 1");
  if (forecast_noise < 0.0) fail(ErrorCode::InvalidConfig, "forecast_noise must be >= 0");
}

double RoutingConfig::rate(int i, int j, int t) const {
  if (i == j) return 0.0;
  // Station 0 is a busy hub by default, so vehicles drain away from it.
  const double base = base_rate.empty() ? (i == 0 ? 2.0 : 0.5) : base_rate[i * stations + j];
  const double phase = 2.0 * std::numbers::pi * (static_cast<double>(t) / episode_length + static_cast<double>(i) / stations);
  return base * (1.0 + seasonality * std::sin(phase));
}

double RoutingConfig::price_of(int i, int j) const { return price.empty() ? 4.0 : price[i * stations + j]; }
double RoutingConfig::cost_of(int i, int j) const { return cost.empty() ? 1.0 : cost[i * stations + j]; }
int RoutingConfig::travel(int i, int j) const { return travel_time.empty() ? 1 : travel_time[i * stations + j]; }

RoutingEnv::RoutingEnv(RoutingConfig config) : config_(std::move(config)) {
  config_.validate();
  const int N = config_.stations;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i != j) edges_.push_back({i, j, config_.cost_of(i, j)});
  reset(0);
}

void RoutingEnv::draw_forecast() {
  const int N = config_.stations;
  const int K = config_.forecast_horizon;
  forecast_ = Vec::Zero(N);
  for (int i = 0; i < N; ++i) {
    double mean = 0.0;
    for (int k = 1; k <= K; ++k)
      for (int j = 0; j < N; ++j) mean += config_.rate(i, j, t_ + k);
    mean /= K;
    forecast_(i) = std::max(0.0, mean + config_.forecast_noise * mean * rng_.normal());
  }
}

Vec RoutingEnv::reset(std::uint64_t seed) {
  rng_ = SeededRng(seed);
  const int N = config_.stations;
  idle_ = largest_remainder(Vec::Constant(N, static_cast<double>(config_.fleet) / N), config_.fleet);
  int L = 1;
  for (const auto& e : edges_) L = std::max(L, config_.travel(e.from, e.to));
  pipeline_.assign(L, Vec::Zero(N));
  t_ = 0;
  served_ = 0.0;
  draw_forecast();
  return observation();
}

StepResult RoutingEnv::step(const Vec& action) {
  check_not_done(*this);
  const int N = config_.stations;
  if (action.size() != action_dim()) fail(ErrorCode::DimMismatch, "routing action is one flow per edge");
  if (!all_finite(action)) fail(ErrorCode::NonFiniteValue, "action contains NaN/Inf");
  if ((action.array() < 0.0).any()) fail(ErrorCode::ActionOutOfBounds, "rebalancing flows must be >= 0");
  Vec out = Vec::Zero(N);
  for (std::size_t k = 0; k < edges_.size(); ++k) out(edges_[k].from) += action(k);
  for (int i = 0; i < N; ++i)
    if (out(i) > idle_(i) + 1e-9)
      fail(ErrorCode::ConstraintViolation, "station " + std::to_string(i) + " sends " + std::to_string(out(i)) +
                                               " vehicles but has " + std::to_string(idle_(i)) + " idle");

  double reward = 0.0;
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    idle_(e.from) -= action(k);
    pipeline_[config_.travel(e.from, e.to) - 1](e.to) += action(k);
    reward -= e.cost * action(k);
  }
  idle_ = idle_.cwiseMax(0.0);
  idle_ += pipeline_.front();
  pipeline_.erase(pipeline_.begin());
  pipeline_.push_back(Vec::Zero(N));

  ++t_;
  served_ = 0.0;
  // Station-level greedy matching: destinations served in index order until idle vehicles run out.
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (i == j) continue;
      const double demand = static_cast<double>(rng_.poisson(config_.rate(i, j, t_)));
      const double served = std::min(demand, idle_(i));
      if (served <= 0.0) continue;
      idle_(i) -= served;
      pipeline_[config_.travel(i, j) - 1](j) += served;
      served_ += served;
      reward += served * (config_.price_of(i, j) - config_.cost_of(i, j));
    }
  draw_forecast();
  return {observation(), reward, done()};
}

double RoutingEnv::in_transit() const {
  double total = 0.0;
  for (const Vec& p : pipeline_) total += p.sum();
  return total;
}

Vec RoutingEnv::forecast() const { return forecast_; }

int RoutingEnv::observation_dim() const { return config_.stations * (2 + pipeline_length()) + 1; }

// Layout: idle vehicles, arrivals per future step (step-major), forecast
// outgoing demand, t / T.
Vec RoutingEnv::observation() const {
  const int N = config_.stations;
  Vec o(observation_dim());
  int at = 0;
  o.segment(at, N) = idle_, at += N;
  for (const Vec& p : pipeline_) o.segment(at, N) = p, at += N;
  o.segment(at, N) = forecast_, at += N;
  o(at) = static_cast<double>(t_) / config_.episode_length;
  return o;
}

NetworkProblem RoutingEnv::network_from_observation(const Vec& obs) const {
  if (obs.size() != observation_dim()) fail(ErrorCode::DimMismatch, "observation does not match the routing layout");
  NetworkProblem net;
  net.roles.assign(config_.stations, NodeRole::Station);
  net.edges = edges_;
  net.q = obs.head(config_.stations);
  return net;
}

NetworkProblem RoutingEnv::network() const { return network_from_observation(observation()); }

NetworkProblem RoutingEnv::with_targets(NetworkProblem net, const HighAction& u) {
  if (u.kind() != HighActionKind::Distribution || u.dim() != net.num_nodes())
    fail(ErrorCode::DimMismatch, "routing high action is a distribution over stations");
  const double total = net.q.sum();
  const long whole = std::lround(total);
  net.q_hat = largest_remainder(u.values() * static_cast<double>(whole), whole);
  return net;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Env> make_env(EnvKind kind) {
  switch (kind) {
    case EnvKind::Linear: return std::make_unique<LinearEnv>();
    case EnvKind::PointMass: return std::make_unique<PointMassEnv>();
    case EnvKind::SupplyChain: return std::make_unique<SupplyChainEnv>();
    case EnvKind::Routing: return std::make_unique<RoutingEnv>();
  }
  fail(ErrorCode::InvalidConfig, "unknown env kind");
}

Mat LowLevelSpec::Q(int n) const {
  if (q_diag.size() == 0) return Mat::Identity(n, n);
  if (q_diag.size() != n) fail(ErrorCode::DimMismatch, "q_diag must have one entry per state dimension");
  return q_diag.asDiagonal();
}

Mat LowLevelSpec::R(int m) const { return r_weight * Mat::Identity(m, m); }

void LowLevelSpec::validate() const {
  if (t_abs < 1) fail(ErrorCode::InvalidConfig, "t_abs must be >= 1");
  if (!(r_weight >= 0.0)) fail(ErrorCode::InvalidConfig, "r_weight must be >= 0");
  if (q_diag.size() > 0 && (!all_finite(q_diag) || (q_diag.array() < 0.0).any()))
    fail(ErrorCode::InvalidConfig, "q_diag entries must be finite and >= 0");
}

GainSchedule low_level_gains(const GoalEnv& env, const LowLevelSpec& spec, const Vec& s) {
  const LinearDynamics dyn = env.model_at(s);
  return riccati_gains(dyn, spec.Q(dyn.state_dim()), spec.R(dyn.action_dim()), spec.t_abs);
}

Vec network_low_level_action(const Env& env, const HighAction& u) {
  if (const auto* sc = dynamic_cast<const SupplyChainEnv*>(&env)) {
    const NetworkProblem net = SupplyChainEnv::with_targets(sc->network(), u);
    const SupplyChainDecision d = supplychain_policy(net);
    const Vec flows = round_flows(net.edges, d.flows, net.q);
    // Production is rounded after the flows, then kept inside the residual
    // warehouse capacity those integer flows leave.
    const double residual = net.production_capacity(0) - net.q(0) - net.pipeline(0) + flows.sum();
    const double w = std::clamp(std::round(d.production(0)), 0.0, std::max(0.0, std::floor(residual + 1e-9)));
    Vec a(flows.size() + 1);
    a << flows, w;
    return a;
  }
  if (const auto* rt = dynamic_cast<const RoutingEnv*>(&env)) {
    const NetworkProblem net = RoutingEnv::with_targets(rt->network(), u);
    return round_flows(net.edges, rebalancing_policy(net), net.q);
  }
  fail(ErrorCode::InvalidArgument, "LP low level needs a network environment");
}

HierarchicalStep env_step_hierarchical(Env& env, const HighAction& u, const LowLevelSpec& spec, std::int64_t episode) {
  if (u.kind() != env.high_action_kind() || u.dim() != env.high_action_dim())
    fail(ErrorCode::DimMismatch, "high-level action does not fit " + std::string(to_string(env.kind())));
  if (!all_finite(u.values())) fail(ErrorCode::NonFiniteValue, "high-level action contains NaN/Inf");
  HierarchicalStep out;
  auto record = [&](const Vec& s, const Vec& a, const StepResult& r) {
    out.transitions.push_back({episode, env.t() - 1, s, a, r.reward, r.observation});
    out.reward += r.reward;
    out.observation = r.observation;
    out.done = r.done;
  };

  if (auto* goal_env = dynamic_cast<GoalEnv*>(&env)) {
    spec.validate();
    const GainSchedule gains = low_level_gains(*goal_env, spec, goal_env->physical_state());
    const double bound = goal_env->action_bound();
    for (int k = 0; k < spec.t_abs && !env.done(); ++k) {
      const Vec s = env.observation();
      const Vec a = lqr_tracking_action(gains, k, goal_env->physical_state(), u.values()).cwiseMax(-bound).cwiseMin(bound);
      record(s, a, env.step(a));
    }
    return out;
  }
  const Vec s = env.observation();
  const Vec a = network_low_level_action(env, u);
  record(s, a, env.step(a));
  return out;
}

}  // namespace ohio
