#include "ohio/policies.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

namespace ohio {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::HierarchicalExpert: return "hierarchical_expert";
    case PolicyKind::DirichletDispersion: return "dirichlet_dispersion";
    case PolicyKind::ProportionalHeuristic: return "proportional_heuristic";
    case PolicyKind::OrderUpTo: return "order_up_to";
    case PolicyKind::RandomLowLevel: return "random_low_level";
    case PolicyKind::ObservedStateBaseline: return "observed_state_baseline";
  }
  return "?";
}

PolicyKind policy_kind_from_string(std::string_view name) {
  for (PolicyKind k : {PolicyKind::HierarchicalExpert, PolicyKind::DirichletDispersion, PolicyKind::ProportionalHeuristic,
                       PolicyKind::OrderUpTo, PolicyKind::RandomLowLevel, PolicyKind::ObservedStateBaseline})
    if (to_string(k) == name) return k;
  fail(ErrorCode::InvalidConfig, "unknown policy kind '" + std::string(name) + "'");
}

HighAction dirichlet_dispersion(int n, SeededRng& rng) {
  if (n < 2) fail(ErrorCode::InvalidArgument, "dispersion needs at least two stations");
  Vec g(n);
  for (int i = 0; i < n; ++i) g(i) = rng.gamma(1.0);
  return HighAction::distribution(g / g.sum());
}

HighAction proportional_heuristic(const Vec& forecast) {
  if (forecast.size() < 1) fail(ErrorCode::DimMismatch, "empty forecast");
  if (!all_finite(forecast) || (forecast.array() < 0.0).any())
    fail(ErrorCode::InvalidArgument, "forecast must be finite and >= 0");
  const double total = forecast.sum();
  if (total <= 0.0) {
    warn("all-zero demand forecast; falling back to a uniform distribution");
    return HighAction::distribution(Vec::Constant(forecast.size(), 1.0 / forecast.size()));
  }
  return HighAction::distribution(forecast / total);
}

Vec order_up_to(const Vec& inventory, const Vec& in_transit, const Vec& levels) {
  if (inventory.size() != levels.size() || in_transit.size() != levels.size())
    fail(ErrorCode::DimMismatch, "order-up-to inputs must have equal length");
  if ((levels.array() < 0.0).any()) fail(ErrorCode::InvalidArgument, "order-up-to levels must be >= 0");
  return (levels - inventory - in_transit).cwiseMax(0.0);
}

HighAction order_up_to_action(const NetworkProblem& net, const Vec& store_levels, double warehouse_level) {
  const std::vector<int> stores = net.stores();
  const std::vector<int> whs = net.warehouses();
  if (whs.size() != 1) fail(ErrorCode::InvalidArgument, "order-up-to expects a single warehouse");
  if (static_cast<int>(stores.size()) != store_levels.size())
    fail(ErrorCode::DimMismatch, "one order-up-to level per store expected");
  const int w = whs.front();
  const Vec sales = net.expected_sales.size() ? net.expected_sales : Vec::Zero(net.num_nodes());
  const Vec pipe = net.pipeline.size() ? net.pipeline : Vec::Zero(net.num_nodes());

  Vec position(stores.size()), transit(stores.size());
  for (std::size_t s = 0; s < stores.size(); ++s) {
    position(s) = net.q(stores[s]) - sales(stores[s]);
    transit(s) = pipe(stores[s]);
  }
  Vec orders = order_up_to(position, transit, store_levels);
  const double stock = net.q(w);
  if (orders.sum() > stock) orders *= stock / orders.sum();

  const double production = std::max(0.0, warehouse_level - (stock - orders.sum()) - pipe(w));
  Vec shares(net.num_nodes());
  shares.setZero();
  if (stock > 0.0) {
    for (std::size_t s = 0; s < stores.size(); ++s) shares(stores[s]) = orders(s) / stock;
    shares(w) = std::max(0.0, 1.0 - orders.sum() / stock);
  } else {
    shares(w) = 1.0;
  }
  return HighAction::mixed(Vec::Constant(1, production), shares / shares.sum());
}

Vec default_order_up_to_levels(const SupplyChainConfig& config) {
  // Grid-search optimum for the 1W3S defaults (see tools/grid_search); other
  // configurations fall back to the store capacities.
  const SupplyChainConfig ref = SupplyChainConfig::one_warehouse_three_stores();
  if (config.d_max == ref.d_max && config.storage_capacity == ref.storage_capacity && config.d_var == ref.d_var)
    return (Vec(3) << 6, 15, 20).finished();
  Vec levels(config.stores());
  for (int s = 0; s < config.stores(); ++s) levels(s) = config.storage_capacity[1 + s];
  return levels;
}

Vec random_low_level_action(const Env& env, double scale, SeededRng& rng) {
  if (const auto* g = dynamic_cast<const GoalEnv*>(&env)) {
    Vec a(g->action_dim());
    const double bound = scale * g->action_bound();
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.uniform(-bound, bound);
    return a;
  }
  fail(ErrorCode::InvalidArgument, "random primitive actions are only defined for goal envs");
}

HighPolicy make_behavior_policy(PolicyKind kind, const Env& env, const PolicyParams& params) {
  switch (kind) {
    case PolicyKind::HierarchicalExpert: {
      if (!dynamic_cast<const GoalEnv*>(&env)) break;
      const double noise = params.exploration_noise;
      return [noise](const Env& e, SeededRng& rng) {
        Vec u = static_cast<const GoalEnv&>(e).goal();
        if (noise > 0.0)
          for (Eigen::Index i = 0; i < u.size(); ++i) u(i) += noise * rng.normal();
        return HighAction::goal(u);
      };
    }
    case PolicyKind::DirichletDispersion:
      if (env.high_action_kind() == HighActionKind::Distribution)
        return [](const Env& e, SeededRng& rng) { return dirichlet_dispersion(e.high_action_dim(), rng); };
      if (env.kind() == EnvKind::SupplyChain)
        return [](const Env& e, SeededRng& rng) {
          const auto& sc = static_cast<const SupplyChainEnv&>(e);
          const HighAction shares = dirichlet_dispersion(sc.config().stores() + 1, rng);
          return HighAction::mixed(Vec::Constant(1, rng.uniform(0.0, sc.config().production_capacity)), shares.values());
        };
      break;
    case PolicyKind::ProportionalHeuristic:
      if (env.kind() != EnvKind::Routing) break;
      return [](const Env& e, SeededRng&) { return proportional_heuristic(static_cast<const RoutingEnv&>(e).forecast()); };
    case PolicyKind::OrderUpTo: {
      const auto* sc = dynamic_cast<const SupplyChainEnv*>(&env);
      if (!sc) break;
      const Vec levels = params.store_levels.size() ? params.store_levels : default_order_up_to_levels(sc->config());
      if (levels.size() != sc->config().stores()) fail(ErrorCode::InvalidConfig, "one order-up-to level per store expected");
      const double wl = params.warehouse_level >= 0.0 ? params.warehouse_level : sc->config().production_capacity;
      return [levels, wl](const Env& e, SeededRng&) {
        return order_up_to_action(static_cast<const SupplyChainEnv&>(e).network(), levels, wl);
      };
    }
    case PolicyKind::RandomLowLevel:
    case PolicyKind::ObservedStateBaseline: break;
  }
  fail(ErrorCode::InvalidConfig, std::string(to_string(kind)) + " is not a behavior policy for " +
                                     std::string(to_string(env.kind())));
}

std::vector<Transition> collect_episode(Env& env, PolicyKind kind, const PolicyParams& params, const LowLevelSpec& spec,
                                        std::uint64_t seed, std::int64_t episode) {
  env.reset(seed);
  SeededRng rng = SeededRng(seed).derive(1);
  std::vector<Transition> out;
  out.reserve(env.episode_length());
  if (kind == PolicyKind::RandomLowLevel) {
    while (!env.done()) {
      const Vec s = env.observation();
      const Vec a = random_low_level_action(env, params.random_action_scale, rng);
      const StepResult r = env.step(a);
      out.push_back({episode, env.t() - 1, s, a, r.reward, r.observation});
    }
    return out;
  }
  const HighPolicy policy = make_behavior_policy(kind, env, params);
  while (!env.done()) {
    HierarchicalStep h = env_step_hierarchical(env, policy(env, rng), spec, episode);
    for (auto& tr : h.transitions) out.push_back(std::move(tr));
  }
  return out;
}

double run_episode(Env& env, const HighPolicy& policy, const LowLevelSpec& spec, std::uint64_t seed) {
  env.reset(seed);
  SeededRng rng = SeededRng(seed).derive(1);
  double total = 0.0;
  while (!env.done()) total += env_step_hierarchical(env, policy(env, rng), spec).reward;
  return total;
}

GridSearchResult order_up_to_grid_search(const SupplyChainConfig& config, const std::vector<double>& candidates,
                                         int episodes, std::uint64_t seed) {
  const int S = config.stores();
  if (candidates.empty() || episodes < 1) fail(ErrorCode::InvalidArgument, "grid search needs candidates and episodes");
  std::size_t total = 1;
  for (int s = 0; s < S; ++s) total *= candidates.size();

  auto levels_of = [&](std::size_t idx) {
    Vec l(S);
    for (int s = S - 1; s >= 0; --s) {
      l(s) = candidates[idx % candidates.size()];
      idx /= candidates.size();
    }
    return l;
  };
  std::vector<double> means(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    SupplyChainEnv env(config);
    for (std::size_t i = next++; i < total; i = next++) {
      PolicyParams p;
      p.store_levels = levels_of(i);
      const HighPolicy policy = make_behavior_policy(PolicyKind::OrderUpTo, env, p);
      double sum = 0.0;
      for (int ep = 0; ep < episodes; ++ep) sum += run_episode(env, policy, {}, seed + ep);
      means[i] = sum / episodes;
    }
  };
  const unsigned n_threads = std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // Ties resolve to the lowest index, so the result does not depend on scheduling.
  const std::size_t best = static_cast<std::size_t>(std::max_element(means.begin(), means.end()) - means.begin());
  return {levels_of(best), means[best], total};
}

}  // namespace ohio
