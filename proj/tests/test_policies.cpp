#include <doctest.h>

#include "ohio/policies.hpp"
#include "oracles.hpp"

using namespace ohio;

TEST_CASE("dirichlet dispersion lies on the simplex") {
  SeededRng rng(1);
  for (int rep = 0; rep < 1000; ++rep) {
    const HighAction u = dirichlet_dispersion(2 + rep % 6, rng);
    CHECK(u.values().minCoeff() >= 0.0);
    CHECK(std::abs(u.values().sum() - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(dirichlet_dispersion(1, rng), Error);
}

TEST_CASE("Dirichlet(1, 1) has mean one half") {
  SeededRng rng(2);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += dirichlet_dispersion(2, rng).values()(0);
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("dirichlet dispersion is seed-deterministic") {
  SeededRng a(3), b(3);
  CHECK(dirichlet_dispersion(4, a) == dirichlet_dispersion(4, b));
}

TEST_CASE("proportional heuristic") {
  const HighAction u = proportional_heuristic((Vec(2) << 1, 3).finished());
  CHECK(u.values()(0) == doctest::Approx(0.25));
  CHECK(u.values()(1) == doctest::Approx(0.75));
  CHECK(largest_remainder(u.values() * 8.0, 8) == (Vec(2) << 2, 6).finished());
  CHECK(proportional_heuristic(Vec::Constant(5, 2.0)).values().isApprox(Vec::Constant(5, 0.2)));
  oracle::WarningCapture cap;
  CHECK(proportional_heuristic(Vec::Zero(2)).values() == Vec::Constant(2, 0.5));
  CHECK(cap.saw("all-zero"));
}

TEST_CASE("order-up-to quantities") {
  CHECK(order_up_to(Vec::Constant(1, 4), Vec::Constant(1, 2), Vec::Constant(1, 10))(0) == 4.0);
  CHECK(order_up_to(Vec::Constant(1, 9), Vec::Constant(1, 2), Vec::Constant(1, 10))(0) == 0.0);
  CHECK_THROWS_AS(order_up_to(Vec::Zero(1), Vec::Zero(1), Vec::Constant(1, -1)), Error);
}

TEST_CASE("order-up-to never orders beyond capacity when levels fit") {
  SupplyChainEnv env;
  SeededRng rng(4);
  for (int ep = 0; ep < 30; ++ep) {
    env.reset(ep);
    while (!env.done()) {
      const NetworkProblem net = env.network();
      Vec levels(3);
      for (int s = 0; s < 3; ++s) levels(s) = std::floor(rng.uniform(0, 16));
      const HighAction u = order_up_to_action(net, levels, 25);
      CHECK(std::abs(u.shares().sum() - 1.0) < 1e-9);
      for (int s = 0; s < 3; ++s) {
        const double shipped = u.shares()(1 + s) * net.q(0);
        CHECK(net.q(1 + s) - net.expected_sales(1 + s) + net.pipeline(1 + s) + shipped <= 15.0 + 1e-9);
      }
      env.step(network_low_level_action(env, u));
    }
  }
}

TEST_CASE("frozen order-up-to levels reproduce the grid-search score") {
  const SupplyChainConfig cfg = SupplyChainConfig::one_warehouse_three_stores();
  CHECK(default_order_up_to_levels(cfg) == (Vec(3) << 6, 15, 20).finished());
  SupplyChainEnv env(cfg);
  const HighPolicy pol = make_behavior_policy(PolicyKind::OrderUpTo, env);
  double sum = 0.0;
  for (int ep = 0; ep < 20; ++ep) sum += run_episode(env, pol, {}, ep);
  CHECK(sum / 20 == doctest::Approx(4953.525).epsilon(1e-12));
}

TEST_CASE("grid search picks the best candidate on a coarse grid") {
  SupplyChainConfig cfg;
  const std::vector<double> grid{5, 12, 20};
  const GridSearchResult r = order_up_to_grid_search(cfg, grid, 3, 0);
  CHECK(r.evaluated == 27);
  SupplyChainEnv env(cfg);
  for (double a : grid)
    for (double b : grid)
      for (double c : grid) {
        PolicyParams p;
        p.store_levels = (Vec(3) << a, b, c).finished();
        const HighPolicy pol = make_behavior_policy(PolicyKind::OrderUpTo, env, p);
        double sum = 0.0;
        for (int ep = 0; ep < 3; ++ep) sum += run_episode(env, pol, {}, ep);
        CHECK(sum / 3 <= r.best_mean + 1e-9);
      }
}

TEST_CASE("noise-free hierarchical expert reaches the goal") {
  LinearEnv env;
  for (int seed = 0; seed < 10; ++seed) {
    const auto tr = collect_episode(env, PolicyKind::HierarchicalExpert, {}, {}, seed, seed);
    CHECK(tr.size() == 40);
    CHECK((env.physical_state() - env.goal()).norm() < 1e-2);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      CHECK(tr[i].t == static_cast<std::int64_t>(i));
      CHECK(tr[i].a.has_value());
      CHECK(tr[i].s.size() == env.observation_dim());
    }
  }
}

TEST_CASE("collection is seed-deterministic") {
  PolicyParams p;
  p.exploration_noise = 0.5;
  for (EnvKind k : {EnvKind::Linear, EnvKind::PointMass}) {
    auto env = make_env(k);
    const auto a = collect_episode(*env, PolicyKind::HierarchicalExpert, p, {}, 5, 0);
    const auto b = collect_episode(*env, PolicyKind::HierarchicalExpert, p, {}, 5, 0);
    const auto c = collect_episode(*env, PolicyKind::HierarchicalExpert, p, {}, 6, 0);
    CHECK(a == b);
    CHECK(!(a == c));
  }
  RoutingEnv r;
  CHECK(collect_episode(r, PolicyKind::DirichletDispersion, {}, {}, 1, 0) ==
        collect_episode(r, PolicyKind::DirichletDispersion, {}, {}, 1, 0));
}

TEST_CASE("behavior policies bind to compatible envs only") {
  LinearEnv lin;
  RoutingEnv routing;
  SupplyChainEnv sc;
  CHECK_THROWS_AS(make_behavior_policy(PolicyKind::OrderUpTo, lin), Error);
  CHECK_THROWS_AS(make_behavior_policy(PolicyKind::HierarchicalExpert, routing), Error);
  CHECK_THROWS_AS(make_behavior_policy(PolicyKind::ProportionalHeuristic, sc), Error);
  CHECK_THROWS_AS(make_behavior_policy(PolicyKind::ObservedStateBaseline, lin), Error);
  CHECK_NOTHROW(make_behavior_policy(PolicyKind::DirichletDispersion, sc));
  CHECK(policy_kind_from_string("order_up_to") == PolicyKind::OrderUpTo);
}

TEST_CASE("network behavior policies emit simplex distributions") {
  RoutingEnv env;
  SeededRng rng(8);
  for (PolicyKind k : {PolicyKind::DirichletDispersion, PolicyKind::ProportionalHeuristic}) {
    const HighPolicy pol = make_behavior_policy(k, env);
    env.reset(3);
    while (!env.done()) {
      const HighAction u = pol(env, rng);
      CHECK(u.values().minCoeff() >= 0.0);
      CHECK(std::abs(u.values().sum() - 1.0) < 1e-9);
      env_step_hierarchical(env, u, {});
    }
  }
}

TEST_CASE("random low level stays inside the action bound") {
  LinearEnv env;
  PolicyParams p;
  p.random_action_scale = 0.1;
  const auto tr = collect_episode(env, PolicyKind::RandomLowLevel, p, {}, 0, 0);
  CHECK(tr.size() == 40);
  for (const auto& t : tr) CHECK(t.a->cwiseAbs().maxCoeff() <= 10.0);
}
