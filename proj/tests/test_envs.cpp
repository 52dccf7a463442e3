#include <doctest.h>

#include <cmath>

#include "ohio/envs.hpp"
#include "oracles.hpp"

using namespace ohio;

namespace {

SupplyChainConfig single_store(double d_max, double q0_fill) {
  SupplyChainConfig c;
  c.d_max = {d_max};
  c.d_var = {0.0};
  c.frequency = {0.0};
  c.shift = {0.0};
  c.travel_time = {1};
  c.storage_capacity = {50, 10};
  c.storage_cost = {0.0, 0.5};
  c.initial_fill = q0_fill;
  return c;
}

HighAction random_mixed(int stores, double max_production, SeededRng& rng) {
  Vec shares(stores + 1);
  for (int i = 0; i <= stores; ++i) shares(i) = rng.gamma(1.0);
  shares /= shares.sum();
  return HighAction::mixed(Vec::Constant(1, rng.uniform(0.0, max_production)), shares);
}

}  // namespace

TEST_CASE("linear env step matches the hand product") {
  LinearEnv env;
  env.reset(0);
  env.set_state((Vec(2) << 1, 2).finished(), Vec::Zero(2));
  const StepResult r = env.step(Vec::Zero(1));
  CHECK(env.physical_state()(0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(env.physical_state()(1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(r.observation.size() == 4);
  CHECK(r.reward == doctest::Approx(std::exp(-8.0)));
}

TEST_CASE("goal env action bounds") {
  LinearEnv env;
  env.reset(1);
  CHECK_NOTHROW(env.step(Vec::Constant(1, 100.0)));
  try {
    env.step(Vec::Constant(1, 100.0001));
    FAIL("expected ActionOutOfBounds");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ActionOutOfBounds);
  }
  CHECK_THROWS_AS(env.step(Vec::Zero(2)), Error);
}

TEST_CASE("env reset is deterministic per seed") {
  LinearEnv a, b;
  CHECK(a.reset(0) == b.reset(0));
  CHECK(a.reset(0) != a.reset(1));
  SupplyChainEnv s1, s2;
  CHECK(s1.reset(7) == s2.reset(7));
  RoutingEnv r1, r2;
  CHECK(r1.reset(3) == r2.reset(3));
}

TEST_CASE("episode ends after the configured length") {
  LinearEnvConfig cfg;
  cfg.episode_length = 3;
  LinearEnv env(cfg);
  env.reset(0);
  for (int i = 0; i < 3; ++i) CHECK(env.step(Vec::Zero(1)).done == (i == 2));
  CHECK_THROWS_AS(env.step(Vec::Zero(1)), Error);
}

TEST_CASE("point mass without drag tracks the planar double integrator") {
  PointMassConfig pc;
  pc.kappa = 0.0;
  PointMassEnv pm(pc);
  LinearEnvConfig lc;
  lc.dyn = double_integrator(2, pc.dt);
  lc.position_dims = 2;
  LinearEnv lin(lc);
  pm.reset(5);
  lin.reset(5);
  pm.set_state((Vec(4) << 1, -2, 0.3, 0.1).finished(), Vec::Zero(4));
  lin.set_state((Vec(4) << 1, -2, 0.3, 0.1).finished(), Vec::Zero(4));
  SeededRng rng(11);
  for (int t = 0; t < 40; ++t) {
    const Vec a = (Vec(2) << rng.uniform(-3, 3), rng.uniform(-3, 3)).finished();
    pm.step(a);
    lin.step(a);
    CHECK((pm.physical_state() - lin.physical_state()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("point mass local model agrees with finite differences") {
  PointMassEnv pm;
  const Vec s = (Vec(4) << 0.5, -1.0, 1.2, -0.7).finished();
  const LinearDynamics model = pm.model_at(s);
  const LinearDynamics fd = linearize_fd([&](const Vec& x, const Vec& a) { return pm.nominal_step(x, a); }, s, Vec::Zero(2));
  CHECK((model.A - fd.A).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((model.B - fd.B).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((model.step(s, Vec::Zero(2)) - pm.nominal_step(s, Vec::Zero(2))).norm() < 1e-12);
}

TEST_CASE("seasonal demand at t = 0") {
  CHECK(std::floor(demand_mean(5, 2, 1, 0, 30)) == 4.0);
  const double expected = std::floor(2.5 * (1.0 + std::cos(4.0 * M_PI / 30.0)));
  CHECK(expected == 4.0);
  SeededRng rng(0);
  CHECK(sample_demand(5, 0, 2, 1, 0, 30, rng) == 4.0);
}

TEST_CASE("demand stays within [0, d_max + d_var]") {
  const SupplyChainConfig c = SupplyChainConfig::one_warehouse_ten_stores();
  SeededRng rng(3);
  for (int t = 0; t < 30; ++t)
    for (int s = 0; s < c.stores(); ++s)
      for (int rep = 0; rep < 50; ++rep) {
        const double d = sample_demand(c.d_max[s], c.d_var[s], c.frequency[s], c.shift[s], t, 30, rng);
        CHECK(d >= 0.0);
        CHECK(d <= c.d_max[s] + c.d_var[s]);
      }
}

TEST_CASE("supply-chain reward of a single store") {
  SupplyChainEnv env(single_store(3.0, 0.5));
  env.reset(0);
  REQUIRE(env.inventory()(1) == 5.0);
  REQUIRE(env.demand()(0) == 3.0);
  const StepResult r = env.step(Vec::Zero(2));
  const auto& t = env.last_terms();
  CHECK(t.revenue == doctest::Approx(45.0));
  CHECK(t.storage == doctest::Approx(2.5));
  CHECK(t.backorder == 0.0);
  CHECK(r.reward == doctest::Approx(42.5));
  CHECK(env.inventory()(1) == 2.0);
}

TEST_CASE("unmet supply-chain demand becomes backorders") {
  SupplyChainEnv env(single_store(8.0, 0.5));
  env.reset(0);
  const StepResult r = env.step(Vec::Zero(2));
  CHECK(env.backorders()(0) == 3.0);
  CHECK(env.last_terms().backorder == doctest::Approx(1.5 * 3.0));
  CHECK(r.reward == doctest::Approx(15.0 * 5 - 2.5 - 4.5));
}

TEST_CASE("supply-chain observation layout") {
  SupplyChainEnv env;
  env.reset(0);
  CHECK(env.observation_dim() == 4 + 3 + 3 + 6 * 3 + 4 + 1);
  const Vec o = env.observation();
  CHECK(o.size() == env.observation_dim());
  CHECK(o.head(4) == env.inventory());
  CHECK(o.segment(7, 3) == env.demand());
  CHECK(o(o.size() - 1) == 0.0);
  CHECK(env.inventory() == (Vec(4) << 25, 7, 7, 7).finished());
}

TEST_CASE("strict supply chain rejects infeasible bypass actions") {
  SupplyChainEnv env;
  env.reset(0);
  auto code_of = [&](const Vec& a) {
    SupplyChainEnv copy = env;
    try {
      copy.step(a);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Usage;
  };
  CHECK(code_of((Vec(4) << 20, 10, 0, 0).finished()) == ErrorCode::ConstraintViolation);  // ships 30 of 25
  CHECK(code_of((Vec(4) << 0, 0, 0, 26).finished()) == ErrorCode::ConstraintViolation);   // production above 25
  CHECK(code_of((Vec(4) << 15, 0, 0, 0).finished()) == ErrorCode::ConstraintViolation);   // store overflow
  CHECK(code_of((Vec(4) << -1, 0, 0, 0).finished()) == ErrorCode::ActionOutOfBounds);
}

TEST_CASE("lenient supply chain charges overflow") {
  SupplyChainConfig c;
  c.strict = false;
  SupplyChainEnv env(c);
  env.reset(0);
  const double before = env.inventory()(1);
  const double sold = std::min(env.demand()(0), before);
  env.step((Vec(4) << 15, 0, 0, 0).finished());
  const double excess = before - sold + 15 - 15;
  CHECK(env.last_terms().overflow == doctest::Approx(1.5 * 15 * excess));
  CHECK(env.inventory()(1) == 15.0);
}

TEST_CASE("LP low level keeps the supply chain inside its capacities") {
  for (const auto& cfg : {SupplyChainConfig::one_warehouse_three_stores(), SupplyChainConfig::one_warehouse_ten_stores()}) {
    SupplyChainEnv env(cfg);
    SeededRng rng(42);
    int violations = 0;
    for (int ep = 0; ep < 100; ++ep) {
      env.reset(1000 + ep);
      while (!env.done()) {
        const HighAction u = random_mixed(cfg.stores(), 1.5 * cfg.production_capacity, rng);
        const Vec a = network_low_level_action(env, u);
        if (a.tail(1)(0) > cfg.production_capacity) ++violations;
        CHECK(a == a.array().round().matrix());
        env.step(a);
        for (int i = 0; i <= cfg.stores(); ++i)
          if (env.inventory()(i) > cfg.storage_capacity[i] + 1e-9 || env.inventory()(i) < 0) ++violations;
      }
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("attainable supply-chain targets are met exactly") {
  SupplyChainEnv env;
  env.reset(2);
  const Vec q = env.inventory();
  const Vec d = env.demand();
  // Ship 2 units to each store and keep the rest; produce nothing.
  Vec shares(4);
  shares << (q(0) - 6) / q(0), 2 / q(0), 2 / q(0), 2 / q(0);
  const HighAction u = HighAction::mixed(Vec::Zero(1), shares);
  const HierarchicalStep h = env_step_hierarchical(env, u, {});
  REQUIRE(h.transitions.size() == 1);
  CHECK(h.transitions[0].a->head(3) == Vec::Constant(3, 2.0));
  for (int s = 0; s < 3; ++s) CHECK(env.inventory()(1 + s) == q(1 + s) - std::min(d(s), q(1 + s)) + 2.0);
  CHECK(env.inventory()(0) == q(0) - 6);
}

TEST_CASE("network snapshot round-trips through the observation") {
  SupplyChainEnv env;
  env.reset(4);
  env.step((Vec(4) << 1, 2, 3, 5).finished());
  const NetworkProblem a = env.network();
  CHECK(a.q == env.inventory());
  CHECK(a.pipeline == env.pipeline_total());
  CHECK(a.expected_sales(1) == std::min(env.demand()(0) + env.backorders()(0), env.inventory()(1)));
  CHECK_NOTHROW(a.validate());

  RoutingEnv r;
  r.reset(4);
  CHECK(r.network().q == r.idle());
}

TEST_CASE("routing reward of two served passengers and one rebalancing trip") {
  RoutingConfig c;
  c.stations = 2;
  c.fleet = 6;
  c.base_rate = {0, 1000, 0, 0};
  c.seasonality = 0.0;
  RoutingEnv env(c);
  env.reset(0);
  REQUIRE(env.idle() == Vec::Constant(2, 3.0));
  const StepResult r = env.step((Vec(2) << 1, 0).finished());  // edge (0,1) carries one vehicle
  CHECK(env.last_served() == 2.0);
  CHECK(r.reward == doctest::Approx(2 * 3.0 - 1.0));
}

TEST_CASE("routing conserves the fleet") {
  RoutingEnv env;
  CHECK(env.idle().sum() + env.in_transit() == 20.0);
  SeededRng rng(9);
  for (int ep = 0; ep < 20; ++ep) {
    env.reset(ep);
    CHECK(env.idle().sum() + env.in_transit() == 20.0);
    while (!env.done()) {
      Vec u(4);
      for (int i = 0; i < 4; ++i) u(i) = rng.gamma(1.0);
      env_step_hierarchical(env, HighAction::distribution(u / u.sum()), {});
      CHECK(env.idle().sum() + env.in_transit() == doctest::Approx(20.0).epsilon(1e-12));
      CHECK(env.idle().minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("routing LP low level reaches attainable idle targets") {
  RoutingEnv env;
  env.reset(1);
  const NetworkProblem before = env.network();
  const HighAction u = HighAction::distribution(Vec::Constant(4, 0.25));
  const Vec a = network_low_level_action(env, u);
  const Vec target = RoutingEnv::with_targets(before, u).q_hat;
  CHECK(flow_balance_inverse(before, a) == target);
}

TEST_CASE("reward traces are reproducible") {
  auto trace = [](EnvKind kind) {
    auto env = make_env(kind);
    env->reset(123);
    SeededRng rng(5);
    std::vector<double> rewards;
    while (!env->done()) {
      HighAction u;
      if (kind == EnvKind::SupplyChain) u = random_mixed(3, 25, rng);
      else if (kind == EnvKind::Routing) u = HighAction::distribution(Vec::Constant(4, 0.25));
      else u = HighAction::goal(Vec::Zero(env->high_action_dim()));
      rewards.push_back(env_step_hierarchical(*env, u, {}).reward);
    }
    return rewards;
  };
  for (EnvKind k : {EnvKind::Linear, EnvKind::PointMass, EnvKind::SupplyChain, EnvKind::Routing})
    CHECK(trace(k) == trace(k));
}

TEST_CASE("LQR low level holds a resting state") {
  LinearEnvConfig cfg;
  cfg.noise_std = 0.05;
  LinearEnv env(cfg);
  env.reset(0);
  const Vec s0 = env.physical_state();
  const HierarchicalStep h = env_step_hierarchical(env, HighAction::goal(s0), {});
  REQUIRE(h.transitions.size() == 5);
  CHECK(h.transitions[0].a->norm() == 0.0);
  for (const auto& tr : h.transitions) CHECK(tr.a->norm() < 5.0);
  CHECK((env.physical_state() - s0).norm() < 1.0);
}

TEST_CASE("LQR low level reaches a nearby goal in five steps") {
  const double dt = 0.5;
  const std::vector<std::vector<double>> A{{1, dt}, {0, 1}};
  const std::vector<double> b{dt * dt / 2, dt};
  LowLevelSpec spec;
  spec.q_diag = (Vec(2) << 4.0, 1.0).finished();
  spec.r_weight = 0.0;
  const auto gains = oracle::riccati_single_input(A, b, {{4, 0}, {0, 1}}, 0.0, 5);
  LinearEnv env;
  env.reset(0);
  env.set_state((Vec(2) << 0.0, 0.0).finished(), Vec::Zero(2));
  const std::vector<double> u{0.5, 0.0};
  const auto expected = oracle::closed_loop_single_input(A, b, gains, {0.0, 0.0}, u);
  env_step_hierarchical(env, HighAction::goal((Vec(2) << u[0], u[1]).finished()), spec);
  CHECK(env.physical_state()(0) == doctest::Approx(expected[0]).epsilon(1e-12));
  CHECK(env.physical_state()(1) == doctest::Approx(expected[1]).epsilon(1e-12));
  CHECK(std::hypot(expected[0] - u[0], expected[1] - u[1]) < 1e-2);
}

TEST_CASE("hierarchical step validates the high action") {
  LinearEnv env;
  env.reset(0);
  CHECK_THROWS_AS(env_step_hierarchical(env, HighAction::goal(Vec::Zero(3)), {}), Error);
  CHECK_THROWS_AS(env_step_hierarchical(env, HighAction::distribution(Vec::Constant(2, 0.5)), {}), Error);
}

TEST_CASE("env configs reject invalid parameters") {
  SupplyChainConfig sc;
  sc.storage_capacity[1] = 0;
  CHECK_THROWS_AS(SupplyChainEnv{sc}, Error);
  RoutingConfig rc;
  rc.fleet = 0;
  CHECK_THROWS_AS(RoutingEnv{rc}, Error);
  PointMassConfig pc;
  pc.kappa = -1;
  CHECK_THROWS_AS(PointMassEnv{pc}, Error);
  CHECK(env_kind_from_string("supply_chain") == EnvKind::SupplyChain);
  CHECK_THROWS_AS(env_kind_from_string("reacher"), Error);
}
