#include "ohio/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <optional>

#include "ohio/config.hpp"
#include "ohio/control.hpp"
#include "ohio/dataset_io.hpp"
#include "ohio/inversion.hpp"
#include "ohio/linalg.hpp"
#include "ohio/lp.hpp"
#include "ohio/network.hpp"
#include "ohio/pipeline.hpp"

namespace ohio {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

Vec uniform_vec(SeededRng& rng, int n, double scale) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(-scale, scale);
  return v;
}

// Plain-loop rollout of a_l = K_l (x_l - u), independent of closed_loop_rollout.
Vec tracking_rollout(const LinearDynamics& dyn, const GainSchedule& g, Vec x, const Vec& u) {
  for (int l = 0; l < g.horizon(); ++l) x = dyn.A * x + dyn.B * (g.Ks[l] * (x - u)) + dyn.c;
  return x;
}

LinearDynamics c1_system() {
  Mat A(2, 2), B(2, 1);
  A << 1, 0.5, 0, 1;
  B << 0.125, 0.5;
  return LinearDynamics(A, B);
}

// Minimum of c'x over {A_ub x <= b_ub, A_eq x = b_eq, x >= 0} by enumerating
// every basic solution. Exponential; only for a handful of variables.
std::optional<double> vertex_enumeration_min(const LpProblem& p) {
  const int n = static_cast<int>(p.c.size());
  const int mu = static_cast<int>(p.A_ub.rows());
  const int me = static_cast<int>(p.A_eq.rows());
  const int need = n - me;
  if (need < 0) return std::nullopt;
  std::optional<double> best;
  std::vector<int> pick(need);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == need) {
      Mat M(n, n);
      Vec rhs(n);
      for (int i = 0; i < me; ++i) {
        M.row(i) = p.A_eq.row(i);
        rhs(i) = p.b_eq(i);
      }
      for (int k = 0; k < need; ++k) {
        if (pick[k] < mu) {
          M.row(me + k) = p.A_ub.row(pick[k]);
          rhs(me + k) = p.b_ub(pick[k]);
        } else {
          M.row(me + k).setZero();
          M(me + k, pick[k] - mu) = 1.0;
          rhs(me + k) = 0.0;
        }
      }
      Eigen::FullPivLU<Mat> lu(M);
      if (lu.rank() < n) return;
      const Vec x = lu.solve(rhs);
      if ((x.array() < -1e-9).any()) return;
      if (mu && ((p.A_ub * x - p.b_ub).array() > 1e-9).any()) return;
      if (me && ((p.A_eq * x - p.b_eq).cwiseAbs().array() > 1e-9).any()) return;
      const double v = p.c.dot(x);
      if (!best || v < *best) best = v;
      return;
    }
    for (int k = start; k < mu + n; ++k) {
      pick[depth] = k;
      rec(k + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

// Seeded family of small LPs with a bounding row: the test corpus.
std::vector<LpProblem> lp_corpus(std::uint64_t seed, int count) {
  SeededRng rng(seed);
  std::vector<LpProblem> out;
  for (int trial = 0; trial < count; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(5));
    const int mu = 1 + static_cast<int>(rng.uniform_index(4));
    const int me = static_cast<int>(rng.uniform_index(2));
    LpProblem p;
    p.c = Vec(n);
    for (int j = 0; j < n; ++j) p.c(j) = std::round(rng.uniform(-5, 5));
    p.A_ub = Mat(mu + 1, n);
    p.b_ub = Vec(mu + 1);
    for (int i = 0; i < mu; ++i) {
      for (int j = 0; j < n; ++j) p.A_ub(i, j) = std::round(rng.uniform(-4, 4));
      p.b_ub(i) = std::round(rng.uniform(-2, 8));
    }
    p.A_ub.row(mu).setOnes();
    p.b_ub(mu) = 10.0;
    p.A_eq = Mat(me, n);
    p.b_eq = Vec(me);
    for (int i = 0; i < me; ++i) {
      for (int j = 0; j < n; ++j) p.A_eq(i, j) = std::round(rng.uniform(0, 3));
      p.A_eq(i, i % n) += 1.0;
      p.b_eq(i) = std::round(rng.uniform(0, 6));
    }
    out.push_back(std::move(p));
  }
  // 2x3 transportation problem with supplies 5, 7 and demands 4, 4, 4.
  LpProblem t;
  t.c = (Vec(6) << 4, 6, 9, 5, 3, 8).finished();
  t.A_ub = Mat::Zero(2, 6);
  t.A_ub.block(0, 0, 1, 3).setOnes();
  t.A_ub.block(1, 3, 1, 3).setOnes();
  t.b_ub = (Vec(2) << 5, 7).finished();
  t.A_eq = Mat::Zero(3, 6);
  for (int j = 0; j < 3; ++j) t.A_eq(j, j) = t.A_eq(j, 3 + j) = 1.0;
  t.b_eq = Vec::Constant(3, 4.0);
  out.push_back(std::move(t));
  return out;
}

std::vector<Transition> first_steps(Env& env, PolicyKind kind, std::uint64_t seed, std::size_t count) {
  std::vector<Transition> out;
  const SeededRng root(seed);
  for (int ep = 0; out.size() < count; ++ep) {
    auto tr = collect_episode(env, kind, {}, {}, root.derive(static_cast<std::uint64_t>(ep)).seed(), ep);
    out.insert(out.end(), tr.begin(), tr.end());
  }
  out.resize(count);
  return out;
}

double edge_cost(const NetworkProblem& net, const Vec& flows) {
  double c = 0.0;
  for (int k = 0; k < net.num_edges(); ++k) c += net.edges[k].cost * flows(k);
  return c;
}

std::vector<Transition> merged(std::vector<Transition> a, std::vector<Transition> b, std::int64_t offset) {
  for (auto& tr : b) tr.episode += offset;
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

double bc_score(std::span<const RelabeledSample> data, const LearnerConfig& lc, Env& env, const LowLevelSpec& spec,
                int episodes, std::uint64_t seed, double reference) {
  const TrainResult tr = train(data, lc);
  return evaluate_policy(tr.policy.as_policy(), env, spec, episodes, seed, reference).normalized;
}

// ---------------------------------------------------------------------------

CriterionResult exact_linear_recovery(const AcceptanceOptions& o) {
  CriterionResult r{1, "exact linear recovery", false, {}, 0.0};
  const auto t0 = Clock::now();
  const LinearDynamics dyn = c1_system();
  const int T = 5;
  const std::vector<LinearDynamics> window(T, dyn);
  SeededRng rng = SeededRng(o.seed).derive(1);
  double worst = 0.0;
  int pairs = 0;
  for (double q11 : {3.5, 4.0, 4.5, 5.0, 5.5}) {
    for (double rw : {0.0, 0.2}) {
      Mat Q = Mat::Zero(2, 2);
      Q(0, 0) = q11;
      Q(1, 1) = 1.0;
      const GainSchedule g = riccati_gains(dyn, Q, Mat::Constant(1, 1, rw), T);
      for (int k = 0; k < 1000; ++k, ++pairs) {
        const Vec s = uniform_vec(rng, 2, 5.0), s_next = uniform_vec(rng, 2, 5.0);
        const InversionResult inv = invert_lqr_horizon_analytic(window, g, s, s_next);
        worst = std::max(worst, (tracking_rollout(dyn, g, s, inv.u_hat.values()) - s_next).cwiseAbs().maxCoeff());
      }
    }
  }
  r.seconds = since(t0);
  r.passed = worst < 1e-8 && r.seconds < 5.0;
  r.detail = fmt("%d pairs over 10 settings, T=%d, max |rollout - s'| = %.3g (limit 1e-8)", pairs, T, worst);
  return r;
}

CriterionResult round_trip_identifiability(const AcceptanceOptions& o) {
  CriterionResult r{2, "round-trip identifiability", false, {}, 0.0};
  const auto t0 = Clock::now();
  SeededRng rng = SeededRng(o.seed).derive(2);
  const int T = 3;
  double worst_exact = 0.0, worst_loss = 0.0, worst_gap = 0.0;
  int instances = 0;
  while (instances < 500) {
    Mat A(2, 2), B(2, 2);
    for (int i = 0; i < A.size(); ++i) A.data()[i] = (i % 3 == 0 ? 1.0 : 0.0) + 0.2 * rng.normal();
    for (int i = 0; i < B.size(); ++i) B.data()[i] = rng.normal();
    const LinearDynamics dyn(A, B);
    const GainSchedule g = riccati_gains(dyn, Mat::Identity(2, 2), 0.1 * Mat::Identity(2, 2), T);
    const std::vector<LinearDynamics> window(T, dyn);
    if (condition_number(closed_loop_sensitivity(window, g, Vec::Zero(2)).sensitivity) > 20.0) continue;
    ++instances;
    const Vec s = uniform_vec(rng, 2, 1.0), u0 = uniform_vec(rng, 2, 1.0);
    const Vec s_T = tracking_rollout(dyn, g, s, u0);
    const Vec u_hat = invert_lqr_horizon_analytic(window, g, s, s_T).u_hat.values();
    worst_exact = std::max(worst_exact, (u_hat - u0).cwiseAbs().maxCoeff());

    const LowLevelPolicy policy = [&g](int i, const Vec& x, const Vec& u) -> Vec { return g.Ks[i] * (x - u); };
    const Vec targets[1] = {s_T};
    for (InversionMethod m : {InversionMethod::GradientDescent, InversionMethod::CEM}) {
      InversionConfig cfg;
      cfg.method = m;
      cfg.cem_fallback = false;
      cfg.early_stop_tol = 1e-10;
      cfg.cem_patience = 10;
      const InversionResult num = invert_numeric_state(policy, window, s, targets, cfg, rng);
      worst_loss = std::max(worst_loss, num.loss);
      worst_gap = std::max(worst_gap, (num.u_hat.values() - u_hat).cwiseAbs().maxCoeff());
    }
  }
  r.seconds = since(t0);
  r.passed = worst_exact < 1e-6 && worst_loss < 1e-3 && worst_gap < 1e-2 && r.seconds < 120.0;
  r.detail = fmt("500 instances: max |u_hat - u0| = %.3g; GD/CEM max loss %.3g, max |u_num - u_hat| = %.3g",
                 worst_exact, worst_loss, worst_gap);
  return r;
}

CriterionResult lp_inverse_consistency(const AcceptanceOptions& o) {
  CriterionResult r{3, "LP inverse consistency", false, {}, 0.0};
  const auto t0 = Clock::now();
  double worst_obj = 0.0, worst_eps = 0.0, min_perturbed_eps = INFINITY;
  int perturbed = 0;

  RoutingEnv routing;
  for (const Transition& tr : first_steps(routing, PolicyKind::ProportionalHeuristic, SeededRng(o.seed).derive(3).seed(), 100)) {
    const NetworkProblem net = routing.network_from_observation(tr.s);
    const Vec& f = *tr.a;
    NetworkProblem tgt = net;
    tgt.q_hat = flow_balance_inverse(net, f);
    worst_obj = std::max(worst_obj, std::abs(edge_cost(net, rebalancing_policy(tgt)) - edge_cost(net, f)));
    worst_eps = std::max(worst_eps, duality_inverse(net, f).epsilon);
    // A two-way trip between stations with spare vehicles is never optimal.
    const Vec spare = net.q - net.outflow(f);
    for (int k = 0; k < net.num_edges(); ++k) {
      const auto [i, j, c] = net.edges[k];
      if (i > j || spare(i) < 1 || spare(j) < 1) continue;
      for (int back = 0; back < net.num_edges(); ++back) {
        if (net.edges[back].from != j || net.edges[back].to != i) continue;
        Vec g = f;
        g(k) += 1;
        g(back) += 1;
        min_perturbed_eps = std::min(min_perturbed_eps, duality_inverse(net, g).epsilon);
        ++perturbed;
      }
      break;
    }
  }

  SupplyChainEnv chain;
  const SupplyChainConfig& cfg = chain.config();
  const int S = cfg.stores();
  for (const Transition& tr : first_steps(chain, PolicyKind::OrderUpTo, SeededRng(o.seed).derive(4).seed(), 100)) {
    NetworkProblem net = chain.network_from_observation(tr.s);
    net.w_hat = Vec::Zero(net.num_nodes());
    const Vec flows = tr.a->head(S);
    const double w = (*tr.a)(S);
    const double logged = edge_cost(net, flows) + cfg.production_cost * w;
    NetworkProblem tgt = net;
    tgt.q_hat = flow_balance_inverse(net, flows);
    tgt.w_hat(0) = w;
    const SupplyChainDecision d = supplychain_policy(tgt);
    worst_obj = std::max(worst_obj, std::abs(edge_cost(net, d.flows) + cfg.production_cost * d.production(0) - logged));
    NetworkProblem fixed = net;
    fixed.w_hat(0) = w;
    worst_eps = std::max(worst_eps, duality_inverse(fixed, *tr.a).epsilon);
    for (double delta : {-1.0, 1.0}) {
      Vec off = *tr.a;
      off(S) += delta;
      if (off(S) < 0) continue;
      try {
        min_perturbed_eps = std::min(min_perturbed_eps, duality_inverse(fixed, off).epsilon);
        ++perturbed;
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InfeasibleReconstruction) throw;
      }
    }
  }
  r.seconds = since(t0);
  r.passed = worst_obj < 1e-6 && worst_eps < 1e-6 && perturbed >= 100 && min_perturbed_eps > 1e-6 && r.seconds < 60.0;
  r.detail = fmt("200 logged steps: max objective gap %.3g, max eps %.3g; %d perturbed copies, min eps %.3g",
                 worst_obj, worst_eps, perturbed, min_perturbed_eps);
  return r;
}

CriterionResult constraint_safety(const AcceptanceOptions& o) {
  CriterionResult r{4, "constraint safety", false, {}, 0.0};
  const auto t0 = Clock::now();
  SupplyChainEnv env;  // strict: any violation throws
  const SupplyChainConfig& cfg = env.config();
  const LowLevelSpec spec;
  const HighPolicy extreme = [&cfg](const Env& e, SeededRng& rng) {
    Vec shares(e.high_action_dim() - 1);
    for (Eigen::Index i = 0; i < shares.size(); ++i) shares(i) = rng.uniform(0.0, 1.0) + 1e-3;
    return HighAction::mixed(Vec::Constant(1, rng.uniform(0.0, 10.0 * cfg.production_capacity)), shares / shares.sum());
  };
  const std::vector<std::pair<std::string, HighPolicy>> policies = {
      {"order_up_to", make_behavior_policy(PolicyKind::OrderUpTo, env)},
      {"dirichlet", make_behavior_policy(PolicyKind::DirichletDispersion, env)},
      {"extreme", extreme}};
  long violations = 0, steps = 0;
  const SeededRng root = SeededRng(o.seed).derive(5);
  for (const auto& [name, policy] : policies) {
    for (int ep = 0; ep < 100; ++ep) {
      const std::uint64_t seed = root.derive(static_cast<std::uint64_t>(ep)).seed();
      SeededRng rng(seed);
      env.reset(seed);
      try {
        while (!env.done()) {
          env_step_hierarchical(env, policy(env, rng), spec, ep);
          ++steps;
          const Vec& q = env.inventory();
          for (Eigen::Index i = 0; i < q.size(); ++i)
            if (q(i) < -1e-9 || q(i) > cfg.storage_capacity[static_cast<std::size_t>(i)] + 1e-9) ++violations;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ConstraintViolation) throw;
        ++violations;
      }
    }
  }
  int bypass = 0;
  SeededRng rng = root.derive(1000);
  for (int ep = 0; ep < 100; ++ep) {
    env.reset(root.derive(static_cast<std::uint64_t>(ep)).seed());
    try {
      while (!env.done()) {
        Vec a(env.action_dim());
        for (int s = 0; s < cfg.stores(); ++s) a(s) = std::floor(rng.uniform(0.0, cfg.storage_capacity[1 + s]));
        a(cfg.stores()) = std::floor(rng.uniform(0.0, cfg.production_capacity));
        env.step(a);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConstraintViolation) throw;
      ++bypass;
    }
  }
  r.seconds = since(t0);
  r.passed = violations == 0 && bypass >= 1;
  r.detail = fmt("LP-routed: %ld violations in %ld steps (3 policies x 100 episodes); raw-flow bypass: %d/100 episodes raised ConstraintViolation",
                 violations, steps, bypass);
  return r;
}

CriterionResult hr_dataset(const AcceptanceOptions& o) {
  CriterionResult r{5, "HR-dataset analogue", false, {}, 0.0};
  const auto t0 = Clock::now();
  LinearEnv env;
  LowLevelSpec spec;
  spec.r_weight = 5.0;
  const auto raw = collect_dataset(env, PolicyKind::HierarchicalExpert, {}, spec, SeededRng(o.seed).derive(6).seed(), 250);
  const std::uint64_t eval_seed = SeededRng(o.seed).derive(7).seed();
  const double ref = evaluate_policy(make_behavior_policy(PolicyKind::HierarchicalExpert, env), env, spec, 50, eval_seed).mean;
  LearnerConfig lc;
  lc.seed = o.seed;
  double score[2];
  for (int b = 0; b < 2; ++b) {
    RelabelConfig rc;
    rc.baseline = b == 0 ? RelabelBaseline::Ohio : RelabelBaseline::ObservedState;
    const RelabelOutput rel = relabel_dataset(raw, env, spec, rc, o.seed);
    score[b] = bc_score(rel.samples, lc, env, spec, 50, eval_seed, ref);
  }
  r.seconds = since(t0);
  r.passed = score[0] >= 90.0 && score[0] - score[1] >= 30.0 && r.seconds < 600.0;
  r.detail = fmt("250 expert episodes, T_abs=5: OHIO-BC %.1f, ObservedState-BC %.1f (gap %.1f)", score[0], score[1],
                 score[0] - score[1]);
  return r;
}

CriterionResult misspecification(const AcceptanceOptions& o) {
  CriterionResult r{6, "model-misspecification robustness", false, {}, 0.0};
  const auto t0 = Clock::now();
  LinearEnv env;
  LowLevelSpec spec;
  spec.r_weight = 5.0;
  const auto raw = collect_dataset(env, PolicyKind::HierarchicalExpert, {}, spec, SeededRng(o.seed).derive(8).seed(), 100);
  const std::uint64_t eval_seed = SeededRng(o.seed).derive(9).seed();
  const double ref = evaluate_policy(make_behavior_policy(PolicyKind::HierarchicalExpert, env), env, spec, 20, eval_seed).mean;
  LearnerConfig lc;
  lc.epochs = 100;
  lc.seed = o.seed;
  // The perturbed controller both relabels and executes the learned goals.
  auto score = [&](const LowLevelSpec& s, InversionMethod m) {
    RelabelConfig rc;
    rc.inversion.method = m;
    const RelabelOutput rel = relabel_dataset(raw, env, s, rc, o.seed);
    return bc_score(rel.samples, lc, env, s, 20, eval_seed, ref);
  };
  LowLevelSpec s10 = spec, c10 = spec;
  s10.q_diag = Vec::Constant(2, 10.0);
  c10.r_weight = 10.0 * spec.r_weight;
  const double base = score(spec, InversionMethod::GradientDescent);
  const double gd_s = score(s10, InversionMethod::GradientDescent), gd_c = score(c10, InversionMethod::GradientDescent);
  const double reg_s = score(s10, InversionMethod::AnalyticRegularized), reg_c = score(c10, InversionMethod::AnalyticRegularized);
  r.seconds = since(t0);
  r.passed = base - gd_s <= 10.0 && base - gd_c <= 10.0 && std::abs(gd_s - reg_s) <= 15.0 && std::abs(gd_c - reg_c) <= 15.0;
  r.detail = fmt("numeric: true %.1f, 10S %.1f, 10C %.1f; regularized analytic: 10S %.1f, 10C %.1f", base, gd_s, gd_c,
                 reg_s, reg_c);
  return r;
}

CriterionResult network_learning(const AcceptanceOptions& o) {
  CriterionResult r{7, "network-env learning sanity", false, {}, 0.0};
  const auto t0 = Clock::now();
  SupplyChainEnv env;
  const LowLevelSpec spec;
  const std::uint64_t eval_seed = SeededRng(o.seed).derive(12).seed();
  const double ref = evaluate_policy(make_behavior_policy(PolicyKind::OrderUpTo, env), env, spec, 20, eval_seed).mean;
  const auto heuristic = collect_dataset(env, PolicyKind::OrderUpTo, {}, spec, SeededRng(o.seed).derive(10).seed(), 100);
  const auto noisy = collect_dataset(env, PolicyKind::DirichletDispersion, {}, spec, SeededRng(o.seed).derive(11).seed(), 100);
  LearnerConfig lc;
  lc.epochs = 100;
  lc.seed = o.seed;
  const RelabelConfig rc;
  const double bc_heur = bc_score(relabel_network_dataset(heuristic, env, rc).samples, lc, env, spec, 20, eval_seed, ref);
  const RelabelOutput mixed = relabel_network_dataset(merged(heuristic, noisy, 100000), env, rc);
  const double bc_mixed = bc_score(mixed.samples, lc, env, spec, 20, eval_seed, ref);
  lc.algorithm = Algorithm::AWR;
  const double awr_mixed = bc_score(mixed.samples, lc, env, spec, 20, eval_seed, ref);
  r.seconds = since(t0);
  r.passed = std::abs(bc_heur - 100.0) <= 10.0 && awr_mixed >= bc_mixed;
  r.detail = fmt("1W3S: OHIO-BC on order-up-to data %.1f (behavior 100); mixed 50/50: BC %.1f, AWR %.1f", bc_heur,
                 bc_mixed, awr_mixed);
  return r;
}

CriterionResult numerics(const AcceptanceOptions& o) {
  CriterionResult r{8, "numerics suite", false, {}, 0.0};
  const auto t0 = Clock::now();
  SeededRng rng = SeededRng(o.seed).derive(13);

  double grad_err = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Head head = trial % 3 == 0 ? Head::Linear : (trial % 3 == 1 ? Head::Softmax : Head::Mixed);
    const int in = 3, out = 4, n = 6;
    Mlp net({in, 8, out}, head, rng, head == Head::Mixed ? 2 : 0);
    Mat X(in, n), Y(out, n);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    for (Eigen::Index c = 0; c < n; ++c) {
      for (int k = 0; k < out; ++k) Y(k, c) = rng.uniform();
      const int lin = head == Head::Linear ? out : (head == Head::Softmax ? 0 : 2);
      if (lin < out) Y.col(c).tail(out - lin) /= Y.col(c).tail(out - lin).sum();
    }
    MlpGradient g;
    net.loss_and_gradient(X, Y, Vec(), &g);
    const Vec analytic = net.flatten(g);
    Vec p = net.flat_params();
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double x0 = p(k), h = 1e-6;
      p(k) = x0 + h;
      net.set_flat_params(p);
      const double up = net.loss_and_gradient(X, Y, Vec(), nullptr);
      p(k) = x0 - h;
      net.set_flat_params(p);
      const double down = net.loss_and_gradient(X, Y, Vec(), nullptr);
      p(k) = x0;
      net.set_flat_params(p);
      const double fd = (up - down) / (2 * h);
      grad_err = std::max(grad_err, std::abs(fd - analytic(k)) / std::max(1e-6, std::max(std::abs(fd), std::abs(analytic(k)))));
    }
  }

  double asym = 0.0, min_eig = INFINITY;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(3)), m = 1 + static_cast<int>(rng.uniform_index(2));
    Mat A(n, n), B(n, m), L(n, n), Lr(m, m);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = 0.6 * rng.normal();
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < Lr.size(); ++i) Lr.data()[i] = rng.normal();
    const GainSchedule g = riccati_gains(LinearDynamics(A, B), L * L.transpose(),
                                         Lr * Lr.transpose() + 0.01 * Mat::Identity(m, m), 8);
    for (const Mat& P : g.Ps) {
      asym = std::max(asym, (P - P.transpose()).cwiseAbs().maxCoeff());
      min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat>(P).eigenvalues().minCoeff());
    }
  }

  double lp_gap = 0.0;
  int lp_optimal = 0, lp_mismatch = 0;
  for (const LpProblem& p : lp_corpus(1234, 300)) {
    const LpSolution s = solve_lp(p);
    const auto best = vertex_enumeration_min(p);
    if (!best) {
      if (s.status != LpStatus::Infeasible) ++lp_mismatch;
      continue;
    }
    if (s.status != LpStatus::Optimal) {
      ++lp_mismatch;
      continue;
    }
    ++lp_optimal;
    lp_gap = std::max(lp_gap, std::abs(s.objective_value - *best));
  }

  const double two[2] = {0.0, 1.0};
  const double ex = fit_expectile(two, 0.9);

  r.seconds = since(t0);
  r.passed = grad_err < 1e-4 && asym < 1e-9 && min_eig > -1e-9 && lp_mismatch == 0 && lp_gap < 1e-8 &&
             std::abs(ex - 0.9) < 1e-6;
  r.detail = fmt("MLP grad rel err %.2g; Riccati asym %.2g, min eig %.2g; LP %d optimal, %d status mismatches, gap %.2g; expectile %.9f",
                 grad_err, asym, min_eig, lp_optimal, lp_mismatch, lp_gap, ex);
  return r;
}

void run_pipeline(const fs::path& dir, const RunConfig& cfg) {
  cmd_collect(cfg, dir / "raw.jsonl");
  cmd_relabel(cfg, dir / "raw.jsonl", dir / "relabeled.jsonl");
  cmd_train(cfg, dir / "relabeled.jsonl", dir / "model.json");
  cmd_eval(cfg, {dir / "model.json", dir / "results.json", {}, "model"});
}

CriterionResult determinism(const AcceptanceOptions& o) {
  CriterionResult r{9, "determinism", false, {}, 0.0};
  const auto t0 = Clock::now();
  const bool temporary = o.artifacts.empty();
  const fs::path root = temporary ? fs::temp_directory_path() / fmt("ohio-check-%llu-%lld", static_cast<unsigned long long>(o.seed),
                                                                     static_cast<long long>(Clock::now().time_since_epoch().count()))
                                  : o.artifacts;
  const std::string seed = std::to_string(o.seed);
  const std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> runs = {
      {"linear_bc",
       {{"seed", seed}, {"policy.episodes", "20"}, {"lowlevel.r_weight", "5"}, {"learn.epochs", "20"}, {"eval.episodes", "10"}}},
      {"supply_chain_awr",
       {{"seed", seed}, {"env.kind", "supply_chain"}, {"policy.kind", "order_up_to"}, {"policy.episodes", "6"},
        {"learn.algorithm", "awr"}, {"learn.epochs", "5"}, {"learn.value_sweeps", "2"}, {"eval.episodes", "5"}}}};
  const char* files[] = {"raw.jsonl", "raw.manifest.json", "relabeled.jsonl", "model.json", "model.curve.csv", "results.json"};
  int compared = 0;
  std::vector<std::string> differing;
  for (const auto& [name, overrides] : runs) {
    const RunConfig cfg = RunConfig::load(std::nullopt, overrides, false);
    for (const char* run : {"run_a", "run_b"}) run_pipeline(root / run / name, cfg);
    for (const char* f : files) {
      ++compared;
      if (read_text_file(root / "run_a" / name / f) != read_text_file(root / "run_b" / name / f))
        differing.push_back(name + "/" + f);
    }
  }
  if (temporary) {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  r.seconds = since(t0);
  r.passed = differing.empty();
  r.detail = fmt("seed %llu: %d artifact pairs compared, %zu differ", static_cast<unsigned long long>(o.seed), compared,
                 differing.size());
  for (const auto& d : differing) r.detail += " " + d;
  return r;
}

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceOptions& options) {
  using Fn = CriterionResult (*)(const AcceptanceOptions&);
  static const Fn table[kCriteria] = {exact_linear_recovery, round_trip_identifiability, lp_inverse_consistency,
                                      constraint_safety,     hr_dataset,                 misspecification,
                                      network_learning,      numerics,                   determinism};
  if (id < 1 || id > kCriteria) fail(ErrorCode::Usage, "acceptance criteria are numbered 1.." + std::to_string(kCriteria));
  try {
    return table[id - 1](options);
  } catch (const Error& e) {
    return {id, "criterion " + std::to_string(id), false, std::string("error: ") + e.what(), 0.0};
  }
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
  std::vector<int> ids = options.only;
  if (ids.empty())
    for (int i = 1; i <= kCriteria; ++i) ids.push_back(i);
  std::vector<CriterionResult> out;
  for (int id : ids) {
    out.push_back(run_criterion(id, options));
    if (options.on_result) options.on_result(out.back());
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  return fmt("%s %d %s (%.1f s): ", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds) + r.detail;
}

}  // namespace ohio
