#include "ohio/relabel.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <optional>
#include <thread>

namespace ohio {

std::string_view to_string(RewardSource v) { return v == RewardSource::Observed ? "observed" : "model"; }
std::string_view to_string(RelabelBaseline v) { return v == RelabelBaseline::Ohio ? "ohio" : "observed_state"; }
std::string_view to_string(NetworkInverse v) { return v == NetworkInverse::FlowBalance ? "flow_balance" : "duality"; }

RewardSource reward_source_from_string(std::string_view s) {
  if (s == "observed") return RewardSource::Observed;
  if (s == "model") return RewardSource::Model;
  fail(ErrorCode::InvalidConfig, "unknown reward source '" + std::string(s) + "'");
}

RelabelBaseline relabel_baseline_from_string(std::string_view s) {
  if (s == "ohio") return RelabelBaseline::Ohio;
  if (s == "observed_state") return RelabelBaseline::ObservedState;
  fail(ErrorCode::InvalidConfig, "unknown relabel baseline '" + std::string(s) + "'");
}

NetworkInverse network_inverse_from_string(std::string_view s) {
  if (s == "flow_balance") return NetworkInverse::FlowBalance;
  if (s == "duality") return NetworkInverse::Duality;
  fail(ErrorCode::InvalidConfig, "unknown network inverse '" + std::string(s) + "'");
}

void RelabelConfig::validate() const {
  inversion.validate();
  if (t_abs < 1) fail(ErrorCode::InvalidConfig, "t_abs must be >= 1");
  if (!(loss_threshold >= 0.0)) fail(ErrorCode::InvalidConfig, "loss_threshold must be >= 0");
  if (threads < 0) fail(ErrorCode::InvalidConfig, "threads must be >= 0");
  if (inversion.method == InversionMethod::AnalyticOneStep && t_abs != 1)
    fail(ErrorCode::InvalidConfig, "the one-step analytic inverse needs t_abs = 1");
}

namespace {

struct Window {
  std::size_t first = 0;  // index into raw
  int length = 0;
};

std::vector<Window> make_windows(std::span<const Transition> raw, int t_abs, bool overlap) {
  std::vector<Window> out;
  std::size_t begin = 0;
  while (begin < raw.size()) {
    std::size_t end = begin;
    while (end < raw.size() && raw[end].episode == raw[begin].episode) ++end;
    const std::size_t stride = overlap ? 1 : static_cast<std::size_t>(t_abs);
    for (std::size_t k = begin; k + t_abs <= end; k += stride) out.push_back({k, t_abs});
    begin = end;
  }
  return out;
}

// Runs `job(i)` for i in [0, n) on a small pool; results are written by index
// so the output order never depends on scheduling.
template <typename Job>
void parallel_for(std::size_t n, int threads, const Job& job) {
  unsigned count = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
  count = static_cast<unsigned>(std::min<std::size_t>(count, std::max<std::size_t>(n, 1)));
  if (count <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    try {
      for (std::size_t i = next++; i < n && !failed; i = next++) job(i);
    } catch (...) {
      if (!failed.exchange(true)) error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct WindowResult {
  RelabeledSample sample;
  double loss = 0.0;
  bool cem = false;
  bool rank_deficient = false;
};

RelabelOutput finish(std::vector<WindowResult>& results, const RelabelConfig& config, std::string method,
                     std::chrono::steady_clock::time_point start) {
  RelabelOutput out;
  auto& rep = out.report;
  rep.windows = results.size();
  rep.method = std::move(method);
  double loss_sum = 0.0;
  for (auto& r : results) {
    loss_sum += r.loss;
    rep.max_inv_loss = std::max(rep.max_inv_loss, r.loss);
    rep.cem_fallbacks += r.cem;
    rep.rank_deficient += r.rank_deficient;
    if (r.loss <= config.loss_threshold) out.samples.push_back(std::move(r.sample));
  }
  rep.retained = out.samples.size();
  rep.dropped = rep.windows - rep.retained;
  rep.mean_inv_loss = rep.windows ? loss_sum / rep.windows : 0.0;
  std::stable_sort(out.samples.begin(), out.samples.end(), [](const RelabeledSample& a, const RelabeledSample& b) {
    return a.episode != b.episode ? a.episode < b.episode : a.t < b.t;
  });
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (out.samples.empty())
    fail(ErrorCode::EmptyOutput, "all " + std::to_string(rep.windows) + " windows were filtered out (loss_threshold " +
                                     std::to_string(config.loss_threshold) + ")");
  return out;
}

double observed_reward(std::span<const Transition> raw, const Window& w) {
  double sum = 0.0;
  for (int i = 0; i < w.length; ++i) {
    const auto& tr = raw[w.first + i];
    if (!tr.r) fail(ErrorCode::MissingRewardSource, "record (ep " + std::to_string(tr.episode) + ", t " +
                                                        std::to_string(tr.t) + ") has no reward");
    sum += *tr.r;
  }
  return sum;
}

}  // namespace

RelabelOutput relabel_dataset(std::span<const Transition> raw, const GoalEnv& env, const LowLevelSpec& spec,
                              const RelabelConfig& config, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  spec.validate();
  validate_trajectory(raw);
  if (raw.empty()) fail(ErrorCode::EmptyDataset, "no transitions to relabel");
  const int n = env.observation_dim() / 2;
  if (raw.front().s.size() != env.observation_dim())
    fail(ErrorCode::DimMismatch, "observations do not match " + std::string(to_string(env.kind())));
  const int T = config.t_abs;
  const bool observed_state = config.baseline == RelabelBaseline::ObservedState;

  InversionConfig inv = config.inversion;
  inv.horizon = T;
  if (!inv.scaling && (inv.method == InversionMethod::GradientDescent || inv.method == InversionMethod::CEM))
    inv.scaling = env.goal_box();

  const std::vector<Window> windows = make_windows(raw, T, config.overlap);
  std::vector<WindowResult> results(windows.size());
  const SeededRng base(seed);

  parallel_for(windows.size(), config.threads, [&](std::size_t wi) {
    const Window& w = windows[wi];
    const Transition& head = raw[w.first];
    const Transition& tail = raw[w.first + T - 1];
    std::vector<Vec> xs(T + 1);
    for (int i = 0; i < T; ++i) xs[i] = raw[w.first + i].s.head(n);
    xs[T] = tail.s_next.head(n);

    WindowResult res;
    Vec u_hat;
    std::vector<LinearDynamics> dyn;
    GainSchedule gains;
    if (observed_state) {
      u_hat = xs[T];
    } else {
      dyn.reserve(T);
      for (int i = 0; i < T; ++i) dyn.push_back(env.model_at(xs[i]));
      gains = riccati_gains(dyn.front(), spec.Q(n), spec.R(dyn.front().action_dim()), T);
      InversionResult r;
      switch (inv.method) {
        case InversionMethod::AnalyticOneStep:
        case InversionMethod::AnalyticHorizon: r = invert_lqr_horizon_analytic(dyn, gains, xs[0], xs[T]); break;
        case InversionMethod::AnalyticRegularized: r = invert_regularized_analytic(dyn, gains, xs[0], xs[T], inv); break;
        case InversionMethod::GradientDescent:
        case InversionMethod::CEM: {
          const double bound = env.action_bound();
          const LowLevelPolicy pol = [&gains, bound](int k, const Vec& x, const Vec& u) -> Vec {
            return lqr_tracking_action(gains, k, x, u).cwiseMax(-bound).cwiseMin(bound);
          };
          SeededRng rng = base.derive(wi);
          r = invert_numeric_state(pol, dyn, xs[0], std::span<const Vec>(xs).subspan(1), inv, rng);
          break;
        }
      }
      u_hat = r.u_hat.values();
      res.loss = r.loss;
      res.cem = r.used_cem_fallback;
      res.rank_deficient = r.rank_deficient;
    }

    double reward = 0.0;
    if (config.reward_source == RewardSource::Observed) {
      reward = observed_reward(raw, w);
    } else {
      if (observed_state) {
        dyn.clear();
        for (int i = 0; i < T; ++i) dyn.push_back(env.model_at(xs[i]));
        gains = riccati_gains(dyn.front(), spec.Q(n), spec.R(dyn.front().action_dim()), T);
      }
      const Vec goal = head.s.tail(n);
      Vec x = xs[0];
      for (int k = 0; k < T; ++k) {
        const Vec a = lqr_tracking_action(gains, k, x, u_hat).cwiseMax(-env.action_bound()).cwiseMin(env.action_bound());
        x = dyn[k].step(x, a);
        reward += goal_reward(x, goal, a);
      }
    }
    res.sample = {head.episode, head.t, head.s, HighAction::goal(u_hat), reward, tail.s_next, res.loss};
    results[wi] = std::move(res);
  });

  std::string method = observed_state ? "observed_state" : std::string(to_string(inv.method));
  return finish(results, config, std::move(method), start);
}

HighAction high_action_from_targets(const NetworkProblem& net, const Vec& q_hat, const Vec& w_hat) {
  const int n = net.num_nodes();
  if (!net.is_supply_chain()) {
    const Vec q = q_hat.cwiseMax(0.0);
    const double total = q.sum();
    return HighAction::distribution(total > 0.0 ? Vec(q / total) : Vec::Constant(n, 1.0 / n));
  }
  const int w = net.warehouses().front();
  Vec shares = Vec::Zero(n);
  const double stock = net.q(w);
  if (stock > 0.0) {
    double to_stores = 0.0;
    for (int s : net.stores()) {
      shares(s) = std::max(0.0, q_hat(s)) / stock;
      to_stores += shares(s);
    }
    shares(w) = std::max(0.0, 1.0 - to_stores);
    shares /= shares.sum();
  } else {
    shares(w) = 1.0;
  }
  return HighAction::mixed(Vec::Constant(1, std::max(0.0, w_hat(w))), shares);
}

RelabelOutput relabel_network_dataset(std::span<const Transition> raw, const Env& env, const RelabelConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  validate_trajectory(raw);
  if (raw.empty()) fail(ErrorCode::EmptyDataset, "no transitions to relabel");
  const auto* sc = dynamic_cast<const SupplyChainEnv*>(&env);
  const auto* rt = dynamic_cast<const RoutingEnv*>(&env);
  if (!sc && !rt) fail(ErrorCode::InvalidArgument, "network relabeling needs a network environment");

  std::vector<WindowResult> results(raw.size());
  parallel_for(raw.size(), config.threads, [&](std::size_t i) {
    const Transition& tr = raw[i];
    if (!tr.a) fail(ErrorCode::InvalidArgument, "record " + std::to_string(i) + " has no observed flows");
    if (tr.a->size() != env.action_dim()) fail(ErrorCode::DimMismatch, "record " + std::to_string(i) + " has the wrong action size");
    NetworkProblem net = sc ? sc->network_from_observation(tr.s) : rt->network_from_observation(tr.s);
    const Vec flows = tr.a->head(net.num_edges());
    Vec w_hat = Vec::Zero(net.num_nodes());
    if (sc) w_hat(net.warehouses().front()) = (*tr.a)(net.num_edges());

    WindowResult res;
    Vec q_hat;
    if (config.baseline == RelabelBaseline::ObservedState) {
      // Next observed inventories stand in for the targets; for supply chains
      // the next warehouse stock stands in for production as well.
      q_hat = sc ? sc->network_from_observation(tr.s_next).q : rt->network_from_observation(tr.s_next).q;
      if (sc) w_hat(net.warehouses().front()) = q_hat(net.warehouses().front());
    } else if (config.network_method == NetworkInverse::FlowBalance) {
      q_hat = flow_balance_inverse(net, flows);
    } else {
      net.w_hat = w_hat;
      Vec observed = flows;
      if (sc) {
        observed.conservativeResize(flows.size() + 1);
        observed(flows.size()) = w_hat(net.warehouses().front());
      }
      const DualityInverseResult d = duality_inverse(net, observed);
      q_hat = d.q_hat;
      res.loss = d.epsilon;
    }
    if (!tr.r) fail(ErrorCode::MissingRewardSource, "record " + std::to_string(i) + " has no reward");
    res.sample = {tr.episode, tr.t, tr.s, high_action_from_targets(net, q_hat, w_hat), *tr.r, tr.s_next, res.loss};
    results[i] = std::move(res);
  });
  const std::string method = config.baseline == RelabelBaseline::ObservedState ? "observed_state"
                                                                              : std::string(to_string(config.network_method));
  return finish(results, config, method, start);
}

}  // namespace ohio
