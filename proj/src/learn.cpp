#include "ohio/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "ohio/optim.hpp"

namespace ohio {

std::string_view to_string(Algorithm a) { return a == Algorithm::BC ? "bc" : "awr"; }

Algorithm algorithm_from_string(std::string_view name) {
  if (name == "bc") return Algorithm::BC;
  if (name == "awr") return Algorithm::AWR;
  fail(ErrorCode::InvalidConfig, "unknown algorithm '" + std::string(name) + "'");
}

void LearnerConfig::validate() const {
  if (!(lr > 0.0)) fail(ErrorCode::InvalidConfig, "lr must be > 0");
  if (batch < 1) fail(ErrorCode::InvalidConfig, "batch must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail(ErrorCode::InvalidConfig, "gamma must lie in [0, 1]");
  if (!(expectile > 0.0 && expectile < 1.0)) fail(ErrorCode::InvalidConfig, "expectile must lie in (0, 1)");
  if (!(beta > 0.0)) fail(ErrorCode::InvalidConfig, "beta must be > 0");
  if (epochs < 1) fail(ErrorCode::InvalidConfig, "epochs must be >= 1");
  if (!(weight_clip > 0.0)) fail(ErrorCode::InvalidConfig, "weight_clip must be > 0");
  for (int h : hidden)
    if (h < 1) fail(ErrorCode::InvalidConfig, "hidden sizes must be >= 1");
  if (value_sweeps < 1 || value_epochs < 1) fail(ErrorCode::InvalidConfig, "value sweeps and epochs must be >= 1");
}

HighAction TrainedPolicy::act(const Vec& observation) const {
  if (observation.size() != net.input_dim())
    fail(ErrorCode::IncompatibleModel, "model expects " + std::to_string(net.input_dim()) + " observation entries, got " +
                                           std::to_string(observation.size()));
  const Vec x = (observation - in_mean).cwiseQuotient(in_scale);
  Vec y = net.forward(x);
  const int lin = static_cast<int>(out_mean.size());
  y.head(lin) = y.head(lin).cwiseProduct(out_scale) + out_mean;
  switch (kind) {
    case HighActionKind::GoalState: return HighAction::goal(y);
    case HighActionKind::Distribution: return HighAction::distribution(y);
    case HighActionKind::MixedProductionDistribution:
      return HighAction::mixed(y.head(production_dim).cwiseMax(0.0), y.tail(y.size() - production_dim));
  }
  fail(ErrorCode::IncompatibleModel, "unknown action kind");
}

HighPolicy TrainedPolicy::as_policy() const {
  return [copy = *this](const Env& env, SeededRng&) { return copy.act(env.observation()); };
}

namespace {

struct Standardizer {
  Vec mean, scale;
};

Standardizer standardize(const Mat& cols) {
  Standardizer s;
  s.mean = cols.rowwise().mean();
  s.scale = Vec(cols.rows());
  for (Eigen::Index r = 0; r < cols.rows(); ++r) {
    const double var = (cols.row(r).array() - s.mean(r)).square().mean();
    s.scale(r) = var > 1e-16 ? std::sqrt(var) : 1.0;
  }
  return s;
}

struct Prepared {
  Mat X, Xnext, Y;
  Vec r;
  std::vector<bool> terminal;
  TrainedPolicy policy;  // standardization and head layout, untrained net
};

Prepared prepare(std::span<const RelabeledSample> data, const LearnerConfig& config, SeededRng& init_rng) {
  config.validate();
  if (data.empty()) fail(ErrorCode::EmptyDataset, "training set is empty");
  const auto& first = data.front();
  const Eigen::Index N = static_cast<Eigen::Index>(data.size());
  const int obs = static_cast<int>(first.s.size());
  const int out = first.u.dim();
  const HighActionKind kind = first.u.kind();
  const int prod = first.u.production_dim();

  Prepared p;
  p.X.resize(obs, N);
  p.Xnext.resize(obs, N);
  p.Y.resize(out, N);
  p.r.resize(N);
  std::map<std::int64_t, std::int64_t> last_t;
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& d = data[i];
    if (d.s.size() != obs || d.s_next.size() != obs || d.u.dim() != out || d.u.kind() != kind)
      fail(ErrorCode::DimMismatch, "sample " + std::to_string(i) + " does not match the first sample's shape");
    p.X.col(i) = d.s;
    p.Xnext.col(i) = d.s_next;
    p.Y.col(i) = d.u.values();
    p.r(i) = d.r;
    auto [it, fresh] = last_t.emplace(d.episode, d.t);
    if (!fresh) it->second = std::max(it->second, d.t);
  }
  p.terminal.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) p.terminal[i] = data[i].t == last_t[data[i].episode];

  const Standardizer in = standardize(p.X);
  p.policy.in_mean = in.mean;
  p.policy.in_scale = in.scale;
  p.X = (p.X.colwise() - in.mean).array().colwise() / in.scale.array();
  p.Xnext = (p.Xnext.colwise() - in.mean).array().colwise() / in.scale.array();

  const int lin = kind == HighActionKind::GoalState ? out : (kind == HighActionKind::Distribution ? 0 : prod);
  if (lin > 0) {
    const Standardizer o = standardize(p.Y.topRows(lin));
    p.policy.out_mean = o.mean;
    p.policy.out_scale = o.scale;
    p.Y.topRows(lin) = (p.Y.topRows(lin).colwise() - o.mean).array().colwise() / o.scale.array();
  } else {
    p.policy.out_mean.resize(0);
    p.policy.out_scale.resize(0);
  }
  p.policy.kind = kind;
  p.policy.production_dim = prod;
  std::vector<int> sizes{obs};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(out);
  const Head head = kind == HighActionKind::GoalState ? Head::Linear
                    : kind == HighActionKind::Distribution ? Head::Softmax
                                                           : Head::Mixed;
  p.policy.net = Mlp(sizes, head, init_rng, prod);
  return p;
}

std::vector<Eigen::Index> shuffled(Eigen::Index n, SeededRng& rng) {
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (Eigen::Index i = n - 1; i > 0; --i)
    std::swap(idx[i], idx[rng.uniform_index(static_cast<std::uint64_t>(i + 1))]);
  return idx;
}

Mat gather(const Mat& M, const std::vector<Eigen::Index>& idx, std::size_t from, std::size_t to) {
  Mat out(M.rows(), static_cast<Eigen::Index>(to - from));
  for (std::size_t k = from; k < to; ++k) out.col(static_cast<Eigen::Index>(k - from)) = M.col(idx[k]);
  return out;
}

Vec gather(const Vec& v, const std::vector<Eigen::Index>& idx, std::size_t from, std::size_t to) {
  Vec out(static_cast<Eigen::Index>(to - from));
  for (std::size_t k = from; k < to; ++k) out(static_cast<Eigen::Index>(k - from)) = v(idx[k]);
  return out;
}

// Mini-batch Adam on the weighted cloning loss.
std::vector<EpochStat> fit_policy(Mlp& net, const Mat& X, const Mat& Y, const Vec& weights, const LearnerConfig& config,
                                  SeededRng& rng) {
  std::vector<EpochStat> curve;
  Adam adam(config.lr);
  Vec params = net.flat_params();
  const Eigen::Index N = X.cols();
  const double mean_weight = weights.mean();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto idx = shuffled(N, rng);
    for (std::size_t from = 0; from < static_cast<std::size_t>(N); from += config.batch) {
      const std::size_t to = std::min<std::size_t>(N, from + config.batch);
      MlpGradient g;
      net.loss_and_gradient(gather(X, idx, from, to), gather(Y, idx, from, to), gather(weights, idx, from, to), &g);
      params += adam.step(net.flatten(g));
      net.set_flat_params(params);
    }
    curve.push_back({epoch, net.loss_and_gradient(X, Y, weights, nullptr), mean_weight});
  }
  return curve;
}

}  // namespace

TrainResult bc_train(std::span<const RelabeledSample> data, const LearnerConfig& config) {
  SeededRng init(config.seed);
  Prepared p = prepare(data, config, init);
  SeededRng order = SeededRng(config.seed).derive(2);
  TrainResult out;
  out.curve = fit_policy(p.policy.net, p.X, p.Y, Vec::Ones(p.X.cols()), config, order);
  out.policy = std::move(p.policy);
  return out;
}

TrainResult awr_train(std::span<const RelabeledSample> data, const LearnerConfig& config) {
  SeededRng init(config.seed);
  Prepared p = prepare(data, config, init);
  const Eigen::Index N = p.X.cols();

  // Rewards are rescaled to unit standard deviation so beta acts on a
  // dataset-independent advantage scale.
  const double r_std = std::sqrt((p.r.array() - p.r.mean()).square().mean());
  const Vec r = p.r / (r_std > 1e-12 ? r_std : 1.0);

  SeededRng value_rng = SeededRng(config.seed).derive(3);
  std::vector<int> sizes{static_cast<int>(p.X.rows())};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(1);
  Mlp value(sizes, Head::Linear, value_rng);
  Vec vparams = value.flat_params();
  Adam vadam(config.lr);

  auto targets_of = [&] {
    const Mat v_next = value.forward(p.Xnext);
    Vec t(N);
    for (Eigen::Index i = 0; i < N; ++i) t(i) = r(i) + (p.terminal[i] ? 0.0 : config.gamma * v_next(0, i));
    return t;
  };

  for (int sweep = 0; sweep < config.value_sweeps; ++sweep) {
    const Vec targets = targets_of();
    for (int epoch = 0; epoch < config.value_epochs; ++epoch) {
      const auto idx = shuffled(N, value_rng);
      for (std::size_t from = 0; from < static_cast<std::size_t>(N); from += config.batch) {
        const std::size_t to = std::min<std::size_t>(N, from + config.batch);
        const Mat xb = gather(p.X, idx, from, to);
        const Mat tb = gather(Mat(targets.transpose()), idx, from, to);
        const Mat vb = value.forward(xb);
        // Expectile loss |tau - 1[delta < 0]| delta^2 as a reweighted squared error.
        Vec w(xb.cols());
        for (Eigen::Index k = 0; k < w.size(); ++k)
          w(k) = tb(0, k) - vb(0, k) < 0.0 ? 1.0 - config.expectile : config.expectile;
        MlpGradient g;
        value.loss_and_gradient(xb, tb, w, &g);
        vparams += vadam.step(value.flatten(g));
        value.set_flat_params(vparams);
      }
    }
  }

  const Vec targets = targets_of();
  const Mat v = value.forward(p.X);
  Vec weights(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const double adv = targets(i) - v(0, i);
    weights(i) = std::min(std::exp(adv / config.beta), config.weight_clip);
  }
  if (!all_finite(weights)) fail(ErrorCode::NonFiniteValue, "advantage weights are non-finite");

  SeededRng order = SeededRng(config.seed).derive(2);
  TrainResult out;
  out.curve = fit_policy(p.policy.net, p.X, p.Y, weights, config, order);
  out.policy = std::move(p.policy);
  return out;
}

TrainResult train(std::span<const RelabeledSample> data, const LearnerConfig& config) {
  return config.algorithm == Algorithm::BC ? bc_train(data, config) : awr_train(data, config);
}

double fit_expectile(std::span<const double> values, double tau) {
  if (values.empty()) fail(ErrorCode::EmptyDataset, "expectile of an empty set");
  if (!(tau > 0.0 && tau < 1.0)) fail(ErrorCode::InvalidArgument, "tau must lie in (0, 1)");
  // The first-order condition sum w_i (x_i - v) = 0 is decreasing in v.
  auto slope = [&](double v) {
    double s = 0.0;
    for (double x : values) s += (x < v ? 1.0 - tau : tau) * (x - v);
    return s;
  };
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (slope(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

EvalResult evaluate_policy(const HighPolicy& policy, Env& env, const LowLevelSpec& spec, int episodes,
                           std::uint64_t seed, double reference) {
  if (episodes < 1) fail(ErrorCode::InvalidArgument, "evaluation needs at least one episode");
  EvalResult r;
  r.seed = seed;
  r.reference = reference;
  for (int i = 0; i < episodes; ++i) r.returns.push_back(run_episode(env, policy, spec, seed + i));
  const double n = static_cast<double>(episodes);
  r.mean = std::accumulate(r.returns.begin(), r.returns.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : r.returns) ss += (x - r.mean) * (x - r.mean);
  r.stddev = episodes > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  if (reference != 0.0) r.normalized = normalized_score(r.mean, reference);
  return r;
}

}  // namespace ohio
