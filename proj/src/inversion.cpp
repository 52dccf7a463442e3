#include "ohio/inversion.hpp"

#include <algorithm>
#include <cmath>

#include "ohio/linalg.hpp"
#include "ohio/optim.hpp"

namespace ohio {

std::string_view to_string(InversionMethod method) {
  switch (method) {
    case InversionMethod::AnalyticOneStep: return "analytic_one_step";
    case InversionMethod::AnalyticHorizon: return "analytic_horizon";
    case InversionMethod::AnalyticRegularized: return "analytic_regularized";
    case InversionMethod::GradientDescent: return "gradient_descent";
    case InversionMethod::CEM: return "cem";
  }
  return "analytic_horizon";
}

InversionMethod inversion_method_from_string(std::string_view name) {
  for (auto m : {InversionMethod::AnalyticOneStep, InversionMethod::AnalyticHorizon,
                 InversionMethod::AnalyticRegularized, InversionMethod::GradientDescent, InversionMethod::CEM}) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorCode::InvalidConfig, "unknown inversion method '" + std::string(name) + "'");
}

void ActionScaling::validate() const {
  if (lo.size() == 0 || lo.size() != hi.size()) fail(ErrorCode::DimMismatch, "scaling bounds must match in size");
  if (!((hi - lo).array() > 0.0).all()) fail(ErrorCode::InvalidConfig, "scaling needs hi > lo in every dimension");
}

void InversionConfig::validate() const {
  if (horizon < 1) fail(ErrorCode::InvalidConfig, "inversion horizon must be >= 1");
  if (!(lr > 0.0)) fail(ErrorCode::InvalidConfig, "inversion lr must be positive");
  if (max_steps < 0) fail(ErrorCode::InvalidConfig, "max_steps must be >= 0");
  if (!(cem_elite_frac > 0.0 && cem_elite_frac <= 1.0)) fail(ErrorCode::InvalidConfig, "cem_elite_frac must lie in (0, 1]");
  if (cem_samples < 1 || cem_patience < 1) fail(ErrorCode::InvalidConfig, "cem_samples and cem_patience must be >= 1");
  if (regularizer_weight < 0.0) fail(ErrorCode::InvalidConfig, "regularizer_weight must be >= 0");
  if (scaling) scaling->validate();
}

namespace {

void check_window(std::span<const LinearDynamics> dyn, const GainSchedule& gains, const Vec& s) {
  if (dyn.empty()) fail(ErrorCode::InvalidArgument, "window needs at least one dynamics step");
  if (static_cast<int>(dyn.size()) != gains.horizon())
    fail(ErrorCode::DimMismatch, "gain horizon " + std::to_string(gains.horizon()) + " != window length " +
                                     std::to_string(dyn.size()));
  if (s.size() != dyn.front().state_dim()) fail(ErrorCode::DimMismatch, "state dimension mismatch");
}

double squared(const Vec& v) { return v.squaredNorm(); }

}  // namespace

HorizonSensitivity closed_loop_sensitivity(std::span<const LinearDynamics> dyn, const GainSchedule& gains,
                                           const Vec& s) {
  check_window(dyn, gains, s);
  HorizonSensitivity h;
  const Mat BK0 = dyn[0].B * gains.Ks[0];
  h.sensitivity = BK0;
  h.drift = (dyn[0].A + BK0) * s + dyn[0].c;
  for (std::size_t l = 1; l < dyn.size(); ++l) {
    const Mat BK = dyn[l].B * gains.Ks[l];
    const Mat closed = dyn[l].A + BK;
    h.sensitivity = closed * h.sensitivity + BK;
    h.drift = closed * h.drift + dyn[l].c;
  }
  return h;
}

std::vector<Vec> closed_loop_rollout(std::span<const LinearDynamics> dyn, const GainSchedule& gains, const Vec& s,
                                     const Vec& u) {
  check_window(dyn, gains, s);
  std::vector<Vec> path;
  path.reserve(dyn.size());
  Vec x = s;
  for (std::size_t l = 0; l < dyn.size(); ++l) {
    x = dyn[l].step(x, gains.Ks[l] * (x - u));
    path.push_back(x);
  }
  return path;
}

InversionResult invert_lqg_analytic(const LinearDynamics& dyn, const AffineGains& gains, const Vec& s,
                                    const Vec& s_next) {
  if (s.size() != dyn.state_dim() || s_next.size() != dyn.state_dim())
    fail(ErrorCode::DimMismatch, "state dimension mismatch");
  const Mat BK = dyn.B * gains.K;
  const PseudoInverse inv = pseudo_inverse(BK);
  const Vec u = inv.matrix * (s_next - (dyn.A * s + dyn.c + dyn.B * gains.k));
  InversionResult r;
  r.u_hat = HighAction::goal(u);
  r.loss = squared(dyn.A * s + dyn.B * (gains.K * u + gains.k) + dyn.c - s_next);
  r.converged = true;
  r.rank_deficient = inv.rank_deficient;
  return r;
}

InversionResult invert_lqr_horizon_analytic(std::span<const LinearDynamics> dyn, const GainSchedule& gains,
                                            const Vec& s, const Vec& s_T) {
  const HorizonSensitivity h = closed_loop_sensitivity(dyn, gains, s);
  if (s_T.size() != h.drift.size()) fail(ErrorCode::DimMismatch, "target state dimension mismatch");
  const PseudoInverse inv = pseudo_inverse(h.sensitivity);
  const Vec u = -inv.matrix * (s_T - h.drift);
  InversionResult r;
  r.u_hat = HighAction::goal(u);
  r.loss = squared(closed_loop_rollout(dyn, gains, s, u).back() - s_T);
  r.converged = true;
  r.rank_deficient = inv.rank_deficient;
  return r;
}

InversionResult invert_regularized_analytic(std::span<const LinearDynamics> dyn, const GainSchedule& gains,
                                            const Vec& s, const Vec& s_T, const InversionConfig& config) {
  config.validate();
  const HorizonSensitivity h = closed_loop_sensitivity(dyn, gains, s);
  if (s_T.size() != h.drift.size()) fail(ErrorCode::DimMismatch, "target state dimension mismatch");
  const Mat& phi = h.sensitivity;
  const Vec offset = s_T - h.drift;  // loss(u) = |phi u + offset|^2

  // Plain gradient descent from zero; the step is capped at 1/L so the
  // iterates grow monotonically towards the minimum-norm solution.
  Eigen::JacobiSVD<Mat> svd(phi);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  const double step = smax > 0.0 ? std::min(config.lr, 1.0 / (2.0 * smax * smax)) : config.lr;

  Vec u = Vec::Zero(phi.cols());
  double loss = squared(phi * u + offset);
  InversionResult r;
  r.loss_history.push_back(loss);
  int it = 0;
  for (; it < config.max_steps && loss > config.early_stop_tol; ++it) {
    const Vec grad = 2.0 * phi.transpose() * (phi * u + offset);
    if (!grad.allFinite()) fail(ErrorCode::NonFiniteGradient, "rollout-loss gradient is non-finite");
    u -= step * grad;
    loss = squared(phi * u + offset);
    r.loss_history.push_back(loss);
  }
  r.u_hat = HighAction::goal(u);
  r.loss = squared(closed_loop_rollout(dyn, gains, s, u).back() - s_T);
  r.iterations = it;
  r.converged = it > 0 && loss <= config.early_stop_tol;
  return r;
}

namespace {

// Numeric search runs in the unit box when a scaling is configured.
struct SearchSpace {
  std::optional<ActionScaling> scaling;
  int dim;

  Vec to_search(const Vec& u) const { return scaling ? scaling->to_unit(u) : u; }
  Vec to_action(const Vec& z) const { return scaling ? scaling->from_unit(z) : z; }
  std::optional<Box> box() const {
    if (!scaling || !scaling->clamp) return std::nullopt;
    return Box{Vec::Constant(dim, -1.0), Vec::Constant(dim, 1.0)};
  }
};

InversionResult run_numeric(const Objective& loss_of_u, const SearchSpace& space, const Vec& u0,
                            const InversionConfig& config, SeededRng& rng) {
  if (config.method != InversionMethod::GradientDescent && config.method != InversionMethod::CEM)
    fail(ErrorCode::InvalidConfig, "numeric inversion needs method gradient_descent or cem");
  const Objective in_space = [&](const Vec& z) { return loss_of_u(space.to_action(z)); };
  const Vec z0 = space.to_search(u0);

  InversionResult r;
  r.scaling = space.scaling;
  OptimResult best;
  if (config.method == InversionMethod::GradientDescent) {
    GradientOptions go;
    go.lr = config.lr;
    go.max_steps = config.max_steps;
    go.tol = config.early_stop_tol;
    go.fd_eps = config.fd_eps;
    go.box = space.box();
    best = adam_minimize(in_space, z0, go);
  }
  const bool run_cem = config.method == InversionMethod::CEM ||
                       (config.cem_fallback && config.method == InversionMethod::GradientDescent &&
                        best.loss > config.loss_threshold);
  if (run_cem) {
    CemOptions co;
    co.samples = config.cem_samples;
    co.elite_frac = config.cem_elite_frac;
    co.patience = config.cem_patience;
    co.max_iterations = config.max_steps;
    co.tol = config.early_stop_tol;
    co.box = space.box();
    OptimResult cem = cem_minimize(in_space, z0, Vec::Ones(z0.size()), co, rng);
    if (config.method == InversionMethod::CEM || cem.loss < best.loss) {
      r.used_cem_fallback = config.method == InversionMethod::GradientDescent;
      cem.iterations += best.iterations;
      best = std::move(cem);
    }
  }

  r.u_hat = HighAction::goal(space.to_action(best.x));
  r.loss = best.loss;
  r.iterations = best.iterations;
  r.converged = best.converged;
  r.loss_history = std::move(best.history);
  return r;
}

}  // namespace

InversionResult invert_numeric_state(const LowLevelPolicy& policy, std::span<const LinearDynamics> dyn,
                                     const Vec& s, std::span<const Vec> targets, const InversionConfig& config,
                                     SeededRng& rng) {
  config.validate();
  if (dyn.empty() || targets.empty()) fail(ErrorCode::InvalidArgument, "empty window");
  const bool per_step = config.per_step_loss;
  if (per_step && targets.size() != dyn.size())
    fail(ErrorCode::DimMismatch, "per-step loss needs one observed state per dynamics step");
  const Vec& s_T = targets.back();
  const int n = static_cast<int>(s.size());
  if (s_T.size() != n) fail(ErrorCode::DimMismatch, "target state dimension mismatch");

  SearchSpace space{config.scaling, n};
  if (space.scaling && space.scaling->lo.size() != n)
    fail(ErrorCode::DimMismatch, "scaling must have the goal-state dimension");
  const Vec weight = space.scaling ? Vec(space.scaling->half_range().cwiseInverse()) : Vec::Ones(n);

  const Objective loss_of_u = [&](const Vec& u) {
    Vec x = s;
    double loss = 0.0;
    for (std::size_t i = 0; i < dyn.size(); ++i) {
      x = dyn[i].step(x, policy(static_cast<int>(i), x, u));
      if (per_step) loss += (x - targets[i]).cwiseProduct(weight).squaredNorm();
    }
    if (!per_step) loss = (x - s_T).cwiseProduct(weight).squaredNorm();
    return loss + config.regularizer_weight * u.squaredNorm();
  };
  return run_numeric(loss_of_u, space, s_T, config, rng);
}

InversionResult invert_numeric_state(const LowLevelPolicy& policy, const LinearDynamics& dyn, const Vec& s,
                                     const Vec& s_T, const InversionConfig& config, SeededRng& rng) {
  const std::vector<LinearDynamics> per_step(static_cast<std::size_t>(config.horizon), dyn);
  const Vec targets[1] = {s_T};
  InversionConfig terminal = config;
  terminal.per_step_loss = false;
  return invert_numeric_state(policy, per_step, s, std::span<const Vec>(targets, 1), terminal, rng);
}

InversionResult invert_numeric_action(const LowLevelPolicy& policy, std::span<const Vec> states,
                                      std::span<const Vec> actions, int goal_dim, const InversionConfig& config,
                                      SeededRng& rng) {
  config.validate();
  if (states.empty() || states.size() != actions.size())
    fail(ErrorCode::DimMismatch, "state and action sequences must be non-empty and of equal length");
  if (goal_dim < 1) fail(ErrorCode::InvalidArgument, "goal dimension must be >= 1");
  SearchSpace space{config.scaling, goal_dim};
  if (space.scaling && space.scaling->lo.size() != goal_dim)
    fail(ErrorCode::DimMismatch, "scaling must have the goal dimension");

  const Objective loss_of_u = [&](const Vec& u) {
    double loss = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i)
      loss += (policy(static_cast<int>(i), states[i], u) - actions[i]).squaredNorm();
    return loss + config.regularizer_weight * u.squaredNorm();
  };
  return run_numeric(loss_of_u, space, Vec::Zero(goal_dim), config, rng);
}

}  // namespace ohio
