#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ohio/control.hpp"
#include "ohio/core.hpp"
#include "ohio/rng.hpp"

namespace ohio {

enum class InversionMethod { AnalyticOneStep, AnalyticHorizon, AnalyticRegularized, GradientDescent, CEM };

std::string_view to_string(InversionMethod method);
InversionMethod inversion_method_from_string(std::string_view name);

/// Affine map between high-level actions and the unit box [-1, 1]^d used by
/// the numeric inverses.
struct ActionScaling {
  Vec lo;
  Vec hi;
  bool clamp = true;  // keep numeric search inside the box

  Vec half_range() const { return 0.5 * (hi - lo); }
  Vec center() const { return 0.5 * (hi + lo); }
  Vec to_unit(const Vec& u) const { return (u - center()).cwiseQuotient(half_range()); }
  Vec from_unit(const Vec& z) const { return center() + half_range().cwiseProduct(z); }
  void validate() const;
};

struct InversionConfig {
  InversionMethod method = InversionMethod::AnalyticHorizon;
  int horizon = 1;
  double lr = 0.01;
  int max_steps = 10000;
  double early_stop_tol = 1e-5;
  int cem_samples = 50;
  double cem_elite_frac = 0.2;
  int cem_patience = 4;
  double loss_threshold = 0.2;
  double regularizer_weight = 0.0;
  bool per_step_loss = false;
  bool cem_fallback = true;  // rerun CEM when gradient descent ends above loss_threshold
  double fd_eps = 1e-6;
  std::optional<ActionScaling> scaling;

  void validate() const;
};

struct InversionResult {
  HighAction u_hat;
  double loss = 0.0;
  int iterations = 0;
  bool converged = false;
  bool rank_deficient = false;  // minimum-norm solution of a rank-deficient system
  bool used_cem_fallback = false;
  std::optional<ActionScaling> scaling;
  std::vector<double> loss_history;
};

/// Closed-loop sensitivity of the T-step state to the goal under a_l = K_l (x_l - u):
/// x_T = drift - sensitivity * u.
struct HorizonSensitivity {
  Mat sensitivity;  // Phi_1
  Vec drift;        // Phi_2 (includes the affine offsets c_l)
};

HorizonSensitivity closed_loop_sensitivity(std::span<const LinearDynamics> dyn_per_step, const GainSchedule& gains,
                                           const Vec& s);

/// Deterministic rollout of the tracking law; returns x_1 .. x_T.
std::vector<Vec> closed_loop_rollout(std::span<const LinearDynamics> dyn_per_step, const GainSchedule& gains,
                                     const Vec& s, const Vec& u);

/// One-step inverse of the affine law a* = K u + k: u = (BK)^+ (s' - (As + c + Bk)).
InversionResult invert_lqg_analytic(const LinearDynamics& dyn, const AffineGains& gains, const Vec& s,
                                    const Vec& s_next);

/// T-step inverse of the tracking law via the sensitivity recursion:
/// u = -Phi_1^+ (s_T - Phi_2).
InversionResult invert_lqr_horizon_analytic(std::span<const LinearDynamics> dyn_per_step, const GainSchedule& gains,
                                            const Vec& s, const Vec& s_T);

/// Gradient descent on the closed-form rollout loss, started at u = 0 and
/// stopped early; favours small-magnitude goals when the model is inexact.
InversionResult invert_regularized_analytic(std::span<const LinearDynamics> dyn_per_step, const GainSchedule& gains,
                                            const Vec& s, const Vec& s_T, const InversionConfig& config);

/// Low-level controller a = pi(step, x, u).
using LowLevelPolicy = std::function<Vec(int step, const Vec& x, const Vec& u)>;

/// Numeric inverse from states only. `targets` holds the observed states
/// s_1 .. s_T; only the last one enters the loss unless per_step_loss is set.
/// The search starts at u = s_T.
InversionResult invert_numeric_state(const LowLevelPolicy& policy, std::span<const LinearDynamics> dyn_per_step,
                                     const Vec& s, std::span<const Vec> targets, const InversionConfig& config,
                                     SeededRng& rng);

InversionResult invert_numeric_state(const LowLevelPolicy& policy, const LinearDynamics& dyn, const Vec& s,
                                     const Vec& s_T, const InversionConfig& config, SeededRng& rng);

/// Numeric inverse from observed low-level actions, started at u = 0:
/// minimizes sum_i |pi(i, s_i, u) - a_i|^2 + regularizer_weight * |u|^2.
InversionResult invert_numeric_action(const LowLevelPolicy& policy, std::span<const Vec> states,
                                      std::span<const Vec> actions, int goal_dim, const InversionConfig& config,
                                      SeededRng& rng);

}  // namespace ohio
