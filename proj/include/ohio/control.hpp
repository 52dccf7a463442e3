#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ohio/core.hpp"

namespace ohio {

/// s' ~ N(A s + B a + c, Sigma).
struct LinearDynamics {
  Mat A;
  Mat B;
  Vec c;
  Mat Sigma;  // zero when noise-free

  LinearDynamics() = default;
  LinearDynamics(Mat A, Mat B, Vec c = Vec(), Mat Sigma = Mat());

  int state_dim() const { return static_cast<int>(A.rows()); }
  int action_dim() const { return static_cast<int>(B.cols()); }

  Vec step(const Vec& s, const Vec& a) const { return A * s + B * a + c; }

  // Throws DimMismatch / InvalidArgument when the invariants do not hold.
  void validate() const;
};

/// Position/velocity double integrator with zero-order-hold actions. State
/// layout is all positions, then all velocities.
LinearDynamics double_integrator(int axes, double dt);

struct CostMatrices {
  Mat Q;  // state cost (LQR tracking)
  Mat R;  // control cost (LQR tracking)
  Mat M;  // action regularizer (LQG)
  Vec m;  // action target (LQG)
  Mat V;  // goal-tracking weight (LQG)
};

/// Time-varying LQR gains for the tracking law a_t = K_t (s_t - u).
struct GainSchedule {
  std::vector<Mat> Ks;  // K_0 .. K_{T-1}
  std::vector<Mat> Ps;  // P_0 .. P_T, with P_T = Q

  int horizon() const { return static_cast<int>(Ks.size()); }
};

/// Goal-attracting affine law a* = K u + k (gains depend on the current state).
struct AffineGains {
  Mat K;
  Vec k;
  bool rank_deficient = false;
};

/// Backward Riccati recursion
///   K_t = -(R + B'P_{t+1}B)^-1 B'P_{t+1}A,   P_t = Q + A'P_{t+1}(A + B K_t).
/// Throws SingularInnerMatrix when R + B'PB has condition number above 1e12.
GainSchedule riccati_gains(const LinearDynamics& dyn, const Mat& Q, const Mat& R, int horizon);
GainSchedule riccati_gains(const LinearDynamics& dyn, const CostMatrices& cost, int horizon);

Vec lqr_tracking_action(const GainSchedule& gains, int t, const Vec& s, const Vec& u);

AffineGains lqg_affine_gains(const LinearDynamics& dyn, const CostMatrices& cost, const Vec& s);

inline Vec lqg_affine_action(const AffineGains& gains, const Vec& u) { return gains.K * u + gains.k; }

using StepFn = std::function<Vec(const Vec& s, const Vec& a)>;

/// Central-difference linearization around (s0, a0); c is the affine remainder
/// so the model is exact at the expansion point.
LinearDynamics linearize_fd(const StepFn& step, const Vec& s0, const Vec& a0, double eps = 1e-5);

struct DynamicsFit {
  LinearDynamics dyn;
  int rank = 0;
  bool rank_deficient = false;
};

/// Ordinary least squares for [A B c] over transitions with actions. Only the
/// leading `state_dim` entries of each state are regressed (observations may
/// carry a goal suffix); state_dim < 0 uses the full state.
DynamicsFit fit_linear_dynamics(std::span<const Transition> data, int state_dim = -1);

}  // namespace ohio
