#include "ohio/control.hpp"

#include <cmath>
#include <sstream>

#include "ohio/linalg.hpp"

namespace ohio {

namespace {

constexpr double kMaxInnerCondition = 1e12;

bool is_symmetric(const Mat& m, double tol = 1e-9) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * (1.0 + m.cwiseAbs().maxCoeff());
}

Mat solve_inner(const Mat& inner, const Mat& rhs) {
  const double cond = condition_number(inner);
  if (!(cond <= kMaxInnerCondition)) {
    std::ostringstream os;
    os << "R + B'PB has condition number " << cond;
    fail(ErrorCode::SingularInnerMatrix, os.str());
  }
  Eigen::LLT<Mat> llt(inner);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  return pseudo_inverse(inner).matrix * rhs;
}

}  // namespace

LinearDynamics::LinearDynamics(Mat A_, Mat B_, Vec c_, Mat Sigma_)
    : A(std::move(A_)), B(std::move(B_)), c(std::move(c_)), Sigma(std::move(Sigma_)) {
  if (c.size() == 0) c = Vec::Zero(A.rows());
  if (Sigma.size() == 0) Sigma = Mat::Zero(A.rows(), A.rows());
}

void LinearDynamics::validate() const {
  if (A.rows() == 0 || A.rows() != A.cols()) fail(ErrorCode::DimMismatch, "A must be square and non-empty");
  if (B.rows() != A.rows()) fail(ErrorCode::DimMismatch, "B row count must equal state dimension");
  if (c.size() != A.rows()) fail(ErrorCode::DimMismatch, "offset c must have state dimension");
  if (Sigma.rows() != A.rows() || Sigma.cols() != A.rows())
    fail(ErrorCode::DimMismatch, "Sigma must be n x n");
  if (!A.allFinite() || !B.allFinite() || !c.allFinite() || !Sigma.allFinite())
    fail(ErrorCode::NonFiniteValue, "dynamics contain non-finite entries");
  if (!is_symmetric(Sigma)) fail(ErrorCode::InvalidArgument, "Sigma must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrize(Sigma));
  if (eig.eigenvalues().minCoeff() < -1e-9) fail(ErrorCode::InvalidArgument, "Sigma must be PSD");
}

LinearDynamics double_integrator(int axes, double dt) {
  if (axes < 1 || !(dt > 0.0)) fail(ErrorCode::InvalidConfig, "double integrator needs axes >= 1, dt > 0");
  const int n = 2 * axes;
  Mat A = Mat::Identity(n, n);
  A.topRightCorner(axes, axes) = dt * Mat::Identity(axes, axes);
  Mat B = Mat::Zero(n, axes);
  B.topRows(axes) = 0.5 * dt * dt * Mat::Identity(axes, axes);
  B.bottomRows(axes) = dt * Mat::Identity(axes, axes);
  return LinearDynamics(A, B);
}

GainSchedule riccati_gains(const LinearDynamics& dyn, const Mat& Q, const Mat& R, int horizon) {
  dyn.validate();
  const int n = dyn.state_dim();
  const int m = dyn.action_dim();
  if (horizon < 1) fail(ErrorCode::InvalidArgument, "horizon must be >= 1");
  if (Q.rows() != n || Q.cols() != n) fail(ErrorCode::DimMismatch, "Q must be n x n");
  if (R.rows() != m || R.cols() != m) fail(ErrorCode::DimMismatch, "R must be m x m");
  if (!is_symmetric(Q) || !is_symmetric(R)) fail(ErrorCode::InvalidArgument, "Q and R must be symmetric");

  GainSchedule g;
  g.Ks.assign(horizon, Mat());
  g.Ps.assign(horizon + 1, Mat());
  g.Ps[horizon] = Q;
  for (int t = horizon - 1; t >= 0; --t) {
    const Mat& P = g.Ps[t + 1];
    const Mat inner = R + dyn.B.transpose() * P * dyn.B;
    g.Ks[t] = -solve_inner(inner, dyn.B.transpose() * P * dyn.A);
    g.Ps[t] = symmetrize(Q + dyn.A.transpose() * P * (dyn.A + dyn.B * g.Ks[t]));
  }
  return g;
}

GainSchedule riccati_gains(const LinearDynamics& dyn, const CostMatrices& cost, int horizon) {
  return riccati_gains(dyn, cost.Q, cost.R, horizon);
}

Vec lqr_tracking_action(const GainSchedule& gains, int t, const Vec& s, const Vec& u) {
  if (t < 0 || t >= gains.horizon())
    fail(ErrorCode::IndexOutOfHorizon, "step " + std::to_string(t) + " outside horizon " +
                                           std::to_string(gains.horizon()));
  if (s.size() != u.size() || s.size() != gains.Ks[t].cols())
    fail(ErrorCode::DimMismatch, "state, goal and gain dimensions disagree");
  return gains.Ks[t] * (s - u);
}

AffineGains lqg_affine_gains(const LinearDynamics& dyn, const CostMatrices& cost, const Vec& s) {
  dyn.validate();
  const int n = dyn.state_dim();
  const int m = dyn.action_dim();
  if (cost.M.rows() != m || cost.M.cols() != m || cost.m.size() != m)
    fail(ErrorCode::DimMismatch, "M must be m x m and m_vec length m");
  if (cost.V.rows() != n || cost.V.cols() != n) fail(ErrorCode::DimMismatch, "V must be n x n");
  if (s.size() != n) fail(ErrorCode::DimMismatch, "state dimension mismatch");

  const Mat BtV = dyn.B.transpose() * cost.V;
  const PseudoInverse inv = pseudo_inverse(cost.M + BtV * dyn.B);
  if (inv.rank_deficient) warn("M + B'VB is rank-deficient; using the pseudo-inverse");
  AffineGains g;
  g.K = inv.matrix * BtV;
  g.k = inv.matrix * (cost.M * cost.m - BtV * (dyn.A * s + dyn.c));
  g.rank_deficient = inv.rank_deficient;
  return g;
}

LinearDynamics linearize_fd(const StepFn& step, const Vec& s0, const Vec& a0, double eps) {
  if (!(eps > 0.0)) fail(ErrorCode::InvalidArgument, "finite-difference eps must be positive");
  const Vec f0 = step(s0, a0);
  const Eigen::Index n = s0.size();
  const Eigen::Index m = a0.size();
  if (f0.size() != n) fail(ErrorCode::DimMismatch, "step function changes the state dimension");
  Mat A(n, n), B(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec plus = s0, minus = s0;
    plus(i) += eps;
    minus(i) -= eps;
    A.col(i) = (step(plus, a0) - step(minus, a0)) / (2.0 * eps);
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    Vec plus = a0, minus = a0;
    plus(j) += eps;
    minus(j) -= eps;
    B.col(j) = (step(s0, plus) - step(s0, minus)) / (2.0 * eps);
  }
  if (!A.allFinite() || !B.allFinite() || !f0.allFinite())
    fail(ErrorCode::NonFiniteJacobian, "finite-difference Jacobian is non-finite");
  Vec c = f0 - A * s0 - B * a0;
  return LinearDynamics(std::move(A), std::move(B), std::move(c));
}

DynamicsFit fit_linear_dynamics(std::span<const Transition> data, int state_dim) {
  if (data.empty()) fail(ErrorCode::EmptyDataset, "no transitions to fit");
  const int n = state_dim < 0 ? static_cast<int>(data.front().s.size()) : state_dim;
  if (!data.front().a) fail(ErrorCode::InvalidArgument, "dynamics fitting requires observed actions");
  const int m = static_cast<int>(data.front().a->size());
  const int p = n + m + 1;
  const auto rows = static_cast<Eigen::Index>(data.size());
  if (rows < p)
    fail(ErrorCode::InvalidArgument, "need at least n + m + 1 = " + std::to_string(p) + " transitions");

  Mat X(rows, p);
  Mat Y(rows, n);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Transition& tr = data[static_cast<std::size_t>(i)];
    if (!tr.a || tr.a->size() != m) fail(ErrorCode::DimMismatch, "record " + std::to_string(i) + ": action missing or wrong size");
    if (tr.s.size() < n || tr.s_next.size() < n) fail(ErrorCode::DimMismatch, "record " + std::to_string(i) + ": state too short");
    X.row(i).head(n) = tr.s.head(n).transpose();
    X.row(i).segment(n, m) = tr.a->transpose();
    X(i, p - 1) = 1.0;
    Y.row(i) = tr.s_next.head(n).transpose();
  }

  Eigen::CompleteOrthogonalDecomposition<Mat> cod;
  cod.setThreshold(1e-10);
  cod.compute(X);
  const Mat W = cod.solve(Y);  // p x n, minimum-norm when rank-deficient

  DynamicsFit fit;
  fit.rank = static_cast<int>(cod.rank());
  fit.rank_deficient = fit.rank < p;
  if (fit.rank_deficient)
    warn("RankDeficientRegressors: regressor rank " + std::to_string(fit.rank) + " < " + std::to_string(p));

  const Mat theta = W.transpose();  // n x p
  const Mat residual = Y - X * W;
  const Mat centered = residual.rowwise() - residual.colwise().mean();
  Mat Sigma = symmetrize(centered.transpose() * centered / static_cast<double>(rows));
  fit.dyn = LinearDynamics(theta.leftCols(n), theta.middleCols(n, m), theta.col(p - 1), Sigma);
  return fit;
}

}  // namespace ohio
