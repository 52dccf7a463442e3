#include "ohio/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace ohio {

std::string_view to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "infeasible";
}

LpProblem LpProblem::normalized() const {
  LpProblem p = *this;
  const int n = num_vars();
  if (p.lo.size() == 0) p.lo = Vec::Zero(n);
  if (p.hi.size() == 0) p.hi = Vec::Constant(n, std::numeric_limits<double>::infinity());
  if (p.A_ub.size() == 0 && p.b_ub.size() == 0) p.A_ub.resize(0, n);
  if (p.A_eq.size() == 0 && p.b_eq.size() == 0) p.A_eq.resize(0, n);
  return p;
}

void LpProblem::validate() const {
  const int n = num_vars();
  if (n == 0) fail(ErrorCode::InvalidArgument, "LP has no variables");
  if (!c.allFinite()) fail(ErrorCode::NonFiniteValue, "LP objective must be finite");
  if (A_ub.rows() != b_ub.size() || (A_ub.rows() > 0 && A_ub.cols() != n))
    fail(ErrorCode::DimMismatch, "A_ub/b_ub shape mismatch");
  if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != n))
    fail(ErrorCode::DimMismatch, "A_eq/b_eq shape mismatch");
  if ((lo.size() != 0 && lo.size() != n) || (hi.size() != 0 && hi.size() != n))
    fail(ErrorCode::DimMismatch, "bound vectors must have one entry per variable");
  if (!A_ub.allFinite() || !b_ub.allFinite() || !A_eq.allFinite() || !b_eq.allFinite())
    fail(ErrorCode::NonFiniteValue, "LP constraint data must be finite");
  for (int j = 0; j < lo.size(); ++j) {
    if (std::isnan(lo(j)) || lo(j) == std::numeric_limits<double>::infinity())
      fail(ErrorCode::InvalidArgument, "invalid lower bound on variable " + std::to_string(j));
  }
  for (int j = 0; j < hi.size(); ++j) {
    if (std::isnan(hi(j)) || hi(j) == -std::numeric_limits<double>::infinity())
      fail(ErrorCode::InvalidArgument, "invalid upper bound on variable " + std::to_string(j));
  }
}

namespace {

enum class VarMap { Shift, Mirror, Split };

struct StandardForm {
  // Original variable j maps to column col[j] (and col[j] + 1 for Split).
  std::vector<VarMap> map;
  std::vector<int> col;
  std::vector<double> offset;
  std::vector<int> bound_row;  // row index of y_j <= hi - lo, or -1
  int m_ub = 0, m_eq = 0, m_bound = 0;
  int n_struct = 0;  // structural columns before slacks
  Mat A;             // rows x columns, slacks included
  Vec b;
  Vec c;
  double c0 = 0.0;
  std::vector<double> sign;  // +1, or -1 when the row was negated to make b >= 0
};

StandardForm to_standard(const LpProblem& p) {
  const int n = p.num_vars();
  StandardForm sf;
  sf.map.resize(n);
  sf.col.resize(n);
  sf.offset.assign(n, 0.0);
  sf.bound_row.assign(n, -1);
  int cols = 0;
  for (int j = 0; j < n; ++j) {
    const bool lo_fin = std::isfinite(p.lo(j));
    const bool hi_fin = std::isfinite(p.hi(j));
    sf.col[j] = cols;
    if (lo_fin) {
      sf.map[j] = VarMap::Shift;
      sf.offset[j] = p.lo(j);
      cols += 1;
      if (hi_fin) sf.bound_row[j] = sf.m_bound++;
    } else if (hi_fin) {
      sf.map[j] = VarMap::Mirror;
      sf.offset[j] = p.hi(j);
      cols += 1;
    } else {
      sf.map[j] = VarMap::Split;
      cols += 2;
    }
  }
  sf.n_struct = cols;
  sf.m_ub = static_cast<int>(p.A_ub.rows());
  sf.m_eq = static_cast<int>(p.A_eq.rows());
  const int m = sf.m_ub + sf.m_eq + sf.m_bound;
  const int total = cols + sf.m_ub + sf.m_bound;
  sf.A = Mat::Zero(m, total);
  sf.b = Vec::Zero(m);
  sf.c = Vec::Zero(total);

  auto place = [&](int row, const Eigen::Ref<const Eigen::RowVectorXd>& coeffs, double rhs) {
    double shifted = rhs;
    for (int j = 0; j < n; ++j) {
      const double a = coeffs(j);
      if (a == 0.0) continue;
      switch (sf.map[j]) {
        case VarMap::Shift: sf.A(row, sf.col[j]) += a; break;
        case VarMap::Mirror: sf.A(row, sf.col[j]) -= a; break;
        case VarMap::Split:
          sf.A(row, sf.col[j]) += a;
          sf.A(row, sf.col[j] + 1) -= a;
          break;
      }
      shifted -= a * sf.offset[j];
    }
    sf.b(row) = shifted;
  };
  for (int i = 0; i < sf.m_ub; ++i) {
    place(i, p.A_ub.row(i), p.b_ub(i));
    sf.A(i, cols + i) = 1.0;
  }
  for (int i = 0; i < sf.m_eq; ++i) place(sf.m_ub + i, p.A_eq.row(i), p.b_eq(i));
  for (int j = 0; j < n; ++j) {
    if (sf.bound_row[j] < 0) continue;
    const int row = sf.m_ub + sf.m_eq + sf.bound_row[j];
    sf.A(row, sf.col[j]) = 1.0;
    sf.A(row, cols + sf.m_ub + sf.bound_row[j]) = 1.0;
    sf.b(row) = p.hi(j) - p.lo(j);
  }
  for (int j = 0; j < n; ++j) {
    switch (sf.map[j]) {
      case VarMap::Shift: sf.c(sf.col[j]) = p.c(j); break;
      case VarMap::Mirror: sf.c(sf.col[j]) = -p.c(j); break;
      case VarMap::Split:
        sf.c(sf.col[j]) = p.c(j);
        sf.c(sf.col[j] + 1) = -p.c(j);
        break;
    }
    sf.c0 += p.c(j) * sf.offset[j];
  }
  sf.sign.assign(m, 1.0);
  for (int i = 0; i < m; ++i) {
    if (sf.b(i) < 0.0) {
      sf.A.row(i) *= -1.0;
      sf.b(i) = -sf.b(i);
      sf.sign[i] = -1.0;
    }
  }
  return sf;
}

Vec to_original(const StandardForm& sf, const Vec& y, bool direction) {
  const int n = static_cast<int>(sf.map.size());
  Vec x(n);
  for (int j = 0; j < n; ++j) {
    const double base = direction ? 0.0 : sf.offset[j];
    switch (sf.map[j]) {
      case VarMap::Shift: x(j) = base + y(sf.col[j]); break;
      case VarMap::Mirror: x(j) = base - y(sf.col[j]); break;
      case VarMap::Split: x(j) = y(sf.col[j]) - y(sf.col[j] + 1); break;
    }
  }
  return x;
}

// Dense tableau: rows 0..m-1 are constraints, row m holds reduced costs; the
// last column is the right-hand side (row m stores minus the objective).
class Tableau {
 public:
  Tableau(const StandardForm& sf, double tol, int max_pivots)
      : m_(static_cast<int>(sf.A.rows())), n_(static_cast<int>(sf.A.cols())), tol_(tol), max_pivots_(max_pivots) {
    T_ = Mat::Zero(m_ + 1, n_ + m_ + 1);
    T_.block(0, 0, m_, n_) = sf.A;
    T_.block(0, n_, m_, m_).setIdentity();
    T_.block(0, n_ + m_, m_, 1) = sf.b;
    basis_.resize(m_);
    for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;
  }

  int rhs() const { return n_ + m_; }
  bool is_artificial(int col) const { return col >= n_; }

  void set_costs(const Vec& costs) {  // costs over all n_ + m_ columns
    T_.row(m_).setZero();
    T_.row(m_).head(n_ + m_) = costs.transpose();
    for (int i = 0; i < m_; ++i) {
      const double cb = costs(basis_[i]);
      if (cb != 0.0) T_.row(m_) -= cb * T_.row(i);
    }
  }

  enum class Outcome { Optimal, Unbounded };

  // Bland's rule: lowest-index improving column, ties in the ratio test go to
  // the lowest basic index.
  Outcome optimize(bool allow_artificial, int& entering_out) {
    while (true) {
      int enter = -1;
      const int limit = allow_artificial ? n_ + m_ : n_;
      for (int j = 0; j < limit; ++j) {
        if (T_(m_, j) < -tol_) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return Outcome::Optimal;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        const double a = T_(i, enter);
        if (a <= tol_) continue;
        const double ratio = T_(i, rhs()) / a;
        const bool better = leave < 0 || ratio < best - tol_ ||
                            (ratio <= best + tol_ && basis_[i] < basis_[leave]);
        if (better) {
          best = leave < 0 ? ratio : std::min(best, ratio);
          leave = i;
        }
      }
      if (leave < 0) {
        entering_out = enter;
        return Outcome::Unbounded;
      }
      pivot(leave, enter);
    }
  }

  void pivot(int row, int col) {
    if (++pivots_ > max_pivots_)
      fail(ErrorCode::NumericalBreakdown, "simplex exceeded " + std::to_string(max_pivots_) + " pivots");
    const double p = T_(row, col);
    T_.row(row) /= p;
    for (int i = 0; i <= m_; ++i) {
      if (i == row) continue;
      const double f = T_(i, col);
      if (f != 0.0) T_.row(i) -= f * T_.row(row);
    }
    T_(row, col) = 1.0;
    basis_[row] = col;
  }

  // Pivots basic artificials out where a structural column allows it. Rows
  // where none does are redundant and keep their artificial at zero.
  void drive_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[i])) continue;
      for (int j = 0; j < n_; ++j) {
        if (std::abs(T_(i, j)) > 1e-7) {
          pivot(i, j);
          break;
        }
      }
    }
  }

  Vec solution() const {
    Vec y = Vec::Zero(n_ + m_);
    for (int i = 0; i < m_; ++i) y(basis_[i]) = T_(i, rhs());
    return y;
  }

  Vec ray(int enter) const {
    Vec d = Vec::Zero(n_ + m_);
    d(enter) = 1.0;
    for (int i = 0; i < m_; ++i) d(basis_[i]) = -T_(i, enter);
    return d;
  }

  double objective() const { return -T_(m_, rhs()); }
  // Row multipliers y with B'y = c_B, read off the artificial columns.
  Vec row_duals(const Vec& costs) const {
    Vec y(m_);
    for (int i = 0; i < m_; ++i) y(i) = costs(n_ + i) - T_(m_, n_ + i);
    return y;
  }
  int pivots() const { return pivots_; }
  int rows() const { return m_; }

 private:
  int m_, n_;
  double tol_;
  int max_pivots_;
  int pivots_ = 0;
  Mat T_;
  std::vector<int> basis_;
};

}  // namespace

LpSolution solve_lp(const LpProblem& problem, const LpOptions& options) {
  problem.validate();
  const LpProblem p = problem.normalized();
  const int n = p.num_vars();
  for (int j = 0; j < n; ++j) {
    if (p.lo(j) > p.hi(j)) {
      LpSolution s;
      s.status = LpStatus::Infeasible;
      s.x = Vec::Zero(n);
      return s;
    }
  }
  const StandardForm sf = to_standard(p);
  const int m = static_cast<int>(sf.A.rows());
  const int ns = static_cast<int>(sf.A.cols());
  Tableau tab(sf, options.tol, options.max_pivots);

  LpSolution sol;
  sol.duals_ub = Vec::Zero(sf.m_ub);
  sol.duals_eq = Vec::Zero(sf.m_eq);
  sol.bound_lo = Vec::Zero(n);
  sol.bound_hi = Vec::Zero(n);

  // Phase one: minimize the sum of artificials.
  Vec phase1 = Vec::Zero(ns + m);
  phase1.tail(m).setOnes();
  tab.set_costs(phase1);
  int enter = -1;
  tab.optimize(true, enter);
  const double scale = std::max(1.0, sf.b.size() ? sf.b.cwiseAbs().maxCoeff() : 0.0);
  if (tab.objective() > 1e-7 * scale) {
    sol.status = LpStatus::Infeasible;
    const Vec y = tab.row_duals(phase1);
    sol.certificate.resize(sf.m_ub + sf.m_eq);
    for (int i = 0; i < sf.m_ub + sf.m_eq; ++i) sol.certificate(i) = sf.sign[i] * y(i);
    sol.x = to_original(sf, tab.solution().head(ns), false);
    sol.pivots = tab.pivots();
    return sol;
  }
  tab.drive_out_artificials();

  Vec phase2 = Vec::Zero(ns + m);
  phase2.head(ns) = sf.c;
  tab.set_costs(phase2);
  if (tab.optimize(false, enter) == Tableau::Outcome::Unbounded) {
    sol.status = LpStatus::Unbounded;
    sol.certificate = to_original(sf, tab.ray(enter).head(ns), true);
    sol.x = to_original(sf, tab.solution().head(ns), false);
    sol.pivots = tab.pivots();
    return sol;
  }

  sol.status = LpStatus::Optimal;
  sol.x = to_original(sf, tab.solution().head(ns), false);
  for (int j = 0; j < n; ++j) {  // snap onto bounds lost to rounding
    if (std::isfinite(p.lo(j)) && sol.x(j) < p.lo(j)) sol.x(j) = p.lo(j);
    if (std::isfinite(p.hi(j)) && sol.x(j) > p.hi(j)) sol.x(j) = p.hi(j);
  }
  sol.objective_value = p.c.dot(sol.x);
  sol.pivots = tab.pivots();

  const Vec y = tab.row_duals(phase2);
  for (int i = 0; i < sf.m_ub; ++i) sol.duals_ub(i) = sf.sign[i] * y(i);
  for (int i = 0; i < sf.m_eq; ++i) sol.duals_eq(i) = sf.sign[sf.m_ub + i] * y(sf.m_ub + i);
  Vec reduced = p.c;
  if (sf.m_ub) reduced -= p.A_ub.transpose() * sol.duals_ub;
  if (sf.m_eq) reduced -= p.A_eq.transpose() * sol.duals_eq;
  for (int j = 0; j < n; ++j) {
    const bool lo_fin = std::isfinite(p.lo(j));
    const bool hi_fin = std::isfinite(p.hi(j));
    if (lo_fin && hi_fin) {
      const int row = sf.m_ub + sf.m_eq + sf.bound_row[j];
      sol.bound_hi(j) = sf.sign[row] * y(row);
      sol.bound_lo(j) = reduced(j) - sol.bound_hi(j);
    } else if (lo_fin) {
      sol.bound_lo(j) = reduced(j);
    } else if (hi_fin) {
      sol.bound_hi(j) = reduced(j);
    }
  }
  return sol;
}

LpResiduals lp_residuals(const LpProblem& problem, const LpSolution& s) {
  const LpProblem p = problem.normalized();
  LpResiduals r;
  const Vec& x = s.x;
  double dual_obj = 0.0;
  if (p.A_ub.rows()) {
    const Vec slack = p.b_ub - p.A_ub * x;
    r.primal = std::max(r.primal, std::max(0.0, -slack.minCoeff()));
    r.complementarity = std::max(r.complementarity, slack.cwiseProduct(s.duals_ub).cwiseAbs().maxCoeff());
    dual_obj += p.b_ub.dot(s.duals_ub);
  }
  if (p.A_eq.rows()) {
    r.primal = std::max(r.primal, (p.A_eq * x - p.b_eq).cwiseAbs().maxCoeff());
    dual_obj += p.b_eq.dot(s.duals_eq);
  }
  for (int j = 0; j < x.size(); ++j) {
    if (std::isfinite(p.lo(j))) {
      r.primal = std::max(r.primal, p.lo(j) - x(j));
      r.complementarity = std::max(r.complementarity, std::abs(s.bound_lo(j) * (x(j) - p.lo(j))));
      dual_obj += p.lo(j) * s.bound_lo(j);
    }
    if (std::isfinite(p.hi(j))) {
      r.primal = std::max(r.primal, x(j) - p.hi(j));
      r.complementarity = std::max(r.complementarity, std::abs(s.bound_hi(j) * (p.hi(j) - x(j))));
      dual_obj += p.hi(j) * s.bound_hi(j);
    }
  }
  r.duality_gap = std::abs(p.c.dot(x) - dual_obj);
  return r;
}

}  // namespace ohio
