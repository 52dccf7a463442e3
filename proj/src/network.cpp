#include "ohio/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ohio {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec or_zeros(const Vec& v, int n) { return v.size() == n ? v : Vec::Zero(n); }

}  // namespace

bool NetworkProblem::is_supply_chain() const {
  return std::any_of(roles.begin(), roles.end(), [](NodeRole r) { return r != NodeRole::Station; });
}

std::vector<int> NetworkProblem::warehouses() const {
  std::vector<int> out;
  for (int i = 0; i < num_nodes(); ++i)
    if (roles[i] == NodeRole::Warehouse) out.push_back(i);
  return out;
}

std::vector<int> NetworkProblem::stores() const {
  std::vector<int> out;
  for (int i = 0; i < num_nodes(); ++i)
    if (roles[i] == NodeRole::Store) out.push_back(i);
  return out;
}

double NetworkProblem::slack_penalty() const {
  if (p_slack >= 0.0) return p_slack;
  double max_cost = 0.0;
  for (const auto& e : edges) max_cost = std::max(max_cost, e.cost);
  return 10.0 * (max_cost > 0.0 ? max_cost : 1.0);
}

Vec NetworkProblem::inflow(const Vec& flows) const {
  Vec in = Vec::Zero(num_nodes());
  for (int k = 0; k < num_edges(); ++k) in(edges[k].to) += flows(k);
  return in;
}

Vec NetworkProblem::outflow(const Vec& flows) const {
  Vec out = Vec::Zero(num_nodes());
  for (int k = 0; k < num_edges(); ++k) out(edges[k].from) += flows(k);
  return out;
}

void NetworkProblem::validate() const {
  const int n = num_nodes();
  if (n == 0) fail(ErrorCode::InvalidArgument, "network has no nodes");
  if (q.size() != n) fail(ErrorCode::DimMismatch, "inventory vector must have one entry per node");
  if (!q.allFinite() || (q.array() < 0.0).any()) fail(ErrorCode::InvalidArgument, "inventories must be finite and >= 0");
  for (int k = 0; k < num_edges(); ++k) {
    const auto& e = edges[k];
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n || e.from == e.to)
      fail(ErrorCode::InvalidArgument, "edge " + std::to_string(k) + " references invalid nodes");
    if (!std::isfinite(e.cost)) fail(ErrorCode::NonFiniteValue, "edge " + std::to_string(k) + " has non-finite cost");
  }
  auto check_opt = [&](const Vec& v, const char* name) {
    if (v.size() != 0 && v.size() != n) fail(ErrorCode::DimMismatch, std::string(name) + " must have one entry per node");
    if (!v.allFinite()) fail(ErrorCode::NonFiniteValue, std::string(name) + " must be finite");
  };
  check_opt(q_hat, "q_hat");
  check_opt(w_hat, "w_hat");
  check_opt(storage_capacity, "storage_capacity");
  check_opt(production_capacity, "production_capacity");
  check_opt(expected_sales, "expected_sales");
  check_opt(pipeline, "pipeline");
  if ((storage_capacity.array() < 0.0).any() || (production_capacity.array() < 0.0).any())
    fail(ErrorCode::InvalidArgument, "capacities must be >= 0");
  if (is_supply_chain()) {
    for (const auto& e : edges) {
      if (roles[e.from] != NodeRole::Warehouse || roles[e.to] != NodeRole::Store)
        fail(ErrorCode::InvalidArgument, "supply-chain edges must run from a warehouse to a store");
    }
    if (storage_capacity.size() != n || production_capacity.size() != n)
      fail(ErrorCode::DimMismatch, "supply chains need storage and production capacities");
  }
}

LpProblem rebalancing_lp(const NetworkProblem& net) {
  net.validate();
  const int n = net.num_nodes();
  const int E = net.num_edges();
  const Vec q_hat = or_zeros(net.q_hat, n);
  LpProblem lp;
  lp.c = Vec::Zero(E + n);
  for (int k = 0; k < E; ++k) lp.c(k) = net.edges[k].cost;
  lp.c.tail(n).setConstant(net.slack_penalty());
  lp.A_ub = Mat::Zero(2 * n, E + n);
  lp.b_ub = Vec::Zero(2 * n);
  for (int k = 0; k < E; ++k) {
    const auto& e = net.edges[k];
    lp.A_ub(e.to, k) -= 1.0;  // -(inflow - outflow) - z <= q - q_hat
    lp.A_ub(e.from, k) += 1.0;
    lp.A_ub(n + e.from, k) = 1.0;  // outflow <= q
  }
  for (int i = 0; i < n; ++i) {
    lp.A_ub(i, E + i) = -1.0;
    lp.b_ub(i) = net.q(i) - q_hat(i);
    lp.b_ub(n + i) = net.q(i);
  }
  return lp;
}

Vec rebalancing_policy(const NetworkProblem& net) {
  const LpProblem lp = rebalancing_lp(net);
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal)
    fail(ErrorCode::NumericalBreakdown, "rebalancing LP is " + std::string(to_string(sol.status)));
  return sol.x.head(net.num_edges()).cwiseMax(0.0);
}

namespace {

struct SupplyLayout {
  std::vector<int> wh, st;
  std::vector<int> wh_pos;  // node -> position in wh, or -1
  std::vector<int> st_pos;
  int E = 0, W = 0, S = 0;
  int n_x() const { return E + W; }
  int n_vars() const { return E + W + 2 * S + 2 * W; }
  int ef_plus(int s) const { return E + W + s; }
  int ef_minus(int s) const { return E + W + S + s; }
  int ew_plus(int w) const { return E + W + 2 * S + w; }
  int ew_minus(int w) const { return E + W + 2 * S + W + w; }
  // ub rows: store capacity (S), warehouse outflow (W), warehouse capacity (W)
  // eq rows: store inflow target (S), production target (W)
};

SupplyLayout layout_of(const NetworkProblem& net) {
  SupplyLayout L;
  L.wh = net.warehouses();
  L.st = net.stores();
  L.E = net.num_edges();
  L.W = static_cast<int>(L.wh.size());
  L.S = static_cast<int>(L.st.size());
  L.wh_pos.assign(net.num_nodes(), -1);
  L.st_pos.assign(net.num_nodes(), -1);
  for (int i = 0; i < L.W; ++i) L.wh_pos[L.wh[i]] = i;
  for (int i = 0; i < L.S; ++i) L.st_pos[L.st[i]] = i;
  return L;
}

}  // namespace

LpProblem supplychain_lp(const NetworkProblem& net) {
  net.validate();
  if (!net.is_supply_chain()) fail(ErrorCode::InvalidArgument, "supply-chain LP needs warehouse/store roles");
  const int n = net.num_nodes();
  const SupplyLayout L = layout_of(net);
  const Vec q_hat = or_zeros(net.q_hat, n);
  const Vec w_hat = or_zeros(net.w_hat, n);
  const Vec sales = or_zeros(net.expected_sales, n);
  const Vec pipe = or_zeros(net.pipeline, n);

  LpProblem lp;
  lp.c = Vec::Zero(L.n_vars());
  lp.c.tail(2 * L.S + 2 * L.W).setOnes();
  lp.A_ub = Mat::Zero(L.S + 2 * L.W, L.n_vars());
  lp.b_ub = Vec::Zero(L.S + 2 * L.W);
  lp.A_eq = Mat::Zero(L.S + L.W, L.n_vars());
  lp.b_eq = Vec::Zero(L.S + L.W);

  for (int k = 0; k < L.E; ++k) {
    const auto& e = net.edges[k];
    const int s = L.st_pos[e.to];
    const int w = L.wh_pos[e.from];
    lp.A_ub(s, k) = 1.0;               // store capacity
    lp.A_ub(L.S + w, k) = 1.0;         // warehouse outflow <= q
    lp.A_ub(L.S + L.W + w, k) = -1.0;  // warehouse capacity
    lp.A_eq(s, k) = 1.0;
  }
  for (int s = 0; s < L.S; ++s) {
    const int node = L.st[s];
    lp.b_ub(s) = net.storage_capacity(node) - net.q(node) + sales(node) - pipe(node);
    lp.A_eq(s, L.ef_plus(s)) = -1.0;
    lp.A_eq(s, L.ef_minus(s)) = 1.0;
    lp.b_eq(s) = q_hat(node);
  }
  for (int w = 0; w < L.W; ++w) {
    const int node = L.wh[w];
    lp.b_ub(L.S + w) = net.q(node);
    lp.A_ub(L.S + L.W + w, L.E + w) = 1.0;
    lp.b_ub(L.S + L.W + w) = net.production_capacity(node) - net.q(node) - pipe(node);
    lp.A_eq(L.S + w, L.E + w) = 1.0;
    lp.A_eq(L.S + w, L.ew_plus(w)) = -1.0;
    lp.A_eq(L.S + w, L.ew_minus(w)) = 1.0;
    lp.b_eq(L.S + w) = w_hat(node);
  }
  return lp;
}

SupplyChainDecision supplychain_policy(const NetworkProblem& net) {
  const LpProblem lp = supplychain_lp(net);
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal)
    fail(ErrorCode::NumericalBreakdown, "supply-chain LP is " + std::string(to_string(sol.status)));
  const SupplyLayout L = layout_of(net);
  SupplyChainDecision d;
  d.flows = sol.x.head(L.E).cwiseMax(0.0);
  d.production = Vec::Zero(net.num_nodes());
  for (int w = 0; w < L.W; ++w) d.production(L.wh[w]) = std::max(0.0, sol.x(L.E + w));
  d.deviation = sol.objective_value;
  return d;
}

Vec flow_balance_inverse(const NetworkProblem& net, const Vec& flows) {
  net.validate();
  if (flows.size() != net.num_edges()) fail(ErrorCode::DimMismatch, "one flow per edge expected");
  if (!flows.allFinite() || (flows.array() < 0.0).any())
    fail(ErrorCode::InvalidArgument, "observed flows must be finite and >= 0");
  const Vec in = net.inflow(flows);
  const Vec out = net.outflow(flows);
  for (int i = 0; i < net.num_nodes(); ++i) {
    if (out(i) > net.q(i) + 1e-9)
      fail(ErrorCode::FlowExceedsInventory, "node " + std::to_string(i) + " ships " + std::to_string(out(i)) +
                                                " units but holds " + std::to_string(net.q(i)));
  }
  if (!net.is_supply_chain()) return net.q + in - out;
  Vec q_hat = Vec::Zero(net.num_nodes());
  for (int i = 0; i < net.num_nodes(); ++i)
    q_hat(i) = net.roles[i] == NodeRole::Store ? in(i) : net.q(i) - out(i);
  return q_hat;
}

RhsReconstruction reconstruct_rhs(const LpProblem& forward_in, const Vec& x_star, const std::vector<bool>& free_rows) {
  forward_in.validate();
  const LpProblem fwd = forward_in.normalized();
  const int n = fwd.num_vars();
  const int nx = static_cast<int>(x_star.size());
  const int nz = n - nx;
  const int mu = static_cast<int>(fwd.A_ub.rows());
  const int me = static_cast<int>(fwd.A_eq.rows());
  if (nx > n) fail(ErrorCode::DimMismatch, "observed decision longer than the variable vector");
  if (static_cast<int>(free_rows.size()) != mu + me) fail(ErrorCode::DimMismatch, "free_rows must cover every row");
  for (int j = 0; j < nx; ++j) {
    if (x_star(j) < fwd.lo(j) - 1e-9 || x_star(j) > fwd.hi(j) + 1e-9)
      fail(ErrorCode::InfeasibleReconstruction, "observed variable " + std::to_string(j) + " violates its bounds");
  }
  const Mat Ax_ub = fwd.A_ub.leftCols(nx), Az_ub = fwd.A_ub.rightCols(nz);
  const Mat Ax_eq = fwd.A_eq.leftCols(nx), Az_eq = fwd.A_eq.rightCols(nz);
  const Vec cz = fwd.c.tail(nz);
  const double cx = fwd.c.head(nx).dot(x_star);

  // Minimum-cost completion z under the fixed rows gives tight starting targets.
  Vec z0 = Vec::Zero(nz);
  {
    std::vector<int> ub_fixed, eq_fixed;
    for (int r = 0; r < mu; ++r)
      if (!free_rows[r]) ub_fixed.push_back(r);
    for (int r = 0; r < me; ++r)
      if (!free_rows[mu + r]) eq_fixed.push_back(r);
    if (nz > 0) {
      LpProblem p1;
      p1.c = cz;
      p1.lo = fwd.lo.tail(nz);
      p1.hi = fwd.hi.tail(nz);
      p1.A_ub.resize(static_cast<int>(ub_fixed.size()), nz);
      p1.b_ub.resize(static_cast<int>(ub_fixed.size()));
      for (std::size_t i = 0; i < ub_fixed.size(); ++i) {
        p1.A_ub.row(i) = Az_ub.row(ub_fixed[i]);
        p1.b_ub(i) = fwd.b_ub(ub_fixed[i]) - Ax_ub.row(ub_fixed[i]).dot(x_star);
      }
      p1.A_eq.resize(static_cast<int>(eq_fixed.size()), nz);
      p1.b_eq.resize(static_cast<int>(eq_fixed.size()));
      for (std::size_t i = 0; i < eq_fixed.size(); ++i) {
        p1.A_eq.row(i) = Az_eq.row(eq_fixed[i]);
        p1.b_eq(i) = fwd.b_eq(eq_fixed[i]) - Ax_eq.row(eq_fixed[i]).dot(x_star);
      }
      const LpSolution s1 = solve_lp(p1);
      if (s1.status != LpStatus::Optimal)
        fail(ErrorCode::InfeasibleReconstruction, "observed decision violates the fixed constraints");
      z0 = s1.x;
    } else {
      for (int r : ub_fixed)
        if (Ax_ub.row(r).dot(x_star) > fwd.b_ub(r) + 1e-9)
          fail(ErrorCode::InfeasibleReconstruction, "observed decision violates fixed row " + std::to_string(r));
      for (int r : eq_fixed)
        if (std::abs(Ax_eq.row(r).dot(x_star) - fwd.b_eq(r)) > 1e-9)
          fail(ErrorCode::InfeasibleReconstruction, "observed decision violates fixed row " + std::to_string(mu + r));
    }
  }
  LpProblem at_b0 = fwd;
  for (int r = 0; r < mu; ++r)
    if (free_rows[r]) at_b0.b_ub(r) = Ax_ub.row(r).dot(x_star) + (nz ? Az_ub.row(r).dot(z0) : 0.0);
  for (int r = 0; r < me; ++r)
    if (free_rows[mu + r]) at_b0.b_eq(r) = Ax_eq.row(r).dot(x_star) + (nz ? Az_eq.row(r).dot(z0) : 0.0);
  const LpSolution fs = solve_lp(at_b0);
  if (fs.status != LpStatus::Optimal)
    fail(ErrorCode::InfeasibleReconstruction, "forward LP at the starting targets is " + std::string(to_string(fs.status)));

  // With the multipliers fixed, the gap is linear in (z, b_free).
  std::vector<int> free_idx;
  for (int r = 0; r < mu + me; ++r)
    if (free_rows[r]) free_idx.push_back(r);
  const int k = static_cast<int>(free_idx.size());
  LpProblem p2;
  p2.c = Vec::Zero(nz + k);
  p2.c.head(nz) = cz;
  p2.lo = Vec::Constant(nz + k, -kInf);
  p2.hi = Vec::Constant(nz + k, kInf);
  p2.lo.head(nz) = fwd.lo.tail(nz);
  p2.hi.head(nz) = fwd.hi.tail(nz);
  p2.A_ub = Mat::Zero(mu, nz + k);
  p2.b_ub = Vec::Zero(mu);
  p2.A_eq = Mat::Zero(me, nz + k);
  p2.b_eq = Vec::Zero(me);
  double constant = cx;
  for (int r = 0; r < mu; ++r) {
    p2.A_ub.row(r).head(nz) = Az_ub.row(r);
    p2.b_ub(r) = -Ax_ub.row(r).dot(x_star);
    if (!free_rows[r]) {
      p2.b_ub(r) += fwd.b_ub(r);
      constant -= fs.duals_ub(r) * fwd.b_ub(r);
    }
  }
  for (int r = 0; r < me; ++r) {
    p2.A_eq.row(r).head(nz) = Az_eq.row(r);
    p2.b_eq(r) = -Ax_eq.row(r).dot(x_star);
    if (!free_rows[mu + r]) {
      p2.b_eq(r) += fwd.b_eq(r);
      constant -= fs.duals_eq(r) * fwd.b_eq(r);
    }
  }
  for (int i = 0; i < k; ++i) {
    const int r = free_idx[i];
    if (r < mu) {
      p2.A_ub(r, nz + i) = -1.0;
      p2.c(nz + i) = -fs.duals_ub(r);
    } else {
      p2.A_eq(r - mu, nz + i) = -1.0;
      p2.c(nz + i) = -fs.duals_eq(r - mu);
    }
  }
  double bound_terms = 0.0;
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(fwd.lo(j))) bound_terms += fwd.lo(j) * fs.bound_lo(j);
    if (std::isfinite(fwd.hi(j))) bound_terms += fwd.hi(j) * fs.bound_hi(j);
  }
  constant -= bound_terms;

  const LpSolution s2 = solve_lp(p2);
  if (s2.status == LpStatus::Infeasible) fail(ErrorCode::InfeasibleReconstruction, "no targets rationalize the decision");
  if (s2.status == LpStatus::Unbounded) fail(ErrorCode::NumericalBreakdown, "suboptimality gap unbounded below");

  RhsReconstruction out;
  out.z = s2.x.head(nz);
  out.b_ub = fwd.b_ub;
  out.b_eq = fwd.b_eq;
  Vec full(n);
  full << x_star, out.z;
  for (int i = 0; i < k; ++i) {
    const int r = free_idx[i];
    if (r < mu) {
      // Rows whose multiplier vanishes do not pin the target; report the tight value.
      out.b_ub(r) = std::abs(fs.duals_ub(r)) <= 1e-9 ? fwd.A_ub.row(r).dot(full) : s2.x(nz + i);
    } else {
      out.b_eq(r - mu) = s2.x(nz + i);
    }
  }
  out.duals_ub = fs.duals_ub;
  out.duals_eq = fs.duals_eq;
  out.primal_value = fwd.c.dot(full);
  out.dual_value = out.b_ub.dot(out.duals_ub) + out.b_eq.dot(out.duals_eq) + bound_terms;
  out.epsilon = s2.objective_value + constant;
  if (out.epsilon < 0.0) {
    if (out.epsilon < -1e-6) fail(ErrorCode::NumericalBreakdown, "negative suboptimality gap");
    out.epsilon = 0.0;
  }
  return out;
}

DualityInverseResult duality_inverse(const NetworkProblem& net, const Vec& observed, const std::vector<bool>& free_mask) {
  net.validate();
  const int n = net.num_nodes();
  if (!free_mask.empty() && static_cast<int>(free_mask.size()) != n)
    fail(ErrorCode::DimMismatch, "free_mask must have one entry per node");
  DualityInverseResult res;
  res.w_hat = or_zeros(net.w_hat, n);

  if (!net.is_supply_chain()) {
    if (observed.size() != net.num_edges()) fail(ErrorCode::DimMismatch, "one flow per edge expected");
    const LpProblem lp = rebalancing_lp(net);
    std::vector<bool> rows(2 * n, false);
    for (int i = 0; i < n; ++i) rows[i] = free_mask.empty() || free_mask[i];
    const RhsReconstruction rec = reconstruct_rhs(lp, observed, rows);
    res.q_hat = net.q - rec.b_ub.head(n);
    res.epsilon = rec.epsilon;
    res.primal_value = rec.primal_value;
    res.dual_value = rec.dual_value;
    return res;
  }

  const SupplyLayout L = layout_of(net);
  if (observed.size() != L.n_x()) fail(ErrorCode::DimMismatch, "expected flows followed by warehouse production");
  const LpProblem lp = supplychain_lp(net);
  const int mu = static_cast<int>(lp.A_ub.rows());
  std::vector<bool> rows(mu + L.S + L.W, false);
  for (int s = 0; s < L.S; ++s) rows[mu + s] = free_mask.empty() || free_mask[L.st[s]];
  for (int w = 0; w < L.W; ++w) rows[mu + L.S + w] = !free_mask.empty() && free_mask[L.wh[w]];
  const RhsReconstruction rec = reconstruct_rhs(lp, observed, rows);
  res.q_hat = Vec::Zero(n);
  for (int s = 0; s < L.S; ++s) res.q_hat(L.st[s]) = rec.b_eq(s);
  const Vec out = net.outflow(observed.head(L.E));
  for (int w = 0; w < L.W; ++w) {
    res.q_hat(L.wh[w]) = net.q(L.wh[w]) - out(L.wh[w]);
    res.w_hat(L.wh[w]) = rec.b_eq(L.S + w);
  }
  res.epsilon = rec.epsilon;
  res.primal_value = rec.primal_value;
  res.dual_value = rec.dual_value;
  return res;
}

Vec largest_remainder(const Vec& values, long total) {
  const int n = static_cast<int>(values.size());
  Vec out(n);
  std::vector<double> frac(n);
  long assigned = 0;
  for (int i = 0; i < n; ++i) {
    const double v = std::max(0.0, values(i));
    out(i) = std::floor(v + 1e-9);
    frac[i] = v - out(i);
    assigned += static_cast<long>(out(i));
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  long remaining = total - assigned;
  if (remaining > 0) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
    for (long k = 0; k < remaining; ++k) out(order[k % n]) += 1.0;
  } else if (remaining < 0) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] < frac[b]; });
    long k = 0;
    while (remaining < 0) {
      const int i = order[k++ % n];
      if (out(i) >= 1.0) {
        out(i) -= 1.0;
        ++remaining;
      }
    }
  }
  return out;
}

Vec round_flows(const std::vector<NetworkEdge>& edges, const Vec& flows, const Vec& available) {
  const int E = static_cast<int>(edges.size());
  if (flows.size() != E) fail(ErrorCode::DimMismatch, "one flow per edge expected");
  Vec rounded = Vec::Zero(E);
  for (int node = 0; node < available.size(); ++node) {
    std::vector<int> idx;
    for (int k = 0; k < E; ++k)
      if (edges[k].from == node) idx.push_back(k);
    if (idx.empty()) continue;
    Vec part(static_cast<int>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) part(i) = std::max(0.0, flows(idx[i]));
    const long cap = static_cast<long>(std::floor(available(node) + 1e-9));
    const long total = std::min(cap, static_cast<long>(std::llround(part.sum())));
    const Vec r = largest_remainder(part, std::max(0L, total));
    for (std::size_t i = 0; i < idx.size(); ++i) rounded(idx[i]) = r(i);
  }
  return rounded;
}

}  // namespace ohio
