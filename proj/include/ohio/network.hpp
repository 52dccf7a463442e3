#pragma once

#include <string_view>
#include <vector>

#include "ohio/core.hpp"
#include "ohio/lp.hpp"

namespace ohio {

enum class NodeRole { Station, Warehouse, Store };

struct NetworkEdge {
  int from = 0;
  int to = 0;
  double cost = 0.0;
};

/// Graph snapshot consumed by the LP low-level policies and their inverses.
///
/// Routing networks use only Station nodes: q holds idle vehicles and q_hat
/// the desired counts after rebalancing. Supply chains use Warehouse and
/// Store nodes: q_hat holds the desired store inflow, w_hat the desired
/// production at warehouses, and the capacity rows see the units sold this
/// step and everything already in transit.
struct NetworkProblem {
  std::vector<NodeRole> roles;
  std::vector<NetworkEdge> edges;
  Vec q;
  Vec q_hat;
  Vec w_hat;
  Vec storage_capacity;
  Vec production_capacity;
  Vec expected_sales;
  Vec pipeline;
  double p_slack = -1.0;  // negative: 10 * max edge cost

  int num_nodes() const { return static_cast<int>(roles.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  bool is_supply_chain() const;
  std::vector<int> warehouses() const;
  std::vector<int> stores() const;
  double slack_penalty() const;

  Vec inflow(const Vec& flows) const;
  Vec outflow(const Vec& flows) const;

  // Throws InvalidArgument / DimMismatch on malformed graphs or data.
  void validate() const;
};

/// Routing LP over [flows; slack z]:
///   min c'f + p_slack * sum(z)
///   s.t. q_i + inflow_i - outflow_i + z_i >= q_hat_i,  outflow_i <= q_i,  f, z >= 0.
LpProblem rebalancing_lp(const NetworkProblem& net);
Vec rebalancing_policy(const NetworkProblem& net);

struct SupplyChainDecision {
  Vec flows;       // per edge
  Vec production;  // per node, zero at stores
  double deviation = 0.0;  // sum of |eps_f| + |eps_w|
};

/// Supply-chain LP over [flows; production at warehouses; eps_f+; eps_f-; eps_w+; eps_w-]
/// minimizing the L1 deviation from (q_hat, w_hat) under the hard inventory
/// and capacity rows.
LpProblem supplychain_lp(const NetworkProblem& net);
SupplyChainDecision supplychain_policy(const NetworkProblem& net);

/// Targets implied by conservation: routing q_hat_i = q_i + inflow_i - outflow_i;
/// supply chain q_hat_i = inflow_i at stores and q_i - outflow_i at warehouses.
Vec flow_balance_inverse(const NetworkProblem& net, const Vec& flows);

struct DualityInverseResult {
  Vec q_hat;         // per node, same meaning as NetworkProblem::q_hat
  Vec w_hat;         // per node (supply chain); copies net.w_hat where fixed
  double epsilon = 0.0;  // absolute suboptimality of the observed decision
  double primal_value = 0.0;
  double dual_value = 0.0;
};

/// Reconstructs the free targets that make the observed decision as close to
/// optimal as possible. `observed` is [flows] for routing and
/// [flows; production at warehouses] for supply chains. `free_mask` marks
/// nodes whose target is unknown; empty means every q_hat entry is free and
/// every w_hat entry is fixed.
DualityInverseResult duality_inverse(const NetworkProblem& net, const Vec& observed,
                                     const std::vector<bool>& free_mask = {});

/// Generic form: the first x_star.size() variables of `forward` are fixed to
/// x_star, the rest (z) stay free, and the right-hand sides flagged in
/// `free_rows` (indexed over [ub rows; eq rows]) are reconstructed.
struct RhsReconstruction {
  Vec b_ub;
  Vec b_eq;
  Vec z;
  Vec duals_ub;
  Vec duals_eq;
  double epsilon = 0.0;
  double primal_value = 0.0;
  double dual_value = 0.0;
};

RhsReconstruction reconstruct_rhs(const LpProblem& forward, const Vec& x_star, const std::vector<bool>& free_rows);

/// Rounds non-negative flows to integers per source node with the
/// largest-remainder rule so every node's rounded outflow is at most
/// floor(available_i); ties go to the lower edge index.
Vec round_flows(const std::vector<NetworkEdge>& edges, const Vec& flows, const Vec& available);

/// Largest-remainder rounding of `values` to integers summing to `total`.
Vec largest_remainder(const Vec& values, long total);

}  // namespace ohio
