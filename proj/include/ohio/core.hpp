#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ohio/error.hpp"

namespace ohio {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Flat state and action vectors. Finiteness is checked at the boundaries
// (trajectory validation, environment steps) rather than on every copy.
using StateVec = Vec;
using ActionVec = Vec;

bool all_finite(const Vec& v);

enum class HighActionKind { GoalState, Distribution, MixedProductionDistribution };

std::string_view to_string(HighActionKind kind);
HighActionKind high_action_kind_from_string(std::string_view name);

/// Output of the upper policy, consumed as a parameter by the low level.
///
/// Distribution actions are kept on the probability simplex: sums within
/// 1e-6 of one are renormalized, anything further off is rejected. Mixed
/// actions hold `production_dim` absolute production targets followed by a
/// distribution over the remaining entries.
class HighAction {
 public:
  HighAction() = default;

  static HighAction goal(Vec values);
  static HighAction distribution(Vec values);
  static HighAction mixed(const Vec& production, const Vec& shares);
  // Rebuilds an action of `kind` from a flat vector (dataset and network I/O).
  static HighAction from_flat(HighActionKind kind, Vec values, int production_dim = 0);

  HighActionKind kind() const { return kind_; }
  const Vec& values() const { return values_; }
  int dim() const { return static_cast<int>(values_.size()); }
  int production_dim() const { return production_dim_; }

  Vec production() const { return values_.head(production_dim_); }
  Vec shares() const { return values_.tail(values_.size() - production_dim_); }

  friend bool operator==(const HighAction& a, const HighAction& b) {
    return a.kind_ == b.kind_ && a.production_dim_ == b.production_dim_ &&
           a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  HighAction(HighActionKind kind, Vec values, int production_dim)
      : kind_(kind), values_(std::move(values)), production_dim_(production_dim) {}

  HighActionKind kind_ = HighActionKind::GoalState;
  Vec values_;
  int production_dim_ = 0;
};

// Projects onto the simplex with the same tolerance rule as HighAction.
Vec normalize_distribution(const Vec& values);

struct Transition {
  std::int64_t episode = 0;
  std::int64_t t = 0;
  StateVec s;
  std::optional<ActionVec> a;
  std::optional<double> r;
  StateVec s_next;
};

bool operator==(const Transition& a, const Transition& b);

struct RelabeledSample {
  std::int64_t episode = 0;
  std::int64_t t = 0;
  StateVec s;
  HighAction u;
  double r = 0.0;
  StateVec s_next;
  double inv_loss = 0.0;
};

/// Checks uniform dimensions, finite values and consecutive timesteps within
/// each episode. Throws DimMismatch, NonConsecutiveTime or NonFiniteValue with
/// the index of the offending record.
void validate_trajectory(std::span<const Transition> transitions);

/// 100 * score / reference.
double normalized_score(double score, double reference);

}  // namespace ohio
