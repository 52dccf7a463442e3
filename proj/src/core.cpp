#include "ohio/core.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

namespace ohio {

namespace {

void stderr_warning(const std::string& message) { std::cerr << "warning: " << message << "\n"; }

WarningHandler g_warning_handler = &stderr_warning;

constexpr double kSimplexRenormTol = 1e-6;

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::NonConsecutiveTime: return "NonConsecutiveTime";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::SingularInnerMatrix: return "SingularInnerMatrix";
    case ErrorCode::IndexOutOfHorizon: return "IndexOutOfHorizon";
    case ErrorCode::NonFiniteJacobian: return "NonFiniteJacobian";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::FlowExceedsInventory: return "FlowExceedsInventory";
    case ErrorCode::InfeasibleReconstruction: return "InfeasibleReconstruction";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ActionOutOfBounds: return "ActionOutOfBounds";
    case ErrorCode::ConstraintViolation: return "ConstraintViolation";
    case ErrorCode::MissingRewardSource: return "MissingRewardSource";
    case ErrorCode::EmptyOutput: return "EmptyOutput";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IncompatibleModel: return "IncompatibleModel";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

int exit_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::Usage:
    case ErrorCode::InvalidConfig:
      return 1;
    case ErrorCode::SingularInnerMatrix:
    case ErrorCode::NonFiniteJacobian:
    case ErrorCode::NonFiniteGradient:
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::NumericalBreakdown:
      return 3;
    default:
      return 2;
  }
}

void set_warning_handler(WarningHandler handler) {
  g_warning_handler = handler ? handler : &stderr_warning;
}

void warn(const std::string& message) { g_warning_handler(message); }

bool all_finite(const Vec& v) { return v.allFinite(); }

std::string_view to_string(HighActionKind kind) {
  switch (kind) {
    case HighActionKind::GoalState: return "goal_state";
    case HighActionKind::Distribution: return "distribution";
    case HighActionKind::MixedProductionDistribution: return "mixed_production_distribution";
  }
  return "goal_state";
}

HighActionKind high_action_kind_from_string(std::string_view name) {
  if (name == "goal_state") return HighActionKind::GoalState;
  if (name == "distribution") return HighActionKind::Distribution;
  if (name == "mixed_production_distribution") return HighActionKind::MixedProductionDistribution;
  fail(ErrorCode::ParseError, "unknown high-level action kind '" + std::string(name) + "'");
}

Vec normalize_distribution(const Vec& values) {
  if (values.size() == 0) fail(ErrorCode::InvalidDistribution, "empty distribution");
  if (!values.allFinite()) fail(ErrorCode::NonFiniteValue, "distribution has non-finite entries");
  if ((values.array() < 0.0).any()) fail(ErrorCode::InvalidDistribution, "negative probability");
  const double sum = values.sum();
  if (std::abs(sum - 1.0) > kSimplexRenormTol) {
    std::ostringstream os;
    os << "distribution sums to " << sum;
    fail(ErrorCode::InvalidDistribution, os.str());
  }
  return values / sum;
}

HighAction HighAction::goal(Vec values) {
  if (!values.allFinite()) fail(ErrorCode::NonFiniteValue, "goal state has non-finite entries");
  return HighAction(HighActionKind::GoalState, std::move(values), 0);
}

HighAction HighAction::distribution(Vec values) {
  return HighAction(HighActionKind::Distribution, normalize_distribution(values), 0);
}

HighAction HighAction::mixed(const Vec& production, const Vec& shares) {
  if (!production.allFinite()) fail(ErrorCode::NonFiniteValue, "production target is non-finite");
  Vec values(production.size() + shares.size());
  values << production, normalize_distribution(shares);
  return HighAction(HighActionKind::MixedProductionDistribution, std::move(values),
                    static_cast<int>(production.size()));
}

HighAction HighAction::from_flat(HighActionKind kind, Vec values, int production_dim) {
  switch (kind) {
    case HighActionKind::GoalState: return goal(std::move(values));
    case HighActionKind::Distribution: return distribution(std::move(values));
    case HighActionKind::MixedProductionDistribution:
      if (production_dim < 0 || production_dim >= values.size())
        fail(ErrorCode::DimMismatch, "mixed action needs 0 <= production_dim < dim");
      return mixed(values.head(production_dim), values.tail(values.size() - production_dim));
  }
  fail(ErrorCode::InvalidArgument, "bad high-level action kind");
}

bool operator==(const Transition& a, const Transition& b) {
  auto same = [](const Vec& x, const Vec& y) { return x.size() == y.size() && x == y; };
  if (a.episode != b.episode || a.t != b.t || !same(a.s, b.s) || !same(a.s_next, b.s_next)) return false;
  if (a.a.has_value() != b.a.has_value() || (a.a && !same(*a.a, *b.a))) return false;
  return a.r == b.r;
}

void validate_trajectory(std::span<const Transition> transitions) {
  if (transitions.empty()) fail(ErrorCode::EmptyDataset, "trajectory is empty");
  const auto state_dim = transitions.front().s.size();
  if (state_dim == 0) fail(ErrorCode::DimMismatch, "record 0: zero-dimensional state");
  std::optional<Eigen::Index> action_dim;
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const Transition& tr = transitions[i];
    const std::string where = "record " + std::to_string(i);
    if (tr.s.size() != state_dim || tr.s_next.size() != state_dim)
      fail(ErrorCode::DimMismatch, where + ": state dimension differs from record 0");
    if (tr.a) {
      if (!action_dim) action_dim = tr.a->size();
      if (tr.a->size() != *action_dim) fail(ErrorCode::DimMismatch, where + ": action dimension differs");
      if (!tr.a->allFinite()) fail(ErrorCode::NonFiniteValue, where + ": action has non-finite entries");
    }
    if (!tr.s.allFinite() || !tr.s_next.allFinite())
      fail(ErrorCode::NonFiniteValue, where + ": state has non-finite entries");
    if (tr.r && !std::isfinite(*tr.r)) fail(ErrorCode::NonFiniteValue, where + ": reward is non-finite");
    if (tr.t < 0) fail(ErrorCode::NonConsecutiveTime, where + ": negative timestep");
    if (i > 0 && transitions[i - 1].episode == tr.episode && tr.t != transitions[i - 1].t + 1)
      fail(ErrorCode::NonConsecutiveTime, where + ": timestep " + std::to_string(tr.t) + " follows " +
                                              std::to_string(transitions[i - 1].t));
  }
}

double normalized_score(double score, double reference) {
  if (reference == 0.0) fail(ErrorCode::ZeroReference, "reference score is zero");
  return 100.0 * score / reference;
}

}  // namespace ohio
