#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace ohio {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 7;
  std::vector<int> only;  // empty: all criteria 1..9
  // Criterion 9 writes two pipeline runs below this directory (run_a, run_b).
  // Empty: a temporary directory that is removed afterwards.
  std::filesystem::path artifacts;
  std::function<void(const CriterionResult&)> on_result;
};

constexpr int kCriteria = 9;

CriterionResult run_criterion(int id, const AcceptanceOptions& options);
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

// "PASS 3 lp inverse consistency (1.2 s): ..."
std::string format_result(const CriterionResult& r);

}  // namespace ohio
