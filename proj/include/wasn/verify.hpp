#pragma once

#include <string>
#include <vector>

namespace wasn {

enum class VerifyLevel { Quick, Full };

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Oracle-equivalence and invariant checks: distributed vs centralized,
/// rank-1 recursion vs direct inversion, tree vs fully connected aggregation,
/// ledger vs analytic counts, wire-format round trips.
std::vector<CheckResult> run_verification(VerifyLevel level);

}  // namespace wasn
