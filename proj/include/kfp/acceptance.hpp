#pragma once

#include <string>
#include <vector>

namespace kfp {

// One acceptance criterion: a named batch of measured-versus-bound checks.
struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double seconds = 0.0;
  std::vector<std::string> lines;  // one measured-vs-bound row per check
};

struct AcceptanceOutcome {
  bool quick = false;
  std::vector<CriterionResult> criteria;
  bool all_passed() const;
};

// Runs the acceptance suite. quick restricts to the fast subset
// {1, 2, 3, 6, 8, 10}; the full run adds the decay, low-energy-fit, and
// high-energy criteria.
AcceptanceOutcome run_acceptance(bool quick);

}  // namespace kfp
