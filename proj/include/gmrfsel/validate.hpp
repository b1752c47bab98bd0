#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace gmrfsel {

struct ValidateOptions {
  std::uint64_t seed = 1;
  int trials = 20;
};

struct ValidateResult {
  long violations = 0;
  long checks = 0;
  nlohmann::ordered_json findings;  // one object per suite, plus a list of individual findings
  bool vacuous = false;
};

// Cross-solver audit on seeded random instances: three-path err agreement,
// GFF supermodularity, greedy against exhaustive search, and the DP against
// exhaustive search. The classical greedy bound e^-1 err(S_0) + (1-1/e) OPT is
// the pass criterion; excesses over OPT/(1-1/e) are recorded as findings.
ValidateResult validate_suite(const ValidateOptions& options);

}  // namespace gmrfsel
