#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sqmean {

// One verification suite outcome. `details` holds the measured worst cases so
// a failure report is actionable without rerunning.
struct CriterionResult {
    std::string name;
    bool passed = false;
    std::string details;
};

// Seed every suite derives its streams from; fixed so the shipped numbers in
// the details strings are reproducible.
inline constexpr std::uint64_t kAcceptanceSeed = 42;

// Runs all verification suites. Each suite checks one published guarantee at
// desk scale: estimator bounds under honest and tolerance-saturating oracle
// policies, query budgets, the sampling simulation's accuracy contract, and
// end-to-end determinism.
std::vector<CriterionResult> run_acceptance(std::uint64_t seed = kAcceptanceSeed);

}  // namespace sqmean
