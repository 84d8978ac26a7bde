#pragma once

#include "slq/config.hpp"

#include <string>
#include <vector>

namespace slq {

struct CheckResult {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
    bool advisory = false;  // reported, never fails the suite
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool passed() const;
};

// Runs the invariant suite on the configured model: Riccati structure,
// relations, exponential cross-check, convergence order, uniqueness
// conditions, filter consistency, innovation moments, decomposition,
// optimality perturbations and the special-case equivalence.
VerifyReport run_verification(const RunConfig& cfg);

}  // namespace slq
