#pragma once

// End-to-end acceptance criteria 1-12, shared by the `verify` subcommand and
// the acceptance test binary.

#include "rslv/stats.hpp"

#include <functional>
#include <set>
#include <string>
#include <vector>

namespace rslv {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
    std::vector<TestReport> reports;
};

struct AcceptanceOptions {
    /// Criteria to run; empty means all.
    std::set<int> only;
    /// Called as soon as each criterion finishes.
    std::function<void(const CriterionResult&)> on_result;
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options = {});

/// "[PASS] C05 <name>: <detail> (<seconds> s)"
std::string format_result_line(const CriterionResult& result);

}  // namespace rslv
