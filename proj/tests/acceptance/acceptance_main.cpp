// Acceptance criteria 1-12: one PASS/FAIL line per criterion.

#include "rslv/acceptance.hpp"

#include <iostream>

int main() {
    rslv::AcceptanceOptions opt;
    opt.on_result = [](const rslv::CriterionResult& r) { std::cout << rslv::format_result_line(r) << std::endl; };
    const auto results = rslv::run_acceptance(opt);
    int failed = 0;
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    std::cout << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
