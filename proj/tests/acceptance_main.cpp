// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code is the number of failed
// gated criteria (the report-only experiment never fails).

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "coagfrag/validations.hpp"

using coagfrag::ValidationResult;
using coagfrag::run_validation;

namespace {

struct Criterion {
    int number;
    std::string title;
    std::vector<std::string> validations;
    bool report_only = false;
};

}  // namespace

int main(int argc, char** argv) {
    unsigned workers = coagfrag::default_workers();
    if (argc > 1) workers = static_cast<unsigned>(std::strtoul(argv[1], nullptr, 10));

    const std::vector<Criterion> criteria = {
        {1, "single-particle mass flow explosion time (doubling chain)",
         {"mf1_mean_tau", "mf1_sqrt_no_explosion"}},
        {2, "fragmentation dichotomy of the shifted-half chain", {"ex410_x0_1", "ex410_x0_2"}},
        {3, "regular halving chain: exact states and harmonic jump times",
         {"ex411_chain", "ex411_tau1000"}},
        {4, "direct-simulation shattering explosion", {"thm43_explosion", "thm43_cauchy"}},
        {5, "regularity with source and bounded fragmentation", {"thm42_regularity"}},
        {6, "mass flow explosion for homogeneous kernels above exponent one", {"thm44_explosion"}},
        {7, "hydrodynamic consistency against the truncated ODE",
         {"const_kernel_tv", "massflow_hydro"}},
        {8, "drift lower bounds on the proof trap regions",
         {"drift_audit_thm43", "drift_audit_thm44", "drift_audit_thm47"}},
        {9, "martingale diagnostic over the two-particle mass flow chain", {"martingale_mf2"}},
        {10, "gelation-time distribution experiment", {"gelation_report"}, true},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        bool pass = true;
        std::vector<ValidationResult> results;
        for (const auto& name : criterion.validations) {
            results.push_back(run_validation(name, workers));
            pass = pass && results.back().pass;
        }
        const char* status = criterion.report_only ? "REPORT" : (pass ? "PASS" : "FAIL");
        std::printf("criterion %2d [%s] %s\n", criterion.number, status, criterion.title.c_str());
        for (const auto& res : results) {
            for (const auto& line : res.lines) std::printf("    %s: %s\n", res.name.c_str(), line.c_str());
        }
        if (!pass && !criterion.report_only) ++failures;
        std::fflush(stdout);
    }
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
    } else {
        std::printf("all gated criteria passed\n");
    }
    return failures;
}
