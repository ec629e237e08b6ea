#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace stochsim::cli {

struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct CheckOptions {
    std::filesystem::path smib_case = "cases/smib.json";
    std::filesystem::path grid_case = "cases/ieee39.json";
    std::filesystem::path fault_scenario = "scenarios/fault.json";
    bool quick = false;
    /// Relative error injected into the closed-form second-order term, to show
    /// the equivalence check is live.
    double inject = 0.0;
    unsigned long long seed = 20240611;
};

CheckResult check_smib_equivalence(const CheckOptions& o);
CheckResult check_ou_variance(const CheckOptions& o);
CheckResult check_ou_autocorrelation(const CheckOptions& o);
CheckResult check_ou_closed_form(const CheckOptions& o);
CheckResult check_cross_solver(const CheckOptions& o);

std::vector<CheckResult> run_all_checks(const CheckOptions& o);

}  // namespace stochsim::cli
