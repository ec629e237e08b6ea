#pragma once

#include "stochsim/case.hpp"
#include "stochsim/network.hpp"
#include "stochsim/stochastic.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stochsim {

struct FaultSpec {
    int bus = 0;
    double start = 0.0;             // s
    double duration_cycles = 0.0;   // converted with the case frequency
    std::vector<std::pair<int, int>> trip;  // branches opened at clearing
};

struct Scenario {
    std::string name;
    double horizon = 20.0;  // s
    std::optional<FaultSpec> fault;
    StochasticConfig stochastic;

    bool noisy() const { return stochastic.sigma_rel > 0.0; }
};

/// {"name", "horizon", "fault": {bus, start, duration_cycles, trip: [[f,t],..]},
///  "stochastic": {buses: [..] | "all", sigma_rel, drift_a, resample_dt}}
/// Fault and stochastic blocks are optional.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Checks the scenario against a case: fault bus and tripped branches exist,
/// positive duration, horizon past the clearing time, loads at every
/// stochastic bus. Throws ValidationError.
void validate(const Scenario& s, const SystemCase& sc);

/// Network topology in force over each interval of the run.
struct StageSchedule {
    double fault_on = 0.0;   // s
    double fault_off = 0.0;  // s
    bool has_fault = false;
    NetworkCondition during;
    NetworkCondition after;

    /// Right-continuous: a stage takes effect at its start time.
    Stage stage_at(double t, double tol = 1e-12) const;
    const NetworkCondition& condition(Stage s) const;

private:
    NetworkCondition before_;
};

StageSchedule make_stage_schedule(const Scenario& s, const SystemCase& sc);

/// Condition the system settles in after every event of the scenario.
NetworkCondition final_condition(const Scenario& s);

}  // namespace stochsim
