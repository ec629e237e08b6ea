#pragma once

#include "stochsim/machine.hpp"
#include "stochsim/network.hpp"
#include "stochsim/scenario.hpp"
#include "stochsim/stochastic.hpp"
#include "stochsim/trajectory.hpp"

#include <span>
#include <string>
#include <vector>

namespace stochsim {

enum class EMMode {
    /// Loads follow the piecewise-constant exact OU schedule of the noise
    /// path, the same one the SAS solver sees.
    shared_path,
    /// Loads are SDE states stepped by Euler-Maruyama every Δt; the noise path
    /// must be sampled at Δt.
    sde,
};

const char* to_string(EMMode m);
EMMode parse_em_mode(const std::string& s);

struct EMConfig {
    double dt = 1e-3;
    EMMode mode = EMMode::shared_path;
    double horizon = 0.0;  // s; 0 takes the scenario horizon
    std::size_t record_stride = 1;
    std::vector<int> voltage_buses;
};

/// ε - a ε Δt + b ΔW
double em_sde_step(double eps, OUParams p, double dt, double dW);

/// x + rhs(x) Δt
DynamicState euler_det_step(const DynamicState& x, const ReducedNetwork& net, const MachineSet& m, double dt);

/// Per-step load values from Euler-Maruyama OU updates, ΔW = √Δt ξ with
/// Δt = path.resample_dt.
LoadSchedule em_load_schedule(const SystemCase& sc, std::span<const StochasticLoadSpec> specs, const NoisePath& path);

/// Noise path suited to `mode`: the scenario's resample grid for
/// shared_path, the Δt grid for sde.
NoisePath em_noise_path(const SystemCase& c, const Scenario& sc, const EMConfig& config, std::uint64_t seed);

Trajectory simulate_em(const PreparedSystem& ps, const Scenario& sc, const EMConfig& config, const NoisePath& path);
Trajectory simulate_em(const SystemCase& c, const Scenario& sc, const EMConfig& config, const NoisePath& path);

}  // namespace stochsim
