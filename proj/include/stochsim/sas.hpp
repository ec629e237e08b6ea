#pragma once

#include "stochsim/machine.hpp"
#include "stochsim/network.hpp"
#include "stochsim/scenario.hpp"
#include "stochsim/series.hpp"
#include "stochsim/stochastic.hpp"
#include "stochsim/trajectory.hpp"

#include <span>
#include <vector>

namespace stochsim {

struct SolverConfig {
    std::size_t order = 2;
    double window = 1e-3;  // s; also the output step
    double horizon = 0.0;  // s; 0 takes the scenario horizon
    std::size_t record_stride = 1;
    std::vector<int> voltage_buses;  // buses whose |V| is recorded
};

/// Series of every state about the window start, with the window's load
/// values frozen.
struct SASWindow {
    double t0 = 0.0;
    double h = 0.0;
    std::vector<Series> series;  // DynamicState order
    std::vector<LoadPQ> loads;
};

/// Grows the state series order by order over one window. Buffers are sized
/// once, so repeated windows do not allocate.
class SasPropagator {
public:
    SasPropagator(std::size_t generators, std::size_t order);

    void derive(const DynamicState& x0, const ReducedNetwork& net, const MachineSet& m);

    /// Coefficient of t^n of state `i` (DynamicState index).
    double coefficient(std::size_t i, std::size_t n) const;
    /// Writes the series value at local time t into `out`.
    void evaluate(double t, std::span<double> out) const;

    std::size_t order() const { return N_; }
    std::size_t generators() const { return K_; }

private:
    double* at(std::vector<double>& v, std::size_t n) { return v.data() + n * K_; }
    const double* at(const std::vector<double>& v, std::size_t n) const { return v.data() + n * K_; }

    std::size_t K_, N_;
    // Order-major coefficient arrays: entry (n, k) at n*K + k.
    std::vector<double> delta_, omega_, eqp_, edp_;
    std::vector<double> sin_, cos_, e_re_, e_im_, i_re_, i_im_, i_q_, i_d_, e_q_, e_d_;
};

/// Order-`order` window about x0 for the given network and machines.
SASWindow derive_window(const DynamicState& x0, const ReducedNetwork& net, const MachineSet& m, std::size_t order,
                        double t0 = 0.0, double h = 1e-3);

/// Horner evaluation of every series; throws RangeError outside [0, h].
DynamicState evaluate_sas(const SASWindow& w, double t_local);

/// Multistage SAS run: one window per step of length config.window, loads
/// frozen per resample interval, network rebuilt on stage or load changes.
/// A run whose state leaves |x| <= 1e6 or turns non-finite is marked diverged
/// and padded with NaN.
Trajectory simulate_sas(const PreparedSystem& ps, const Scenario& sc, const SolverConfig& config,
                        const NoisePath& path);
Trajectory simulate_sas(const SystemCase& c, const Scenario& sc, const SolverConfig& config, const NoisePath& path);

/// Noise path sized for a scenario on a case (two variables per stochastic load).
NoisePath scenario_noise_path(const SystemCase& c, const Scenario& sc, std::uint64_t seed);

}  // namespace stochsim
