#pragma once

#include "stochsim/case.hpp"
#include "stochsim/network.hpp"

#include <span>
#include <vector>

namespace stochsim {

/// Per-generator (δ, ω, e'q, e'd), stored generator-major: index 4k + {0,1,2,3}.
class DynamicState {
public:
    static constexpr std::size_t kStatesPerMachine = 4;

    DynamicState() = default;
    explicit DynamicState(std::size_t generators) : x_(kStatesPerMachine * generators, 0.0) {}
    explicit DynamicState(std::vector<double> values);

    std::size_t generator_count() const { return x_.size() / kStatesPerMachine; }
    std::size_t size() const { return x_.size(); }

    double& delta(std::size_t k) { return x_[4 * k]; }
    double& omega(std::size_t k) { return x_[4 * k + 1]; }
    double& eq_p(std::size_t k) { return x_[4 * k + 2]; }
    double& ed_p(std::size_t k) { return x_[4 * k + 3]; }
    double delta(std::size_t k) const { return x_[4 * k]; }
    double omega(std::size_t k) const { return x_[4 * k + 1]; }
    double eq_p(std::size_t k) const { return x_[4 * k + 2]; }
    double ed_p(std::size_t k) const { return x_[4 * k + 3]; }

    std::span<double> values() { return x_; }
    std::span<const double> values() const { return x_; }
    double& operator[](std::size_t i) { return x_[i]; }
    double operator[](std::size_t i) const { return x_[i]; }

    bool all_finite() const;

    friend bool operator==(const DynamicState&, const DynamicState&) = default;

private:
    std::vector<double> x_;
};

/// Field voltage and mechanical power, held constant during simulation.
struct MachineConstants {
    std::vector<double> efd;
    std::vector<double> pm;
};

/// Everything the right-hand side needs about the machines.
struct MachineSet {
    std::vector<GeneratorParams> params;
    std::vector<MachineModel> models;
    MachineConstants constants;

    MachineSet() = default;
    MachineSet(const SystemCase& sc, MachineConstants c);
    std::size_t size() const { return params.size(); }
};

struct AlgebraicOutputs {
    std::vector<cplx> emf;  // E_k
    std::vector<double> i_r, i_i, i_d, i_q, e_d, e_q, p_e;
    std::vector<double> sin_delta, cos_delta, e_re, e_im;
};

/// Network algebra of the two-axis model: EMFs from (δ, e'q, e'd), terminal
/// currents I = Y E (+ infinite-bus injection), dq rotation, and P_e.
AlgebraicOutputs compute_injections(const DynamicState& x, const ReducedNetwork& net, const MachineSet& m);

/// Same, reusing the storage of `out`.
void compute_injections(const DynamicState& x, const ReducedNetwork& net, const MachineSet& m, AlgebraicOutputs& out);

/// Time derivative of the four machine states per generator. Classical
/// machines keep e'q, e'd frozen.
std::vector<double> rhs(const DynamicState& x, const ReducedNetwork& net, const MachineSet& m);

/// Allocation-free form for inner loops; `f` must have x.size() entries.
void rhs(const DynamicState& x, const ReducedNetwork& net, const MachineSet& m, AlgebraicOutputs& scratch,
         std::span<double> f);

struct InitialCondition {
    DynamicState state;
    MachineConstants constants;
};

/// Steady state consistent with a solved power flow: EMFs behind R_s + j x'_d,
/// rotor angle placed so the q-axis transient equation balances, E_fd and P_m
/// set from the resulting currents.
InitialCondition init_dynamic_state(const SystemCase& sc, const VoltageProfile& profile);

struct Equilibrium {
    DynamicState state;
    /// Common speed offset ω - ω_R of the steady synchronous motion. Zero when
    /// the case has an infinite bus; otherwise rotor angles advance at this
    /// rate and only the remaining components of rhs vanish.
    double frequency_offset = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

/// Damped Newton from `start` for the steady state of the given network.
/// Throws ConvergenceError (carrying the final residual) when none is found.
Equilibrium solve_equilibrium(const ReducedNetwork& net, const MachineSet& m, const DynamicState& start,
                              std::size_t reference_machine = 0);

/// Power flow, initialization and pre-fault network for one case.
struct PreparedSystem {
    SystemCase sc;
    VoltageProfile profile;
    DynamicState x0;
    MachineSet machines;
    ReducedNetwork prefault;
};

PreparedSystem prepare(const SystemCase& sc);

/// Convenience wrapper: equilibrium of `cond` at the case's mean loads, from
/// the prepared initial state.
Equilibrium solve_equilibrium(const PreparedSystem& ps, const NetworkCondition& cond);

}  // namespace stochsim
