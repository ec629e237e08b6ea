#pragma once

#include "stochsim/case.hpp"

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace stochsim {

/// Complex bus voltages in case bus order, p.u.
using VoltageProfile = std::vector<cplx>;

struct PowerFlowResult {
    VoltageProfile voltages;
    int iterations = 0;
    double mismatch = 0.0;  // final max |ΔP|,|ΔQ| over non-slack buses
};

/// Newton-Raphson power flow from a flat start. Converges when every non-slack
/// mismatch is below 1e-8 p.u. (then polishes while the mismatch keeps
/// shrinking); throws ConvergenceError after 50 iterations otherwise.
PowerFlowResult solve_power_flow(const SystemCase& sc);

/// Bus admittance matrix with the given branches (indices into sc.branches)
/// left out.
Eigen::MatrixXcd bus_admittance(const SystemCase& sc, std::span<const std::size_t> removed = {});

/// Complex power injected into the network at each bus, S = V conj(Y V).
std::vector<cplx> bus_injections(const SystemCase& sc, const VoltageProfile& v);

enum class Stage { pre_fault, fault_on, post_fault };

const char* to_string(Stage s);

struct NetworkCondition {
    Stage stage = Stage::pre_fault;
    int faulted_bus = 0;                            // fault_on only
    std::vector<std::pair<int, int>> removed;       // post_fault: branches by endpoints
};

/// Resolves branch endpoint pairs to branch indices; throws ValidationError
/// if the faulted bus or any removed branch does not exist.
std::vector<std::size_t> resolve_condition(const SystemCase& sc, const NetworkCondition& cond);

/// Shunt admittance placed at a faulted bus.
inline constexpr double kFaultShunt = 1e7;

struct LoadPQ {
    double p = 0.0;
    double q = 0.0;
};

/// Mean loads of the case, aligned with sc.loads.
std::vector<LoadPQ> mean_loads(const SystemCase& sc);

/// Constant-impedance equivalent (P - jQ)/|V|^2 of a load drawn at voltage V.
cplx load_to_admittance(double p, double q, cplx v);

/// Admittance over generator internal nodes. Terminal currents are
/// I = Y E + source, where `source` is the Norton injection of a fixed-voltage
/// (infinite) bus, zero otherwise. Bus voltages are recovered as
/// V = recovery E + recovery_source.
struct ReducedNetwork {
    Stage stage = Stage::pre_fault;
    Eigen::MatrixXcd Y;
    Eigen::VectorXcd source;
    Eigen::MatrixXcd recovery;
    Eigen::VectorXcd recovery_source;
    bool has_infinite_bus = false;
    std::vector<LoadPQ> loads;

    std::size_t size() const { return static_cast<std::size_t>(Y.rows()); }

    /// I = Y E (+ source when `with_source`) on split real/imaginary parts.
    void apply(std::span<const double> e_re, std::span<const double> e_im, std::span<double> i_re,
               std::span<double> i_im, bool with_source) const;

    /// Voltage of bus `bus_pos` (case order) for internal EMFs E.
    cplx bus_voltage(std::size_t bus_pos, std::span<const cplx> emf) const;
};

/// Schur complement of the trailing block: keeps the first n_keep nodes.
/// Throws SingularityError when the eliminated block is singular.
Eigen::MatrixXcd kron_reduce(const Eigen::MatrixXcd& Y, Eigen::Index n_keep);

/// Builds the stage's bus admittance, folds loads in as constant impedances at
/// the pre-fault profile, attaches generator internal branches 1/(Rs + j x'd)
/// and Kron-reduces onto the internal nodes.
ReducedNetwork build_reduced_network(const SystemCase& sc, const NetworkCondition& cond,
                                     std::span<const LoadPQ> loads, const VoltageProfile& profile);

/// Node partition (internal nodes kept, buses eliminated) for one case and
/// pre-fault profile; rebuilt networks differ only in stage and load values.
class NetworkBuilder {
public:
    NetworkBuilder(const SystemCase& sc, const VoltageProfile& profile);

    ReducedNetwork build(const NetworkCondition& cond, std::span<const LoadPQ> loads) const;

private:
    Eigen::MatrixXcd augmented(const NetworkCondition& cond) const;

    const SystemCase* sc_;
    VoltageProfile profile_;
    std::vector<int> keep_;
    std::vector<int> eliminate_;
    std::optional<std::size_t> infinite_;
};

}  // namespace stochsim
