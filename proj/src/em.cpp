#include "stochsim/em.hpp"

#include "driver.hpp"
#include "stochsim/error.hpp"

#include <cmath>

namespace stochsim {

const char* to_string(EMMode m) { return m == EMMode::sde ? "paper-sde" : "shared-path"; }

EMMode parse_em_mode(const std::string& s) {
    if (s == "shared-path") return EMMode::shared_path;
    if (s == "paper-sde") return EMMode::sde;
    throw ValidationError("unknown EM mode '" + s + "' (expected shared-path or paper-sde)");
}

double em_sde_step(double eps, OUParams p, double dt, double dW) { return eps - p.a * eps * dt + p.b * dW; }

DynamicState euler_det_step(const DynamicState& x, const ReducedNetwork& net, const MachineSet& m, double dt) {
    const auto f = rhs(x, net, m);
    DynamicState out = x;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += f[i] * dt;
    return out;
}

LoadSchedule em_load_schedule(const SystemCase& sc, std::span<const StochasticLoadSpec> specs, const NoisePath& path) {
    if (path.variables < 2 * specs.size()) throw RangeError("noise path has too few variables for the loads");
    const double dt = path.resample_dt;
    const double sq = std::sqrt(dt);
    LoadSchedule sched;
    sched.interval = dt;
    sched.values.assign(std::max<std::size_t>(path.steps, 1), mean_loads(sc));
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& sp = specs[i];
        double ep = 0.0, eq = 0.0;
        for (std::size_t j = 0; j < path.steps; ++j) {
            if (j > 0) {
                ep = em_sde_step(ep, sp.p_ou, dt, sq * path(2 * i, j - 1));
                eq = em_sde_step(eq, sp.q_ou, dt, sq * path(2 * i + 1, j - 1));
            }
            sched.values[j][sp.load_index] = {sp.p0 + ep, sp.q0 + eq};
        }
    }
    return sched;
}

NoisePath em_noise_path(const SystemCase& c, const Scenario& sc, const EMConfig& config, std::uint64_t seed) {
    const auto specs = make_load_specs(c, sc.stochastic);
    const double horizon = config.horizon > 0.0 ? config.horizon : sc.horizon;
    const double dr = config.mode == EMMode::sde ? config.dt : sc.stochastic.resample_dt;
    return build_noise_path(seed, 2 * specs.size(), horizon, dr);
}

Trajectory simulate_em(const PreparedSystem& ps, const Scenario& sc, const EMConfig& config, const NoisePath& path) {
    const double horizon = config.horizon > 0.0 ? config.horizon : sc.horizon;
    if (!(config.dt > 0.0)) throw ValidationError("EM step must be positive");
    if (static_cast<double>(path.steps) * path.resample_dt < horizon - 1e-9 * horizon) {
        throw ValidationError("noise path does not cover the horizon");
    }
    const auto specs = make_load_specs(ps.sc, sc.stochastic);
    LoadSchedule loads;
    if (config.mode == EMMode::sde) {
        if (std::abs(path.resample_dt - config.dt) > 1e-12 * config.dt) {
            throw ValidationError("paper-sde mode needs a noise path sampled at the EM step");
        }
        loads = em_load_schedule(ps.sc, specs, path);
    } else {
        loads = exact_load_schedule(ps.sc, specs, path);
    }
    const StageSchedule sch = make_stage_schedule(sc, ps.sc);

    AlgebraicOutputs scratch;
    std::vector<double> f(ps.x0.size());
    const detail::DriveOptions opt{config.dt, horizon, config.record_stride, config.voltage_buses};
    return detail::drive(ps, sch, loads, opt, [&](DynamicState& x, const ReducedNetwork& net, double tau) {
        rhs(x, net, ps.machines, scratch, f);
        for (std::size_t i = 0; i < f.size(); ++i) x[i] += f[i] * tau;
    });
}

Trajectory simulate_em(const SystemCase& c, const Scenario& sc, const EMConfig& config, const NoisePath& path) {
    validate(sc, c);
    return simulate_em(prepare(c), sc, config, path);
}

}  // namespace stochsim
