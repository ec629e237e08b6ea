#include "stochsim/machine.hpp"

#include "stochsim/error.hpp"

#include <algorithm>
#include <cmath>

namespace stochsim {

namespace {

constexpr double kEquilibriumTolerance = 1e-9;
constexpr int kEquilibriumMaxIterations = 50;

// Largest |rhs| component other than the rotor-angle rates, which equal the
// frequency offset by construction.
double steady_residual(const std::vector<double>& f) {
    double r = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i % DynamicState::kStatesPerMachine == 0) continue;
        r = std::max(r, std::abs(f[i]));
    }
    return r;
}

}  // namespace

DynamicState::DynamicState(std::vector<double> values) : x_(std::move(values)) {
    if (x_.size() % kStatesPerMachine != 0) throw ValidationError("state length is not a multiple of 4");
}

bool DynamicState::all_finite() const {
    return std::all_of(x_.begin(), x_.end(), [](double v) { return std::isfinite(v); });
}

MachineSet::MachineSet(const SystemCase& sc, MachineConstants c) : constants(std::move(c)) {
    for (const auto& g : sc.generators) {
        params.push_back(g.params);
        models.push_back(g.model);
    }
}

void compute_injections(const DynamicState& x, const ReducedNetwork& net, const MachineSet& m, AlgebraicOutputs& out) {
    const std::size_t K = x.generator_count();
    for (auto* v : {&out.i_r, &out.i_i, &out.i_d, &out.i_q, &out.e_d, &out.e_q, &out.p_e}) v->resize(K);
    out.emf.resize(K);
    out.sin_delta.resize(K);
    out.cos_delta.resize(K);
    out.e_re.resize(K);
    out.e_im.resize(K);

    for (std::size_t k = 0; k < K; ++k) {
        const double s = std::sin(x.delta(k)), c = std::cos(x.delta(k));
        const double ed = x.ed_p(k), eq = x.eq_p(k);
        out.sin_delta[k] = s;
        out.cos_delta[k] = c;
        out.e_re[k] = ed * s + eq * c;
        out.e_im[k] = eq * s - ed * c;
        out.emf[k] = {out.e_re[k], out.e_im[k]};
    }
    net.apply(out.e_re, out.e_im, out.i_r, out.i_i, true);
    for (std::size_t k = 0; k < K; ++k) {
        const double s = out.sin_delta[k], c = out.cos_delta[k];
        out.i_q[k] = out.i_i[k] * s + out.i_r[k] * c;
        out.i_d[k] = out.i_r[k] * s - out.i_i[k] * c;
        out.e_q[k] = x.eq_p(k) - m.params[k].xd_p * out.i_d[k];
        out.e_d[k] = x.ed_p(k) + m.params[k].xq_p * out.i_q[k];
        out.p_e[k] = out.e_q[k] * out.i_q[k] + out.e_d[k] * out.i_d[k];
    }
}

AlgebraicOutputs compute_injections(const DynamicState& x, const ReducedNetwork& net, const MachineSet& m) {
    AlgebraicOutputs out;
    compute_injections(x, net, m, out);
    return out;
}

void rhs(const DynamicState& x, const ReducedNetwork& net, const MachineSet& m, AlgebraicOutputs& a,
         std::span<double> f) {
    const std::size_t K = x.generator_count();
    compute_injections(x, net, m, a);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& p = m.params[k];
        const double dw = x.omega(k) - p.omega_r;
        f[4 * k] = dw;
        f[4 * k + 1] = p.omega_r / (2.0 * p.H) * (m.constants.pm[k] - a.p_e[k] - p.D * dw / p.omega_r);
        if (m.models[k] == MachineModel::two_axis) {
            f[4 * k + 2] = (m.constants.efd[k] - x.eq_p(k) - (p.xd - p.xd_p) * a.i_d[k]) / p.Td0_p;
            f[4 * k + 3] = (-x.ed_p(k) + (p.xq - p.xq_p) * a.i_q[k]) / p.Tq0_p;
        } else {
            f[4 * k + 2] = 0.0;
            f[4 * k + 3] = 0.0;
        }
    }
}

std::vector<double> rhs(const DynamicState& x, const ReducedNetwork& net, const MachineSet& m) {
    AlgebraicOutputs a;
    std::vector<double> f(x.size(), 0.0);
    rhs(x, net, m, a, f);
    return f;
}

InitialCondition init_dynamic_state(const SystemCase& sc, const VoltageProfile& profile) {
    const std::size_t K = sc.generator_count();
    const auto s_inj = bus_injections(sc, profile);

    InitialCondition ic;
    ic.state = DynamicState(K);
    ic.constants.efd.assign(K, 0.0);
    ic.constants.pm.assign(K, 0.0);

    for (std::size_t k = 0; k < K; ++k) {
        const auto& g = sc.generators[k];
        const auto& p = g.params;
        const std::size_t b = sc.bus_index(g.bus);
        cplx s_gen = s_inj[b];
        for (const auto& l : sc.loads) {
            if (l.bus == g.bus) s_gen += cplx{l.p, l.q};
        }
        const cplx v = profile[b];
        const cplx it = std::conj(s_gen / v);
        const cplx e_net = v + cplx{p.Rs, p.xd_p} * it;

        double delta = 0.0;
        if (g.model == MachineModel::two_axis) {
            // Places δ so that e'_d = (x_q - x'_q) i_q with E = (e'_q - j e'_d) e^{jδ}.
            delta = std::arg(v + cplx{p.Rs, p.xd_p + p.xq - p.xq_p} * it);
        } else {
            delta = std::arg(e_net);
        }
        const cplx z = e_net * std::polar(1.0, -delta);
        ic.state.delta(k) = delta;
        ic.state.omega(k) = p.omega_r;
        ic.state.eq_p(k) = z.real();
        ic.state.ed_p(k) = g.model == MachineModel::two_axis ? -z.imag() : 0.0;
    }

    const ReducedNetwork net =
        build_reduced_network(sc, NetworkCondition{Stage::pre_fault, 0, {}}, mean_loads(sc), profile);
    const MachineSet probe(sc, ic.constants);
    const AlgebraicOutputs a = compute_injections(ic.state, net, probe);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& p = sc.generators[k].params;
        ic.constants.pm[k] = a.p_e[k];
        ic.constants.efd[k] = ic.state.eq_p(k) + (p.xd - p.xd_p) * a.i_d[k];
    }
    return ic;
}

Equilibrium solve_equilibrium(const ReducedNetwork& net, const MachineSet& m, const DynamicState& start,
                              std::size_t reference_machine) {
    const std::size_t K = start.generator_count();
    const bool has_infinite_bus = net.has_infinite_bus;
    if (reference_machine >= K) throw ValidationError("reference machine out of range");

    // Unknown layout: angles (reference pinned without an infinite bus),
    // transient EMFs of two-axis machines, then the common speed offset.
    struct Slot {
        std::size_t state_index;
    };
    std::vector<Slot> slots;
    for (std::size_t k = 0; k < K; ++k) {
        if (has_infinite_bus || k != reference_machine) slots.push_back({4 * k});
        if (m.models[k] == MachineModel::two_axis) {
            slots.push_back({4 * k + 2});
            slots.push_back({4 * k + 3});
        }
    }
    const bool free_offset = !has_infinite_bus;
    const auto n = static_cast<Eigen::Index>(slots.size() + (free_offset ? 1 : 0));

    auto unpack = [&](const Eigen::VectorXd& z) {
        DynamicState x = start;
        for (std::size_t i = 0; i < slots.size(); ++i) x[slots[i].state_index] = z(static_cast<Eigen::Index>(i));
        const double dw = free_offset ? z(n - 1) : 0.0;
        for (std::size_t k = 0; k < K; ++k) x.omega(k) = m.params[k].omega_r + dw;
        return x;
    };
    auto residual = [&](const Eigen::VectorXd& z) {
        const DynamicState x = unpack(z);
        const auto f = rhs(x, net, m);
        Eigen::VectorXd r(n);
        Eigen::Index i = 0;
        for (std::size_t k = 0; k < K; ++k) {
            r(i++) = f[4 * k + 1];
            if (m.models[k] == MachineModel::two_axis) {
                r(i++) = f[4 * k + 2];
                r(i++) = f[4 * k + 3];
            }
        }
        return r;
    };

    Eigen::VectorXd z(n);
    for (std::size_t i = 0; i < slots.size(); ++i) z(static_cast<Eigen::Index>(i)) = start[slots[i].state_index];
    if (free_offset) z(n - 1) = start.omega(reference_machine) - m.params[reference_machine].omega_r;

    Eigen::VectorXd r = residual(z);
    double norm = r.cwiseAbs().maxCoeff();
    int it = 0;
    while (!(norm < kEquilibriumTolerance)) {
        if (it >= kEquilibriumMaxIterations || !std::isfinite(norm)) {
            throw ConvergenceError("no steady state found for the network", norm, it);
        }
        Eigen::MatrixXd J(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double h = 1e-7 * std::max(1.0, std::abs(z(j)));
            Eigen::VectorXd zp = z, zm = z;
            zp(j) += h;
            zm(j) -= h;
            J.col(j) = (residual(zp) - residual(zm)) / (2.0 * h);
        }
        const auto lu = J.partialPivLu();
        const Eigen::VectorXd dz = lu.solve(-r);
        if (!dz.allFinite()) throw ConvergenceError("singular steady-state Jacobian", norm, it);

        double alpha = 1.0;
        const double n2 = r.norm();
        Eigen::VectorXd z_new, r_new;
        for (;;) {
            z_new = z + alpha * dz;
            r_new = residual(z_new);
            if (r_new.allFinite() && r_new.norm() < (1.0 - 1e-4 * alpha) * n2) break;
            alpha *= 0.5;
            if (alpha < 1e-6) throw ConvergenceError("steady-state Newton stalled", norm, it);
        }
        z = z_new;
        r = r_new;
        norm = r.cwiseAbs().maxCoeff();
        ++it;
    }

    Equilibrium eq;
    eq.state = unpack(z);
    eq.frequency_offset = free_offset ? z(n - 1) : 0.0;
    eq.residual = steady_residual(rhs(eq.state, net, m));
    eq.iterations = it;
    return eq;
}

PreparedSystem prepare(const SystemCase& sc) {
    PreparedSystem ps;
    ps.sc = sc;
    ps.profile = solve_power_flow(ps.sc).voltages;
    auto ic = init_dynamic_state(ps.sc, ps.profile);
    ps.x0 = std::move(ic.state);
    ps.machines = MachineSet(ps.sc, std::move(ic.constants));
    ps.prefault = build_reduced_network(ps.sc, NetworkCondition{}, mean_loads(ps.sc), ps.profile);
    return ps;
}

Equilibrium solve_equilibrium(const PreparedSystem& ps, const NetworkCondition& cond) {
    const ReducedNetwork net = build_reduced_network(ps.sc, cond, mean_loads(ps.sc), ps.profile);
    return solve_equilibrium(net, ps.machines, ps.x0);
}

}  // namespace stochsim
