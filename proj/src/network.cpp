#include "stochsim/network.hpp"

#include "stochsim/error.hpp"

#include <algorithm>
#include <cmath>

namespace stochsim {

namespace {

constexpr double kPowerFlowTolerance = 1e-8;
constexpr double kPolishTolerance = 1e-13;
constexpr int kPowerFlowMaxIterations = 50;
constexpr double kSingularRcond = 1e-15;

void stamp_branch(Eigen::MatrixXcd& Y, Eigen::Index f, Eigen::Index t, const Branch& br) {
    const cplx ys = 1.0 / br.z;
    const cplx ych{0.0, 0.5 * br.b_shunt};
    const double tap = br.ratio;
    Y(f, f) += (ys + ych) / (tap * tap);
    Y(t, t) += ys + ych;
    Y(f, t) -= ys / tap;
    Y(t, f) -= ys / tap;
}

}  // namespace

const char* to_string(Stage s) {
    switch (s) {
        case Stage::pre_fault: return "pre-fault";
        case Stage::fault_on: return "fault-on";
        case Stage::post_fault: return "post-fault";
    }
    return "?";
}

Eigen::MatrixXcd bus_admittance(const SystemCase& sc, std::span<const std::size_t> removed) {
    const auto n = static_cast<Eigen::Index>(sc.buses.size());
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t i = 0; i < sc.branches.size(); ++i) {
        if (std::find(removed.begin(), removed.end(), i) != removed.end()) continue;
        const auto& br = sc.branches[i];
        stamp_branch(Y, static_cast<Eigen::Index>(sc.bus_index(br.from)),
                     static_cast<Eigen::Index>(sc.bus_index(br.to)), br);
    }
    return Y;
}

std::vector<cplx> bus_injections(const SystemCase& sc, const VoltageProfile& v) {
    const Eigen::MatrixXcd Y = bus_admittance(sc);
    const Eigen::Map<const Eigen::VectorXcd> V(v.data(), static_cast<Eigen::Index>(v.size()));
    const Eigen::VectorXcd I = Y * V;
    std::vector<cplx> s(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) s[i] = v[i] * std::conj(I(static_cast<Eigen::Index>(i)));
    return s;
}

PowerFlowResult solve_power_flow(const SystemCase& sc) {
    const std::size_t n = sc.buses.size();
    const Eigen::MatrixXcd Y = bus_admittance(sc);

    std::vector<double> p_spec(n, 0.0), q_spec(n, 0.0);
    for (const auto& g : sc.generators) p_spec[sc.bus_index(g.bus)] += g.p_sched;
    for (const auto& l : sc.loads) {
        const auto i = sc.bus_index(l.bus);
        p_spec[i] -= l.p;
        q_spec[i] -= l.q;
    }

    // Unknowns: angles of non-slack buses, then magnitudes of PQ buses.
    std::vector<Eigen::Index> ang_idx, mag_idx;
    Eigen::VectorXd vm(n), va(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& b = sc.buses[i];
        const auto ii = static_cast<Eigen::Index>(i);
        vm(ii) = b.type == BusType::pq ? 1.0 : b.v_set;
        va(ii) = b.type == BusType::slack ? b.angle : 0.0;
        if (b.type != BusType::slack) ang_idx.push_back(ii);
        if (b.type == BusType::pq) mag_idx.push_back(ii);
    }
    const auto na = static_cast<Eigen::Index>(ang_idx.size());
    const auto nm = static_cast<Eigen::Index>(mag_idx.size());

    Eigen::VectorXcd V(n);
    auto assemble = [&] {
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) V(i) = std::polar(vm(i), va(i));
    };
    auto mismatch = [&](Eigen::VectorXd& f) {
        const Eigen::VectorXcd S = V.cwiseProduct((Y * V).conjugate());
        f.resize(na + nm);
        for (Eigen::Index k = 0; k < na; ++k) f(k) = S(ang_idx[k]).real() - p_spec[ang_idx[k]];
        for (Eigen::Index k = 0; k < nm; ++k) f(na + k) = S(mag_idx[k]).imag() - q_spec[mag_idx[k]];
    };

    assemble();
    Eigen::VectorXd f;
    mismatch(f);
    double norm = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
    int it = 0;
    bool converged = norm < kPowerFlowTolerance;

    while (it < kPowerFlowMaxIterations && norm > kPolishTolerance && f.size() > 0) {
        // dS/dθ = j diag(V) conj(diag(I) - Y diag(V)); dS/d|V| = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
        const Eigen::VectorXcd I = Y * V;
        const Eigen::VectorXcd Vn = V.cwiseQuotient(V.cwiseAbs().cast<cplx>());
        Eigen::MatrixXcd dS_dva = -(Y * V.asDiagonal()).conjugate();
        dS_dva.diagonal() += I.conjugate();
        dS_dva = (cplx{0.0, 1.0} * V).asDiagonal() * dS_dva;
        Eigen::MatrixXcd dS_dvm = V.asDiagonal() * (Y * Vn.asDiagonal()).conjugate();
        dS_dvm.diagonal() += I.conjugate().cwiseProduct(Vn);

        Eigen::MatrixXd J(na + nm, na + nm);
        for (Eigen::Index r = 0; r < na; ++r) {
            for (Eigen::Index c = 0; c < na; ++c) J(r, c) = dS_dva(ang_idx[r], ang_idx[c]).real();
            for (Eigen::Index c = 0; c < nm; ++c) J(r, na + c) = dS_dvm(ang_idx[r], mag_idx[c]).real();
        }
        for (Eigen::Index r = 0; r < nm; ++r) {
            for (Eigen::Index c = 0; c < na; ++c) J(na + r, c) = dS_dva(mag_idx[r], ang_idx[c]).imag();
            for (Eigen::Index c = 0; c < nm; ++c) J(na + r, na + c) = dS_dvm(mag_idx[r], mag_idx[c]).imag();
        }
        const Eigen::VectorXd dx = J.partialPivLu().solve(-f);
        for (Eigen::Index k = 0; k < na; ++k) va(ang_idx[k]) += dx(k);
        for (Eigen::Index k = 0; k < nm; ++k) vm(mag_idx[k]) += dx(na + k);
        assemble();
        ++it;

        Eigen::VectorXd f_new;
        mismatch(f_new);
        const double norm_new = f_new.cwiseAbs().maxCoeff();
        if (!std::isfinite(norm_new)) break;
        if (converged && norm_new >= norm) break;  // polishing stalled at round-off
        f = f_new;
        norm = norm_new;
        if (norm < kPowerFlowTolerance) converged = true;
    }

    if (!converged) throw ConvergenceError("power flow did not converge", norm, it);

    PowerFlowResult res;
    res.voltages.assign(V.data(), V.data() + V.size());
    res.iterations = it;
    res.mismatch = norm;
    return res;
}

std::vector<std::size_t> resolve_condition(const SystemCase& sc, const NetworkCondition& cond) {
    std::vector<std::size_t> removed;
    if (cond.stage == Stage::fault_on && !sc.find_bus(cond.faulted_bus)) {
        throw ValidationError("faulted bus " + std::to_string(cond.faulted_bus) + " does not exist");
    }
    if (cond.stage != Stage::post_fault) return removed;
    for (const auto& [a, b] : cond.removed) {
        bool found = false;
        for (std::size_t i = 0; i < sc.branches.size(); ++i) {
            const auto& br = sc.branches[i];
            if ((br.from == a && br.to == b) || (br.from == b && br.to == a)) {
                removed.push_back(i);
                found = true;
            }
        }
        if (!found) {
            throw ValidationError("branch " + std::to_string(a) + "-" + std::to_string(b) + " does not exist");
        }
    }
    return removed;
}

std::vector<LoadPQ> mean_loads(const SystemCase& sc) {
    std::vector<LoadPQ> out;
    out.reserve(sc.loads.size());
    for (const auto& l : sc.loads) out.push_back({l.p, l.q});
    return out;
}

cplx load_to_admittance(double p, double q, cplx v) {
    const double vm2 = std::norm(v);
    if (!(vm2 > 0.0)) throw DomainError("load_to_admittance: zero bus voltage");
    return cplx{p, -q} / vm2;
}

void ReducedNetwork::apply(std::span<const double> e_re, std::span<const double> e_im, std::span<double> i_re,
                           std::span<double> i_im, bool with_source) const {
    const std::size_t K = size();
    // Column-major complex storage read as interleaved doubles; keeps the
    // product in plain real arithmetic.
    const double* y = reinterpret_cast<const double*>(Y.data());
    for (std::size_t k = 0; k < K; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        i_re[k] = with_source ? source(kk).real() : 0.0;
        i_im[k] = with_source ? source(kk).imag() : 0.0;
    }
    for (std::size_t j = 0; j < K; ++j) {
        const double er = e_re[j], ei = e_im[j];
        const double* col = y + 2 * j * K;
        for (std::size_t k = 0; k < K; ++k) {
            const double yr = col[2 * k], yi = col[2 * k + 1];
            i_re[k] += yr * er - yi * ei;
            i_im[k] += yr * ei + yi * er;
        }
    }
}

cplx ReducedNetwork::bus_voltage(std::size_t bus_pos, std::span<const cplx> emf) const {
    const auto r = static_cast<Eigen::Index>(bus_pos);
    cplx v = recovery_source(r);
    for (Eigen::Index k = 0; k < recovery.cols(); ++k) v += recovery(r, k) * emf[static_cast<std::size_t>(k)];
    return v;
}

Eigen::MatrixXcd kron_reduce(const Eigen::MatrixXcd& Y, Eigen::Index n_keep) {
    const Eigen::Index n = Y.rows();
    const Eigen::Index ne = n - n_keep;
    if (ne == 0) return Y;
    const auto lu = Y.bottomRightCorner(ne, ne).partialPivLu();
    if (!(lu.rcond() > kSingularRcond)) throw SingularityError("Kron reduction: singular interior block");
    return Y.topLeftCorner(n_keep, n_keep) -
           Y.topRightCorner(n_keep, ne) * lu.solve(Y.bottomLeftCorner(ne, n_keep));
}

NetworkBuilder::NetworkBuilder(const SystemCase& sc, const VoltageProfile& profile)
    : sc_(&sc), profile_(profile), infinite_(sc.infinite_bus()) {
    if (profile_.size() != sc.buses.size()) throw ValidationError("voltage profile does not match bus count");
    const int K = static_cast<int>(sc.generator_count());
    for (int k = 0; k < K; ++k) keep_.push_back(k);
    if (infinite_) keep_.push_back(K + static_cast<int>(*infinite_));
    for (std::size_t i = 0; i < sc.buses.size(); ++i) {
        if (infinite_ && i == *infinite_) continue;
        eliminate_.push_back(K + static_cast<int>(i));
    }
}

Eigen::MatrixXcd NetworkBuilder::augmented(const NetworkCondition& cond) const {
    const SystemCase& sc = *sc_;
    const auto removed = resolve_condition(sc, cond);
    const auto K = static_cast<Eigen::Index>(sc.generator_count());
    const auto N = static_cast<Eigen::Index>(sc.buses.size());

    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(K + N, K + N);
    A.bottomRightCorner(N, N) = bus_admittance(sc, removed);
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto& g = sc.generators[static_cast<std::size_t>(k)];
        const cplx y = 1.0 / cplx{g.params.Rs, g.params.xd_p};
        const Eigen::Index b = K + static_cast<Eigen::Index>(sc.bus_index(g.bus));
        A(k, k) += y;
        A(b, b) += y;
        A(k, b) -= y;
        A(b, k) -= y;
    }
    if (cond.stage == Stage::fault_on) {
        const Eigen::Index b = K + static_cast<Eigen::Index>(sc.bus_index(cond.faulted_bus));
        A(b, b) += kFaultShunt;
    }
    return A;
}

ReducedNetwork NetworkBuilder::build(const NetworkCondition& cond, std::span<const LoadPQ> loads) const {
    const SystemCase& sc = *sc_;
    if (loads.size() != sc.loads.size()) {
        throw ValidationError("load vector covers " + std::to_string(loads.size()) + " buses, case has " +
                              std::to_string(sc.loads.size()));
    }
    const auto K = static_cast<Eigen::Index>(sc.generator_count());
    const auto N = static_cast<Eigen::Index>(sc.buses.size());

    Eigen::MatrixXcd A = augmented(cond);
    for (std::size_t l = 0; l < loads.size(); ++l) {
        const auto i = sc.bus_index(sc.loads[l].bus);
        const auto b = K + static_cast<Eigen::Index>(i);
        A(b, b) += load_to_admittance(loads[l].p, loads[l].q, profile_[i]);
    }

    const Eigen::MatrixXcd Akk = A(keep_, keep_);
    const auto nk = static_cast<Eigen::Index>(keep_.size());

    ReducedNetwork net;
    net.stage = cond.stage;
    net.loads.assign(loads.begin(), loads.end());
    net.recovery = Eigen::MatrixXcd::Zero(N, K);
    net.recovery_source = Eigen::VectorXcd::Zero(N);

    Eigen::MatrixXcd M = Akk;
    Eigen::MatrixXcd X;  // A_ee^{-1} A_ek
    if (!eliminate_.empty()) {
        const Eigen::MatrixXcd Aee = A(eliminate_, eliminate_);
        const auto lu = Aee.partialPivLu();
        if (!(lu.rcond() > kSingularRcond)) {
            throw SingularityError(std::string("Kron reduction: singular interior block (") + to_string(cond.stage) + ")");
        }
        X = lu.solve(A(eliminate_, keep_));
        M -= A(keep_, eliminate_) * X;
    }

    net.Y = M.topLeftCorner(K, K);
    net.source = Eigen::VectorXcd::Zero(K);
    cplx v_inf{0.0, 0.0};
    if (infinite_) {
        net.has_infinite_bus = true;
        v_inf = profile_[*infinite_];
        net.source = M.block(0, K, K, 1) * v_inf;
        net.recovery_source(static_cast<Eigen::Index>(*infinite_)) = v_inf;
    }
    for (std::size_t e = 0; e < eliminate_.size(); ++e) {
        const auto row = static_cast<Eigen::Index>(e);
        const Eigen::Index bus = eliminate_[e] - K;
        net.recovery.row(bus) = -X.row(row).head(K);
        if (infinite_) net.recovery_source(bus) = -X(row, nk - 1) * v_inf;
    }
    return net;
}

ReducedNetwork build_reduced_network(const SystemCase& sc, const NetworkCondition& cond,
                                     std::span<const LoadPQ> loads, const VoltageProfile& profile) {
    return NetworkBuilder(sc, profile).build(cond, loads);
}

}  // namespace stochsim
