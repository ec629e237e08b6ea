#include "stochsim/sas.hpp"

#include "driver.hpp"
#include "stochsim/error.hpp"

#include <cmath>

namespace stochsim {

SasPropagator::SasPropagator(std::size_t generators, std::size_t order) : K_(generators), N_(order) {
    if (order < 1) throw ValidationError("series order must be at least 1");
    const std::size_t n = K_ * (N_ + 1);
    for (auto* v : {&delta_, &omega_, &eqp_, &edp_, &sin_, &cos_, &e_re_, &e_im_, &i_re_, &i_im_, &i_q_, &i_d_, &e_q_,
                    &e_d_}) {
        v->assign(n, 0.0);
    }
}

void SasPropagator::derive(const DynamicState& x0, const ReducedNetwork& net, const MachineSet& m) {
    const std::size_t K = K_;
    for (std::size_t k = 0; k < K; ++k) {
        delta_[k] = x0.delta(k);
        omega_[k] = x0.omega(k);
        eqp_[k] = x0.eq_p(k);
        edp_[k] = x0.ed_p(k);
        sin_[k] = std::sin(delta_[k]);
        cos_[k] = std::cos(delta_[k]);
    }

    // Order n of every algebraic quantity needs only orders <= n of the
    // states, so each pass yields the states' order n+1.
    for (std::size_t n = 0; n < N_; ++n) {
        const double inv_n = n ? 1.0 / static_cast<double>(n) : 0.0;
        double* s_n = at(sin_, n);
        double* c_n = at(cos_, n);
        if (n > 0) {
            for (std::size_t k = 0; k < K; ++k) {
                double sn = 0.0, cn = 0.0;
                for (std::size_t j = 1; j <= n; ++j) {
                    const double w = static_cast<double>(j) * delta_[j * K + k];
                    sn += w * cos_[(n - j) * K + k];
                    cn -= w * sin_[(n - j) * K + k];
                }
                s_n[k] = sn * inv_n;
                c_n[k] = cn * inv_n;
            }
        }

        // E = (e'q - j e'd)(cos δ + j sin δ)
        double* er = at(e_re_, n);
        double* ei = at(e_im_, n);
        for (std::size_t k = 0; k < K; ++k) {
            double re = 0.0, im = 0.0;
            for (std::size_t j = 0; j <= n; ++j) {
                const double q = eqp_[j * K + k], d = edp_[j * K + k];
                const double s = sin_[(n - j) * K + k], c = cos_[(n - j) * K + k];
                re += q * c + d * s;
                im += q * s - d * c;
            }
            er[k] = re;
            ei[k] = im;
        }

        net.apply({er, K}, {ei, K}, {at(i_re_, n), K}, {at(i_im_, n), K}, n == 0);

        double* iq = at(i_q_, n);
        double* id = at(i_d_, n);
        double* eq = at(e_q_, n);
        double* ed = at(e_d_, n);
        for (std::size_t k = 0; k < K; ++k) {
            double q = 0.0, d = 0.0;
            for (std::size_t j = 0; j <= n; ++j) {
                const double ir = i_re_[j * K + k], ii = i_im_[j * K + k];
                const double s = sin_[(n - j) * K + k], c = cos_[(n - j) * K + k];
                q += ii * s + ir * c;
                d += ir * s - ii * c;
            }
            iq[k] = q;
            id[k] = d;
            eq[k] = eqp_[n * K + k] - m.params[k].xd_p * d;
            ed[k] = edp_[n * K + k] + m.params[k].xq_p * q;
        }

        const double inv = 1.0 / static_cast<double>(n + 1);
        for (std::size_t k = 0; k < K; ++k) {
            const auto& p = m.params[k];
            double pe = 0.0;
            for (std::size_t j = 0; j <= n; ++j) {
                pe += e_q_[j * K + k] * i_q_[(n - j) * K + k] + e_d_[j * K + k] * i_d_[(n - j) * K + k];
            }
            const double dw = omega_[n * K + k] - (n == 0 ? p.omega_r : 0.0);
            const double pm = n == 0 ? m.constants.pm[k] : 0.0;
            delta_[(n + 1) * K + k] = dw * inv;
            omega_[(n + 1) * K + k] = p.omega_r / (2.0 * p.H) * (pm - pe - p.D * dw / p.omega_r) * inv;
            if (m.models[k] == MachineModel::two_axis) {
                const double efd = n == 0 ? m.constants.efd[k] : 0.0;
                eqp_[(n + 1) * K + k] = (efd - eqp_[n * K + k] - (p.xd - p.xd_p) * id[k]) / p.Td0_p * inv;
                edp_[(n + 1) * K + k] = (-edp_[n * K + k] + (p.xq - p.xq_p) * iq[k]) / p.Tq0_p * inv;
            } else {
                eqp_[(n + 1) * K + k] = 0.0;
                edp_[(n + 1) * K + k] = 0.0;
            }
        }
    }
}

double SasPropagator::coefficient(std::size_t i, std::size_t n) const {
    const std::size_t k = i / 4;
    switch (i % 4) {
        case 0: return delta_[n * K_ + k];
        case 1: return omega_[n * K_ + k];
        case 2: return eqp_[n * K_ + k];
        default: return edp_[n * K_ + k];
    }
}

void SasPropagator::evaluate(double t, std::span<double> out) const {
    const std::vector<double>* src[4] = {&delta_, &omega_, &eqp_, &edp_};
    for (std::size_t k = 0; k < K_; ++k) {
        for (std::size_t v = 0; v < 4; ++v) {
            const std::vector<double>& c = *src[v];
            double acc = c[N_ * K_ + k];
            for (std::size_t n = N_; n-- > 0;) acc = acc * t + c[n * K_ + k];
            out[4 * k + v] = acc;
        }
    }
}

SASWindow derive_window(const DynamicState& x0, const ReducedNetwork& net, const MachineSet& m, std::size_t order,
                        double t0, double h) {
    SasPropagator prop(x0.generator_count(), order);
    prop.derive(x0, net, m);
    SASWindow w;
    w.t0 = t0;
    w.h = h;
    w.loads = net.loads;
    w.series.reserve(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) {
        Series s(order);
        for (std::size_t n = 0; n <= order; ++n) s[n] = prop.coefficient(i, n);
        w.series.push_back(std::move(s));
    }
    return w;
}

DynamicState evaluate_sas(const SASWindow& w, double t_local) {
    if (!(t_local >= 0.0 && t_local <= w.h)) throw RangeError("evaluation time outside the window");
    std::vector<double> x(w.series.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = w.series[i].evaluate(t_local);
    return DynamicState(std::move(x));
}

NoisePath scenario_noise_path(const SystemCase& c, const Scenario& sc, std::uint64_t seed) {
    const auto specs = make_load_specs(c, sc.stochastic);
    return build_noise_path(seed, 2 * specs.size(), sc.horizon, sc.stochastic.resample_dt);
}

namespace {

void check_path_covers(const NoisePath& path, double horizon) {
    if (static_cast<double>(path.steps) * path.resample_dt < horizon - 1e-9 * horizon) {
        throw ValidationError("noise path does not cover the horizon");
    }
}

}  // namespace

Trajectory simulate_sas(const PreparedSystem& ps, const Scenario& sc, const SolverConfig& config,
                        const NoisePath& path) {
    const double horizon = config.horizon > 0.0 ? config.horizon : sc.horizon;
    if (!(config.window > 0.0 && config.window <= path.resample_dt)) {
        throw ValidationError("window must be positive and no longer than the resample interval");
    }
    check_path_covers(path, horizon);
    const auto specs = make_load_specs(ps.sc, sc.stochastic);
    const LoadSchedule loads = exact_load_schedule(ps.sc, specs, path);
    const StageSchedule sch = make_stage_schedule(sc, ps.sc);

    SasPropagator prop(ps.x0.generator_count(), config.order);
    const detail::DriveOptions opt{config.window, horizon, config.record_stride, config.voltage_buses};
    return detail::drive(ps, sch, loads, opt, [&](DynamicState& x, const ReducedNetwork& net, double tau) {
        prop.derive(x, net, ps.machines);
        prop.evaluate(tau, x.values());
    });
}

Trajectory simulate_sas(const SystemCase& c, const Scenario& sc, const SolverConfig& config, const NoisePath& path) {
    validate(sc, c);
    return simulate_sas(prepare(c), sc, config, path);
}

}  // namespace stochsim
