#pragma once

// Internal: time stepping shared by both solvers. Handles the stage schedule,
// load resampling, network rebuilds, sampling and divergence.

#include "stochsim/error.hpp"
#include "stochsim/machine.hpp"
#include "stochsim/scenario.hpp"
#include "stochsim/stochastic.hpp"
#include "stochsim/trajectory.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

namespace stochsim::detail {

inline constexpr double kDivergenceBound = 1e6;

struct DriveOptions {
    double step = 1e-3;
    double horizon = 20.0;
    std::size_t record_stride = 1;
    std::vector<int> voltage_buses;
};

/// n such that n·unit == span within a relative 1e-9; throws otherwise.
inline std::size_t whole_multiple(double span, double unit, const char* what) {
    const double r = span / unit;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, n)) {
        throw ValidationError(std::string(what) + " must be an integer multiple of the step");
    }
    return static_cast<std::size_t>(n);
}

/// Rebuilds the reduced network only when the stage or load interval changes.
class NetworkCache {
public:
    NetworkCache(const PreparedSystem& ps, const StageSchedule& sch, const LoadSchedule& loads)
        : builder_(ps.sc, ps.profile), schedule_(sch), loads_(loads) {}

    const ReducedNetwork& get(Stage stage, std::size_t interval) {
        const std::size_t j = std::min(interval, loads_.size() - 1);
        if (!valid_ || stage != stage_ || j != interval_) {
            net_ = builder_.build(schedule_.condition(stage), loads_.at(j));
            stage_ = stage;
            interval_ = j;
            valid_ = true;
            ++builds_;
        }
        return net_;
    }

    std::size_t builds() const { return builds_; }

private:
    NetworkBuilder builder_;
    const StageSchedule& schedule_;
    const LoadSchedule& loads_;
    ReducedNetwork net_;
    Stage stage_ = Stage::pre_fault;
    std::size_t interval_ = 0;
    bool valid_ = false;
    std::size_t builds_ = 0;
};

inline bool out_of_bounds(const DynamicState& x) {
    for (double v : x.values()) {
        if (!std::isfinite(v) || std::abs(v) > kDivergenceBound) return true;
    }
    return false;
}

/// Advances `step(x, net, tau)` over the horizon. Steps that straddle a fault
/// event are split at the event so every sub-step sees a single topology.
template <class Step>
Trajectory drive(const PreparedSystem& ps, const StageSchedule& sch, const LoadSchedule& loads,
                 const DriveOptions& opt, Step&& step) {
    const double h = opt.step;
    if (!(h > 0.0)) throw ValidationError("step must be positive");
    if (opt.record_stride == 0) throw ValidationError("record stride must be at least 1");
    const std::size_t n_steps = whole_multiple(opt.horizon, h, "horizon");
    const std::size_t per_interval = whole_multiple(loads.interval, h, "load resample interval");
    const std::size_t stride = opt.record_stride;
    const std::size_t K = ps.x0.generator_count();

    Trajectory tr;
    for (const auto& g : ps.sc.generators) tr.generator_names.push_back(g.name);
    tr.voltage_buses = opt.voltage_buses;
    std::vector<std::size_t> vpos;
    for (int b : opt.voltage_buses) vpos.push_back(ps.sc.bus_index(b));
    const std::size_t n_rows = n_steps / stride + 1;
    tr.times.reserve(n_rows);
    tr.states.reserve(n_rows * 4 * K);
    tr.voltages.reserve(n_rows * vpos.size());

    NetworkCache cache(ps, sch, loads);
    std::vector<cplx> emf(K);
    auto record = [&](double t, const DynamicState& x, const ReducedNetwork* net) {
        tr.times.push_back(t);
        tr.states.insert(tr.states.end(), x.values().begin(), x.values().end());
        if (vpos.empty()) return;
        for (std::size_t k = 0; k < K; ++k) {
            const double s = std::sin(x.delta(k)), c = std::cos(x.delta(k));
            emf[k] = {x.ed_p(k) * s + x.eq_p(k) * c, x.eq_p(k) * s - x.ed_p(k) * c};
        }
        for (std::size_t p : vpos) {
            tr.voltages.push_back(net ? std::abs(net->bus_voltage(p, emf)) : std::numeric_limits<double>::quiet_NaN());
        }
    };

    const double tol = 1e-9 * h;
    DynamicState x = ps.x0;
    record(0.0, x, &cache.get(sch.stage_at(0.0, tol), 0));

    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t0 = static_cast<double>(k) * h;
        const double t1 = static_cast<double>(k + 1) * h;
        const std::size_t j = k / per_interval;
        double t = t0;
        while (true) {
            double t_end = t1;
            if (sch.has_fault) {
                for (double ev : {sch.fault_on, sch.fault_off}) {
                    if (ev > t + tol && ev < t_end - tol) t_end = ev;
                }
            }
            step(x, cache.get(sch.stage_at(t, tol), j), t_end - t);
            if (t_end == t1) break;
            t = t_end;
        }

        if (out_of_bounds(x)) {
            tr.diverged = true;
            tr.diverged_at = t1;
            const double nan = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t r = tr.rows(); r < n_rows; ++r) {
                tr.times.push_back(static_cast<double>(r * stride) * h);
                tr.states.insert(tr.states.end(), 4 * K, nan);
                tr.voltages.insert(tr.voltages.end(), vpos.size(), nan);
            }
            break;
        }
        if ((k + 1) % stride == 0) {
            const ReducedNetwork* net = vpos.empty() ? nullptr : &cache.get(sch.stage_at(t1, tol), (k + 1) / per_interval);
            record(t1, x, net);
        }
    }
    return tr;
}

}  // namespace stochsim::detail
