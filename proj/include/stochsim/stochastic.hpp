#pragma once

#include "stochsim/case.hpp"
#include "stochsim/network.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace stochsim {

/// dε = -a ε dt + b dW
struct OUParams {
    double a = 0.5;  // mean-reversion rate, 1/s
    double b = 0.0;  // diffusion, p.u./√s
};

/// b² / 2a; throws DomainError for a <= 0.
double stationary_variance(OUParams p);

/// Exact transition of the OU process over dt driven by one N(0,1) draw.
double ou_exact_step(double eps, OUParams p, double dt, double xi);

/// e^{-at} (ε0 + b Σ e^{a s_i} ΔB_i) over a uniform partition of [0, t] with
/// left endpoints s_i; `increments` holds the Brownian increments ΔB_i.
double ou_closed_form(double eps0, OUParams p, double t, std::span<const double> increments);

/// Seeded grid of standard-normal draws, indexed (variable, step).
struct NoisePath {
    std::uint64_t seed = 0;
    double resample_dt = 0.1;
    std::size_t variables = 0;
    std::size_t steps = 0;
    std::vector<double> xi;  // step-major

    double operator()(std::size_t variable, std::size_t step) const { return xi[step * variables + variable]; }
};

/// ⌈horizon/Δr⌉ steps of S i.i.d. N(0,1) draws from a 64-bit Mersenne
/// Twister seeded with `seed`. Fully determined by its arguments.
NoisePath build_noise_path(std::uint64_t seed, std::size_t variables, double horizon, double resample_dt);

/// Seed of run `run` in an ensemble: splitmix64(master ^ splitmix64(run)).
std::uint64_t run_seed(std::uint64_t master, std::uint64_t run);

/// Writes `variable,step,xi` rows.
void write_noise_csv(const NoisePath& path, const std::filesystem::path& file);

/// Scenario block selecting which loads fluctuate and how strongly.
struct StochasticConfig {
    bool all_buses = false;
    std::vector<int> buses;
    double sigma_rel = 0.0;    // stationary std as a fraction of |mean|
    double drift_a = 0.5;      // 1/s
    double resample_dt = 0.1;  // s
};

struct StochasticLoadSpec {
    int bus = 0;
    std::size_t load_index = 0;  // position in SystemCase::loads
    double p0 = 0.0;
    double q0 = 0.0;
    OUParams p_ou;
    OUParams q_ou;
    double sigma_rel = 0.0;
};

/// b chosen so the stationary standard deviation is σ_rel·|mean|.
OUParams ou_for_relative_std(double mean, double sigma_rel, double a);

/// One spec per selected load; P of spec i is noise variable 2i, Q is 2i+1.
std::vector<StochasticLoadSpec> make_load_specs(const SystemCase& sc, const StochasticConfig& cfg);

/// Load value held constant over each resample interval: mean + deviation[j].
struct PiecewiseSeries {
    double interval = 0.1;
    double mean = 0.0;
    std::vector<double> deviation;

    double value(std::size_t j) const { return mean + deviation[j]; }
};

/// ε(0) = 0 over the first interval, then one exact OU step per boundary
/// using draws of `variable`.
PiecewiseSeries sample_load_path(double mean, OUParams p, const NoisePath& path, std::size_t variable);

/// Values of every case load per interval; loads without a spec stay at mean.
struct LoadSchedule {
    double interval = 0.1;
    std::vector<std::vector<LoadPQ>> values;

    std::size_t size() const { return values.size(); }
    std::span<const LoadPQ> at(std::size_t j) const { return values[std::min(j, values.size() - 1)]; }
};

LoadSchedule exact_load_schedule(const SystemCase& sc, std::span<const StochasticLoadSpec> specs,
                                 const NoisePath& path);

}  // namespace stochsim
