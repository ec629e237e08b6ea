#include "stochsim/stochastic.hpp"

#include "stochsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace stochsim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

double stationary_variance(OUParams p) {
    if (!(p.a > 0.0)) throw DomainError("stationary_variance: drift a must be positive");
    return p.b * p.b / (2.0 * p.a);
}

double ou_exact_step(double eps, OUParams p, double dt, double xi) {
    if (!(dt > 0.0)) throw DomainError("ou_exact_step: dt must be positive");
    // (1 - e^{-2a dt}) / 2a, written with expm1 so the a -> 0 limit stays accurate.
    const double var_factor = p.a > 0.0 ? -std::expm1(-2.0 * p.a * dt) / (2.0 * p.a) : dt;
    return eps * std::exp(-p.a * dt) + p.b * std::sqrt(var_factor) * xi;
}

double ou_closed_form(double eps0, OUParams p, double t, std::span<const double> increments) {
    const std::size_t n = increments.size();
    const double ds = n ? t / static_cast<double>(n) : 0.0;
    double integral = 0.0;
    for (std::size_t i = 0; i < n; ++i) integral += std::exp(p.a * ds * static_cast<double>(i)) * increments[i];
    return std::exp(-p.a * t) * (eps0 + p.b * integral);
}

NoisePath build_noise_path(std::uint64_t seed, std::size_t variables, double horizon, double resample_dt) {
    if (!(horizon > 0.0) || !(resample_dt > 0.0)) {
        throw DomainError("build_noise_path: horizon and resample interval must be positive");
    }
    NoisePath path;
    path.seed = seed;
    path.resample_dt = resample_dt;
    path.variables = variables;
    path.steps = static_cast<std::size_t>(std::ceil(horizon / resample_dt - 1e-9));
    path.xi.resize(path.steps * variables);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : path.xi) v = normal(rng);
    return path;
}

std::uint64_t run_seed(std::uint64_t master, std::uint64_t run) { return splitmix64(master ^ splitmix64(run)); }

void write_noise_csv(const NoisePath& path, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << "variable,step,xi\n";
    char buf[64];
    for (std::size_t v = 0; v < path.variables; ++v) {
        for (std::size_t s = 0; s < path.steps; ++s) {
            std::snprintf(buf, sizeof buf, "%.17g", path(v, s));
            out << v << ',' << s << ',' << buf << '\n';
        }
    }
}

OUParams ou_for_relative_std(double mean, double sigma_rel, double a) {
    if (!(a > 0.0)) throw DomainError("drift a must be positive");
    if (sigma_rel < 0.0) throw DomainError("sigma_rel must be non-negative");
    return {a, sigma_rel * std::abs(mean) * std::sqrt(2.0 * a)};
}

std::vector<StochasticLoadSpec> make_load_specs(const SystemCase& sc, const StochasticConfig& cfg) {
    std::vector<StochasticLoadSpec> specs;
    auto add = [&](std::size_t li) {
        const Load& l = sc.loads[li];
        StochasticLoadSpec s;
        s.bus = l.bus;
        s.load_index = li;
        s.p0 = l.p;
        s.q0 = l.q;
        s.sigma_rel = cfg.sigma_rel;
        s.p_ou = ou_for_relative_std(l.p, cfg.sigma_rel, cfg.drift_a);
        s.q_ou = ou_for_relative_std(l.q, cfg.sigma_rel, cfg.drift_a);
        specs.push_back(s);
    };
    if (cfg.all_buses) {
        for (std::size_t li = 0; li < sc.loads.size(); ++li) add(li);
        return specs;
    }
    for (int bus : cfg.buses) {
        auto it = std::find_if(sc.loads.begin(), sc.loads.end(), [&](const Load& l) { return l.bus == bus; });
        if (it == sc.loads.end()) throw ValidationError("stochastic bus " + std::to_string(bus) + " carries no load");
        add(static_cast<std::size_t>(it - sc.loads.begin()));
    }
    return specs;
}

PiecewiseSeries sample_load_path(double mean, OUParams p, const NoisePath& path, std::size_t variable) {
    if (variable >= path.variables) throw RangeError("noise variable index out of range");
    PiecewiseSeries s;
    s.interval = path.resample_dt;
    s.mean = mean;
    s.deviation.resize(path.steps);
    double eps = 0.0;
    for (std::size_t j = 0; j < path.steps; ++j) {
        if (j > 0) eps = ou_exact_step(eps, p, path.resample_dt, path(variable, j - 1));
        s.deviation[j] = eps;
    }
    return s;
}

LoadSchedule exact_load_schedule(const SystemCase& sc, std::span<const StochasticLoadSpec> specs,
                                 const NoisePath& path) {
    if (path.variables < 2 * specs.size()) throw RangeError("noise path has too few variables for the loads");
    LoadSchedule sched;
    sched.interval = path.resample_dt;
    sched.values.assign(std::max<std::size_t>(path.steps, 1), mean_loads(sc));
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& sp = specs[i];
        const auto ps = sample_load_path(sp.p0, sp.p_ou, path, 2 * i);
        const auto qs = sample_load_path(sp.q0, sp.q_ou, path, 2 * i + 1);
        for (std::size_t j = 0; j < path.steps; ++j) {
            sched.values[j][sp.load_index] = {ps.value(j), qs.value(j)};
        }
    }
    return sched;
}

}  // namespace stochsim
