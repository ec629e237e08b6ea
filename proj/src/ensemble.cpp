#include "stochsim/ensemble.hpp"

#include "stochsim/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

namespace stochsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> finite_samples(const Ensemble& e, std::size_t row, VariableId v) {
    std::vector<double> xs;
    xs.reserve(e.size());
    for (const auto& t : e.runs) {
        const double x = value(t, row, v);
        if (std::isfinite(x)) xs.push_back(x);
    }
    return xs;
}

void require_runs(const Ensemble& e) {
    if (e.runs.empty()) throw ValidationError("ensemble has no runs");
}

void write_or_throw(std::ofstream& out, const std::filesystem::path& file) {
    if (!out) throw IoError("failed writing " + file.string());
}

}  // namespace

const char* to_string(SolverKind s) { return s == SolverKind::em ? "em" : "sas"; }

SolverKind parse_solver(const std::string& s) {
    if (s == "sas") return SolverKind::sas;
    if (s == "em") return SolverKind::em;
    throw ValidationError("unknown solver '" + s + "' (expected sas or em)");
}

const char* to_string(Monitor m) { return m == Monitor::coi_angle ? "coi_angle" : "speed"; }

Monitor parse_monitor(const std::string& s) {
    if (s == "speed") return Monitor::speed;
    if (s == "coi_angle") return Monitor::coi_angle;
    throw ValidationError("unknown monitor '" + s + "' (expected speed or coi_angle)");
}

Trajectory run_member(const PreparedSystem& ps, const Scenario& sc, const EnsembleConfig& config, std::size_t index) {
    const std::uint64_t seed = run_seed(config.master_seed, index);
    if (config.solver == SolverKind::em) {
        return simulate_em(ps, sc, config.em, em_noise_path(ps.sc, sc, config.em, seed));
    }
    return simulate_sas(ps, sc, config.sas, scenario_noise_path(ps.sc, sc, seed));
}

Ensemble run_ensemble(const PreparedSystem& ps, const Scenario& sc, const EnsembleConfig& config) {
    if (config.runs < 1) throw ValidationError("ensemble needs at least one run");
    Ensemble e;
    e.master_seed = config.master_seed;
    e.solver = config.solver;
    e.scenario = sc.name;
    e.runs.resize(config.runs);
    e.wall_seconds.assign(config.runs, 0.0);
    for (std::size_t i = 0; i < config.runs; ++i) e.seeds.push_back(run_seed(config.master_seed, i));

    const auto start = std::chrono::steady_clock::now();
    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    std::mutex mu;
    std::exception_ptr failure;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= config.runs) return;
            {
                std::lock_guard lock(mu);
                if (failure) return;
            }
            try {
                const auto t0 = std::chrono::steady_clock::now();
                e.runs[i] = run_member(ps, sc, config, i);
                e.wall_seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                std::lock_guard lock(mu);
                ++done;
                if (config.progress) config.progress(done);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const unsigned jobs = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(config.runs)));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    e.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return e;
}

SeriesStats ensemble_stats(const Ensemble& e, VariableId v) {
    require_runs(e);
    const std::size_t rows = e.runs.front().rows();
    SeriesStats s;
    s.mean.assign(rows, kNaN);
    s.std.assign(rows, kNaN);
    s.count.assign(rows, 0);
    // Samples are summed in sorted order so the result does not depend on run order.
    std::vector<double> xs;
    xs.reserve(e.size());
    for (std::size_t r = 0; r < rows; ++r) {
        xs.clear();
        for (const auto& t : e.runs) {
            const double x = value(t, r, v);
            if (std::isfinite(x)) xs.push_back(x);
        }
        std::sort(xs.begin(), xs.end());
        const std::size_t n = xs.size();
        s.count[r] = n;
        if (n == 0) continue;
        if (xs.front() == xs.back()) {
            s.mean[r] = xs.front();
            s.std[r] = 0.0;
            s.single_sample = s.single_sample || n == 1;
            continue;
        }
        double sum = 0.0;
        for (double x : xs) sum += x;
        const double mean = sum / static_cast<double>(n);
        s.mean[r] = mean;
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        s.std[r] = std::sqrt(ss / static_cast<double>(n - 1));
    }
    return s;
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) return kNaN;
    if (p < 0.0 || p > 1.0) throw DomainError("quantile level outside [0, 1]");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return sorted[lo] + w * (sorted[hi] - sorted[lo]);
}

Envelope confidence_envelope(const Ensemble& e, VariableId v, double level) {
    require_runs(e);
    if (e.size() < 10) throw ValidationError("confidence envelope needs at least 10 runs");
    if (!(level >= 0.0 && level <= 1.0)) throw DomainError("envelope level must lie in [0, 1]");
    const double lo_p = (1.0 - level) / 2.0, hi_p = 1.0 - lo_p;
    const std::size_t rows = e.runs.front().rows();
    Envelope env;
    env.lower.resize(rows);
    env.upper.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        auto xs = finite_samples(e, r, v);
        std::sort(xs.begin(), xs.end());
        env.lower[r] = quantile_sorted(xs, lo_p);
        env.upper[r] = quantile_sorted(xs, hi_p);
    }
    return env;
}

std::vector<PdfSnapshot> pdf_evolution(const Ensemble& e, VariableId v, std::span<const double> times) {
    require_runs(e);
    const auto& grid = e.runs.front().times;
    const double step = grid.size() > 1 ? grid[1] - grid[0] : 1.0;
    const SeriesStats st = ensemble_stats(e, v);
    std::vector<PdfSnapshot> out;
    for (double t : times) {
        const auto it = std::lower_bound(grid.begin(), grid.end(), t - 1e-9 * step);
        if (it == grid.end() || std::abs(*it - t) > 1e-9 * std::max(1.0, std::abs(t))) {
            throw RangeError("time " + format_double(t) + " is not on the recorded grid");
        }
        const auto r = static_cast<std::size_t>(it - grid.begin());
        out.push_back({*it, variable_name(e.runs.front(), v), st.mean[r], st.std[r], st.count[r]});
    }
    return out;
}

StabilityCriterion make_stability_criterion(const PreparedSystem& ps, const Scenario& sc, double t_s, double r0,
                                            Monitor monitor) {
    if (!(r0 > 0.0)) throw ValidationError("r0 must be positive");
    if (!(t_s >= 0.0 && t_s < sc.horizon)) throw ValidationError("t_s must lie within the horizon");
    StabilityCriterion c;
    c.t_s = t_s;
    c.r0 = r0;
    c.monitor = monitor;
    c.x_eq = solve_equilibrium(ps, final_condition(sc)).state;
    for (const auto& g : ps.sc.generators) c.inertia.push_back(g.params.H);
    return c;
}

StabilityResult assess_stability(const Ensemble& e, const StabilityCriterion& crit) {
    require_runs(e);
    const std::size_t K = crit.x_eq.generator_count();
    double htot = 0.0;
    for (double h : crit.inertia) htot += h;
    auto coi = [&](auto delta_of) {
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) acc += crit.inertia[k] * delta_of(k);
        return acc / htot;
    };
    const double eq_coi = coi([&](std::size_t k) { return crit.x_eq.delta(k); });

    const auto& grid = e.runs.front().times;
    if (std::none_of(grid.begin(), grid.end(), [&](double t) { return t > crit.t_s; })) {
        throw RangeError("no recorded time after t_s");
    }

    StabilityResult res;
    for (const auto& t : e.runs) {
        double worst = t.diverged ? std::numeric_limits<double>::infinity() : 0.0;
        for (std::size_t r = 0; r < t.rows() && std::isfinite(worst); ++r) {
            if (!(t.times[r] > crit.t_s)) continue;
            const auto x = t.row(r);
            double dev = 0.0;
            if (crit.monitor == Monitor::speed) {
                for (std::size_t k = 0; k < K; ++k) dev = std::max(dev, std::abs(x[4 * k + 1] - crit.x_eq.omega(k)));
            } else {
                const double c = coi([&](std::size_t k) { return x[4 * k]; });
                for (std::size_t k = 0; k < K; ++k) {
                    dev = std::max(dev, std::abs((x[4 * k] - c) - (crit.x_eq.delta(k) - eq_coi)));
                }
            }
            worst = std::isfinite(dev) ? std::max(worst, dev) : std::numeric_limits<double>::infinity();
        }
        res.stable.push_back(worst < crit.r0);
        res.max_deviation.push_back(worst);
    }
    res.probability = static_cast<double>(std::count(res.stable.begin(), res.stable.end(), true)) /
                      static_cast<double>(e.size());
    return res;
}

double stability_probability(const Ensemble& e, const StabilityCriterion& crit) {
    return assess_stability(e, crit).probability;
}

void write_stats_csv(const Ensemble& e, std::span<const VariableId> vars, const std::filesystem::path& file) {
    require_runs(e);
    const Trajectory& shape = e.runs.front();
    std::vector<SeriesStats> stats;
    std::vector<Envelope> envs;
    for (const auto& v : vars) {
        stats.push_back(ensemble_stats(e, v));
        if (e.size() >= 10) envs.push_back(confidence_envelope(e, v, 0.9));
    }
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << 't';
    for (const auto& v : vars) {
        const std::string n = variable_name(shape, v);
        out << ',' << n << ".mean," << n << ".std," << n << ".q05," << n << ".q95";
    }
    out << '\n';
    for (std::size_t r = 0; r < shape.rows(); ++r) {
        out << format_double(shape.times[r]);
        for (std::size_t i = 0; i < vars.size(); ++i) {
            out << ',' << format_double(stats[i].mean[r]) << ',' << format_double(stats[i].std[r]);
            const double lo = envs.empty() ? kNaN : envs[i].lower[r];
            const double hi = envs.empty() ? kNaN : envs[i].upper[r];
            out << ',' << format_double(lo) << ',' << format_double(hi);
        }
        out << '\n';
    }
    write_or_throw(out, file);
}

void write_pdf_csv(std::span<const PdfSnapshot> snaps, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << "time,variable,mean,std,count\n";
    for (const auto& s : snaps) {
        out << format_double(s.time) << ',' << s.variable << ',' << format_double(s.mean) << ','
            << format_double(s.std) << ',' << s.count << '\n';
    }
    write_or_throw(out, file);
}

void write_stability_json(const StabilityCriterion& crit, const StabilityResult& res,
                          const std::filesystem::path& file) {
    nlohmann::ordered_json j;
    j["criterion"] = {{"t_s", crit.t_s}, {"r0", crit.r0}, {"monitor", to_string(crit.monitor)}, {"norm", "inf"}};
    auto& runs = j["runs"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < res.stable.size(); ++i) {
        const double d = res.max_deviation[i];
        runs.push_back({{"run", i}, {"stable", static_cast<bool>(res.stable[i])},
                        {"max_deviation", std::isfinite(d) ? nlohmann::ordered_json(d) : nlohmann::ordered_json()}});
    }
    j["probability"] = res.probability;
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << j.dump(2) << '\n';
    write_or_throw(out, file);
}

}  // namespace stochsim
