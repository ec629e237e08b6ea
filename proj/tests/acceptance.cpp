// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "checks.hpp"

#include "stochsim/em.hpp"
#include "stochsim/ensemble.hpp"
#include "stochsim/sas.hpp"
#include "stochsim/series.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <thread>

using namespace stochsim;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = STOCHSIM_SOURCE_DIR;
constexpr std::uint64_t kSeed = 7;
constexpr std::size_t kRuns = 100;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s %2d %-28s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

double sup_delta(const Trajectory& a, const Trajectory& b, std::size_t gen) {
    double worst = 0.0;
    for (std::size_t r = 0; r < std::min(a.rows(), b.rows()); ++r) {
        worst = std::max(worst, std::abs(a.state(r, 4 * gen) - b.state(r, 4 * gen)));
    }
    return worst;
}

std::size_t row_at(const Trajectory& t, double time) {
    const auto it = std::lower_bound(t.times.begin(), t.times.end(), time - 1e-9);
    return static_cast<std::size_t>(it - t.times.begin());
}

unsigned jobs() {
    return std::max(1u, std::thread::hardware_concurrency());
}

Ensemble ensemble(const PreparedSystem& ps, const Scenario& sc) {
    EnsembleConfig cfg;
    cfg.runs = kRuns;
    cfg.master_seed = kSeed;
    cfg.jobs = jobs();
    cfg.sas.record_stride = 10;
    cfg.sas.voltage_buses = {30};
    return run_ensemble(ps, sc, cfg);
}

void write_artifacts(const PreparedSystem& ps, const Scenario& sc, const Ensemble& e, const fs::path& dir) {
    fs::create_directories(dir);
    const Trajectory& shape = e.runs.front();
    const std::vector<VariableId> vars{parse_variable(shape, "G1.delta"), parse_variable(shape, "G1.omega"),
                                       parse_variable(shape, "V30")};
    write_stats_csv(e, vars, dir / "stats.csv");
    std::vector<double> times;
    for (int s = 0; s <= 20; ++s) times.push_back(s);
    write_pdf_csv(pdf_evolution(e, vars[0], times), dir / "pdf.csv");
    const StabilityCriterion crit = make_stability_criterion(ps, sc);
    write_stability_json(crit, assess_stability(e, crit), dir / "stability.json");
    write_trajectory_csv(e.runs.front(), dir / "run0.csv");
}

void criteria_1_to_3() {
    cli::CheckOptions o;
    o.smib_case = kRoot / "cases/smib.json";
    o.grid_case = kRoot / "cases/ieee39.json";
    o.fault_scenario = kRoot / "scenarios/fault.json";

    auto t0 = std::chrono::steady_clock::now();
    const cli::CheckResult smib = cli::check_smib_equivalence(o);
    double dt = seconds_since(t0);
    report(1, "smib_sas_equivalence", smib.passed && dt < 1.0,
           fmt("max rel err %.3g (tol %.0e), %.3f s (limit 1 s)", smib.measured, smib.tolerance, dt));

    t0 = std::chrono::steady_clock::now();
    const cli::CheckResult var = cli::check_ou_variance(o);
    const cli::CheckResult acf = cli::check_ou_autocorrelation(o);
    const cli::CheckResult cf = cli::check_ou_closed_form(o);
    dt = seconds_since(t0);
    report(2, "ou_exactness", var.passed && acf.passed && cf.passed && dt < 10.0,
           fmt("variance %.3g (tol %.2g), autocorrelation %.3g (tol %.2g), closed form %.3g (tol %.2g), %.2f s "
               "(limit 10 s)",
               var.measured, var.tolerance, acf.measured, acf.tolerance, cf.measured, cf.tolerance, dt));

    t0 = std::chrono::steady_clock::now();
    const cli::CheckResult cross = cli::check_cross_solver(o);
    dt = seconds_since(t0);
    report(3, "deterministic_limit", cross.passed,
           fmt("max |d delta| %.3g rad (tol %.0e), %.2f s", cross.measured, cross.tolerance, dt));
}

void criterion_4() {
    // x' = -x from x(0) = 1; the error of one window against e^-h.
    auto window_error = [](std::size_t order, double h) {
        const double x0 = 1.0;
        const auto sol = taylor_solution(std::span(&x0, 1), [](std::span<const Series> x) {
            return std::vector<Series>{-x[0]};
        }, order);
        return std::abs(sol[0].evaluate(h) - std::exp(-h));
    };
    double worst = 0.0;
    std::string detail;
    for (std::size_t order = 1; order <= 4; ++order) {
        const double h = 0.05;
        const double slope = std::log2(window_error(order, h) / window_error(order, h / 2));
        worst = std::max(worst, std::abs(slope - static_cast<double>(order + 1)));
        detail += fmt("N=%zu slope %.3f; ", order, slope);
    }
    report(4, "order_check", worst <= 0.3, detail + fmt("max deviation %.3f (tol 0.3)", worst));
}

void criterion_5(const PreparedSystem& ps) {
    const Scenario sc = load_scenario(kRoot / "scenarios/none.json");
    const Trajectory t = simulate_sas(ps, sc, SolverConfig{}, scenario_noise_path(ps.sc, sc, kSeed));
    double drift = 0.0;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.state_width(); ++c) drift = std::max(drift, std::abs(t.state(r, c) - ps.x0[c]));
    }
    report(5, "equilibrium_preservation", drift < 1e-7 && !t.diverged,
           fmt("max drift %.3g over %.0f s (tol 1e-7)", drift, t.times.back()));
}

void criterion_6(const PreparedSystem& ps, const Scenario& a) {
    const NoisePath path = scenario_noise_path(ps.sc, a, kSeed);
    const Trajectory s = simulate_sas(ps, a, SolverConfig{}, path);
    const Trajectory e = simulate_em(ps, a, EMConfig{}, path);
    const double d = sup_delta(s, e, 0);
    report(6, "cross_solver_pathwise", d < 5e-3 && s.rows() == e.rows(),
           fmt("sup |d delta1| %.3g rad at h = 1e-3 (tol 5e-3)", d));
}

void criterion_7(const PreparedSystem& ps, const Scenario& a, const Ensemble& first, const fs::path& work) {
    write_artifacts(ps, a, first, work / "det1");
    write_artifacts(ps, a, ensemble(ps, a), work / "det2");
    std::size_t same = 0, total = 0;
    for (const char* f : {"stats.csv", "pdf.csv", "stability.json", "run0.csv"}) {
        const std::string x = slurp(work / "det1" / f), y = slurp(work / "det2" / f);
        ++total;
        if (!x.empty() && x == y) ++same;
    }
    report(7, "determinism", same == total, fmt("%zu/%zu artifacts byte-identical (100 runs, seed 7)", same, total));
}

}  // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "stochsim_acceptance";
    fs::remove_all(work);

    criteria_1_to_3();
    criterion_4();

    const PreparedSystem ps = prepare(load_case(kRoot / "cases/ieee39.json"));
    const Scenario a = load_scenario(kRoot / "scenarios/caseA.json");
    const Scenario b = load_scenario(kRoot / "scenarios/caseB.json");
    const Scenario c = load_scenario(kRoot / "scenarios/caseC.json");
    criterion_5(ps);
    criterion_6(ps, a);

    const Ensemble ea = ensemble(ps, a);
    criterion_7(ps, a, ea, work);
    const Ensemble eb = ensemble(ps, b);
    const Ensemble ec = ensemble(ps, c);

    // 8: stability trend.
    const double pa = stability_probability(ea, make_stability_criterion(ps, a));
    const double pb = stability_probability(eb, make_stability_criterion(ps, b));
    const double pc = stability_probability(ec, make_stability_criterion(ps, c));
    report(8, "stability_trend", pa >= pb && pb >= pc && pa >= 0.75 && pa <= 1.0 && pb >= 0.4 && pb <= 0.8,
           fmt("P(A)=%.2f P(B)=%.2f P(C)=%.2f (need A>=B>=C, A in [0.75,1], B in [0.4,0.8])", pa, pb, pc));

    // 9: case C spread keeps growing.
    const Trajectory& shape = ec.runs.front();
    const VariableId d1 = parse_variable(shape, "G1.delta"), v30 = parse_variable(shape, "V30");
    const Envelope env = confidence_envelope(ec, d1, 0.9);
    const std::size_t r5 = row_at(shape, 5.0), r10 = row_at(shape, 10.0), r20 = row_at(shape, 20.0);
    const double w5 = env.upper[r5] - env.lower[r5], w20 = env.upper[r20] - env.lower[r20];
    const SeriesStats sv = ensemble_stats(ec, v30);
    report(9, "case_c_growth", w20 > 3.0 * w5 && sv.std[r20] > sv.std[r10],
           fmt("delta1 90%% width %.4g at 20 s vs %.4g at 5 s (ratio %.2f, need > 3); V30 std %.4g at 20 s vs %.4g "
               "at 10 s",
               w20, w5, w20 / w5, sv.std[r20], sv.std[r10]));

    // 10: variance ordering.
    auto peak_std = [&](const Ensemble& e) {
        const SeriesStats s = ensemble_stats(e, d1);
        return *std::max_element(s.std.begin(), s.std.end());
    };
    const double sa = peak_std(ea), sb = peak_std(eb);
    report(10, "variance_ordering", sb > sa, fmt("peak std delta1: B %.4g > A %.4g rad", sb, sa));

    // 11: timing at matched steps, serial, case A.
    auto time_runs = [&](SolverKind solver, EMMode mode) {
        EnsembleConfig cfg;
        cfg.solver = solver;
        cfg.em.mode = mode;
        cfg.master_seed = kSeed;
        cfg.runs = 5;
        cfg.jobs = 1;
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < cfg.runs; ++i) run_member(ps, a, cfg, i);
        return seconds_since(t0) / static_cast<double>(cfg.runs);
    };
    const double t_sas = time_runs(SolverKind::sas, EMMode::shared_path);
    const double t_sde = time_runs(SolverKind::em, EMMode::sde);
    const double t_shared = time_runs(SolverKind::em, EMMode::shared_path);
    report(11, "timing", t_sas <= 1.1 * t_sde,
           fmt("per run: sas %.4f s, em paper-sde %.4f s (speedup %.2fx), em shared-path %.4f s (speedup %.2fx)",
               t_sas, t_sde, t_sde / t_sas, t_shared, t_shared / t_sas));

    fs::remove_all(work);
    std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
