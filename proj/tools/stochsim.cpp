#include "checks.hpp"

#include "stochsim/ensemble.hpp"
#include "stochsim/error.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#ifndef STOCHSIM_VERSION
#define STOCHSIM_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace stochsim;

namespace {

enum Exit { ok = 0, failure = 1, usage = 2, io = 3 };

unsigned default_jobs() {
    if (const char* env = std::getenv("STOCHSIM_JOBS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return static_cast<unsigned>(n);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Writes through a temporary sibling and renames, so readers never see a
// partial file.
template <class Fn>
void write_atomic(const fs::path& target, Fn&& write) {
    fs::path tmp = target;
    tmp += ".tmp";
    write(tmp);
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + target.string() + ": " + ec.message());
}

void write_json(const ordered_json& j, const fs::path& file) {
    write_atomic(file, [&](const fs::path& tmp) {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << j.dump(2) << '\n';
        if (!out) throw IoError("write failed for " + tmp.string());
    });
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, sep);) {
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

bool is_io(const std::exception& e) {
    return dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e);
}

std::string kind_of(const std::exception& e) {
    if (is_io(e)) return "io";
    if (dynamic_cast<const ParseError*>(&e)) return "parse";
    if (dynamic_cast<const ValidationError*>(&e)) return "validation";
    if (dynamic_cast<const DomainError*>(&e)) return "domain";
    if (dynamic_cast<const SingularityError*>(&e)) return "singularity";
    if (dynamic_cast<const RangeError*>(&e)) return "range";
    if (dynamic_cast<const ConvergenceError*>(&e)) return "convergence";
    return "internal";
}

int report(const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "stochsim: error kind=" << kind_of(e) << " message=\"" << msg << "\"\n";
    return is_io(e) ? io : failure;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct RunArgs {
    fs::path case_file, scenario_file, out = "out";
    std::string solver = "sas", em_mode = "shared-path", monitor = "speed";
    std::size_t runs = 1, order = 2, stride = 0;
    std::uint64_t seed = 0;
    double window = 1e-3, dt = 1e-3, t_s = 15.0, r0 = 0.05;
    unsigned jobs = default_jobs();
    std::vector<int> voltage_buses;
    std::string vars, pdf_var;
};

EnsembleConfig ensemble_config(const RunArgs& a, std::size_t stride) {
    EnsembleConfig cfg;
    cfg.solver = parse_solver(a.solver);
    cfg.sas.order = a.order;
    cfg.sas.window = a.window;
    cfg.sas.record_stride = stride;
    cfg.sas.voltage_buses = a.voltage_buses;
    cfg.em.dt = a.dt;
    cfg.em.mode = parse_em_mode(a.em_mode);
    cfg.em.record_stride = stride;
    cfg.em.voltage_buses = a.voltage_buses;
    cfg.runs = a.runs;
    cfg.master_seed = a.seed;
    cfg.jobs = a.jobs;
    return cfg;
}

ordered_json config_json(const RunArgs& a, std::size_t stride) {
    ordered_json j;
    j["case"] = a.case_file.string();
    j["scenario"] = a.scenario_file.string();
    j["solver"] = a.solver;
    j["runs"] = a.runs;
    j["master_seed"] = a.seed;
    j["order"] = a.order;
    j["window"] = a.window;
    j["dt"] = a.dt;
    j["em_mode"] = a.em_mode;
    j["record_stride"] = stride;
    j["jobs"] = a.jobs;
    j["voltage_buses"] = a.voltage_buses;
    j["monitor"] = a.monitor;
    j["t_s"] = a.t_s;
    j["r0"] = a.r0;
    return j;
}

std::vector<VariableId> stats_variables(const Trajectory& shape, const std::string& list) {
    std::vector<VariableId> vars;
    if (!list.empty()) {
        for (const auto& name : split(list, ',')) vars.push_back(parse_variable(shape, name));
        return vars;
    }
    for (std::size_t k = 0; k < shape.generator_names.size(); ++k) {
        vars.push_back({VariableId::Kind::state, 4 * k});
        vars.push_back({VariableId::Kind::state, 4 * k + 1});
    }
    for (std::size_t i = 0; i < shape.voltage_buses.size(); ++i) vars.push_back({VariableId::Kind::voltage, i});
    return vars;
}

int cmd_run(const RunArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    const bool ensemble = a.runs > 1;
    const std::size_t stride = a.stride ? a.stride : (ensemble ? 10 : 1);
    fs::create_directories(a.out);
    const fs::path manifest_file = a.out / "manifest.json";

    ordered_json manifest;
    manifest["tool"] = "stochsim";
    manifest["version"] = STOCHSIM_VERSION;
    manifest["status"] = "running";
    manifest["config"] = config_json(a, stride);
    ordered_json artifacts = ordered_json::object();

    try {
        const SystemCase sc = load_case(a.case_file);
        const Scenario scen = load_scenario(a.scenario_file);
        validate(scen, sc);
        const PreparedSystem ps = prepare(sc);
        EnsembleConfig cfg = ensemble_config(a, stride);

        if (!ensemble) {
            const auto r0 = std::chrono::steady_clock::now();
            const Trajectory traj = run_member(ps, scen, cfg, 0);
            const double wall = seconds_since(r0);
            const fs::path file = a.out / "trajectory.csv";
            write_atomic(file, [&](const fs::path& tmp) { write_trajectory_csv(traj, tmp); });
            artifacts["trajectory"] = file.filename().string();
            manifest["seeds"] = {run_seed(a.seed, 0)};
            manifest["run_seconds"] = {wall};
            manifest["diverged"] = traj.diverged;
            if (traj.diverged) manifest["diverged_at"] = traj.diverged_at;
        } else {
            cfg.progress = [&](std::size_t done) {
                if (done % 10 == 0 || done == a.runs) std::cout << "run " << done << "/" << a.runs << '\n';
            };
            const Ensemble e = run_ensemble(ps, scen, cfg);
            const Trajectory& shape = e.runs.front();

            const auto vars = stats_variables(shape, a.vars);
            const fs::path stats = a.out / "stats.csv";
            write_atomic(stats, [&](const fs::path& tmp) { write_stats_csv(e, vars, tmp); });
            artifacts["stats"] = stats.filename().string();

            const std::string pdf_name =
                !a.pdf_var.empty() ? a.pdf_var
                : shape.voltage_buses.empty() ? "G1.delta"
                                              : "V" + std::to_string(shape.voltage_buses.front());
            std::vector<double> times;
            for (double t = 0.0; t <= shape.times.back() + 1e-9; t += 1.0) times.push_back(t);
            const auto snaps = pdf_evolution(e, parse_variable(shape, pdf_name), times);
            const fs::path pdf = a.out / "pdf.csv";
            write_atomic(pdf, [&](const fs::path& tmp) { write_pdf_csv(snaps, tmp); });
            artifacts["pdf"] = pdf.filename().string();

            const auto crit = make_stability_criterion(ps, scen, a.t_s, a.r0, parse_monitor(a.monitor));
            const auto res = assess_stability(e, crit);
            const fs::path stab = a.out / "stability.json";
            write_atomic(stab, [&](const fs::path& tmp) { write_stability_json(crit, res, tmp); });
            artifacts["stability"] = stab.filename().string();

            std::size_t diverged = 0;
            for (const auto& r : e.runs) diverged += r.diverged ? 1 : 0;
            manifest["seeds"] = e.seeds;
            manifest["run_seconds"] = e.wall_seconds;
            manifest["diverged_count"] = diverged;
            manifest["stability_probability"] = res.probability;
            std::cout << "P(stable) = " << res.probability << " over " << e.size() << " runs\n";
        }
        manifest["status"] = "ok";
    } catch (const std::exception& e) {
        manifest["status"] = "failed";
        manifest["error"] = {{"kind", kind_of(e)}, {"message", e.what()}};
        manifest["artifacts"] = artifacts;
        manifest["total_seconds"] = seconds_since(t0);
        try {
            write_json(manifest, manifest_file);
        } catch (const std::exception&) {
        }
        throw;
    }
    manifest["artifacts"] = artifacts;
    manifest["total_seconds"] = seconds_since(t0);
    write_json(manifest, manifest_file);
    return ok;
}

struct BenchArgs {
    fs::path case_file, scenario_file, out = "bench";
    std::string solvers = "sas,em:paper-sde,em:shared-path", em_mode = "paper-sde";
    std::size_t runs = 10, order = 2;
    std::uint64_t seed = 0;
    double step = 1e-3;
};

int cmd_bench(const BenchArgs& a) {
    const SystemCase sc = load_case(a.case_file);
    const Scenario scen = load_scenario(a.scenario_file);
    validate(scen, sc);
    const PreparedSystem ps = prepare(sc);

    ordered_json entries = ordered_json::array();
    double reference = 0.0;
    for (const auto& spec : split(a.solvers, ',')) {
        const auto parts = split(spec, ':');
        EnsembleConfig cfg;
        cfg.solver = parse_solver(parts.at(0));
        cfg.sas.order = a.order;
        cfg.sas.window = a.step;
        cfg.em.dt = a.step;
        cfg.em.mode = parse_em_mode(parts.size() > 1 ? parts[1] : a.em_mode);
        cfg.runs = a.runs;
        cfg.master_seed = a.seed;
        cfg.jobs = 1;  // serial, so timings are per run
        const Ensemble e = run_ensemble(ps, scen, cfg);
        double sum = 0.0;
        for (double w : e.wall_seconds) sum += w;
        if (entries.empty()) reference = sum;
        const std::string label = cfg.solver == SolverKind::sas ? std::string("sas")
                                                                : std::string("em:") + to_string(cfg.em.mode);
        const double ratio = sum / reference;
        std::cout << label << ": total " << sum << " s, mean " << sum / static_cast<double>(e.size())
                  << " s/run, ratio " << ratio << '\n';
        entries.push_back({{"solver", label},
                           {"step", a.step},
                           {"run_seconds", e.wall_seconds},
                           {"total_seconds", sum},
                           {"ratio_to_first", ratio}});
    }
    fs::create_directories(a.out);
    ordered_json j;
    j["tool"] = "stochsim";
    j["version"] = STOCHSIM_VERSION;
    j["case"] = a.case_file.string();
    j["scenario"] = a.scenario_file.string();
    j["runs"] = a.runs;
    j["master_seed"] = a.seed;
    j["entries"] = entries;
    write_json(j, a.out / "bench.json");
    return ok;
}

int cmd_validate(const cli::CheckOptions& o) {
    bool all = true;
    for (const auto& r : cli::run_all_checks(o)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        all = all && r.passed;
    }
    return all ? ok : failure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic transient stability simulation"};
    app.set_version_flag("--version", STOCHSIM_VERSION);
    app.require_subcommand(1);

    RunArgs ra;
    auto* run = app.add_subcommand("run", "Simulate one run or an ensemble");
    run->add_option("--case", ra.case_file, "System case JSON")->required();
    run->add_option("--scenario", ra.scenario_file, "Scenario JSON")->required();
    run->add_option("--solver", ra.solver, "sas or em")->check(CLI::IsMember({"sas", "em"}));
    run->add_option("--runs", ra.runs, "Ensemble size")->check(CLI::PositiveNumber);
    run->add_option("--seed", ra.seed, "Master seed");
    run->add_option("--order", ra.order, "SAS order")->check(CLI::Range(1, 12));
    run->add_option("--window", ra.window, "SAS window length, s")->check(CLI::PositiveNumber);
    run->add_option("--dt", ra.dt, "EM step, s")->check(CLI::PositiveNumber);
    run->add_option("--em-mode", ra.em_mode, "shared-path or paper-sde")
        ->check(CLI::IsMember({"shared-path", "paper-sde"}));
    run->add_option("--stride", ra.stride, "Record every n-th step (default 1, or 10 for ensembles)");
    run->add_option("--out", ra.out, "Output directory");
    run->add_option("--jobs", ra.jobs, "Worker threads (default $STOCHSIM_JOBS or all cores)")
        ->check(CLI::PositiveNumber);
    run->add_option("--voltage-buses", ra.voltage_buses, "Bus ids whose voltage magnitude is recorded")
        ->delimiter(',');
    run->add_option("--vars", ra.vars, "Comma-separated variables for stats.csv");
    run->add_option("--pdf-var", ra.pdf_var, "Variable for pdf.csv");
    run->add_option("--monitor", ra.monitor, "speed or coi_angle")->check(CLI::IsMember({"speed", "coi_angle"}));
    run->add_option("--t-s", ra.t_s, "Stability settling time, s");
    run->add_option("--r0", ra.r0, "Stability radius")->check(CLI::PositiveNumber);

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "Time solvers on the same seeds and step");
    bench->add_option("--case", ba.case_file, "System case JSON")->required();
    bench->add_option("--scenario", ba.scenario_file, "Scenario JSON")->required();
    bench->add_option("--solvers", ba.solvers, "Comma list of sas, em, em:<mode>");
    bench->add_option("--em-mode", ba.em_mode, "Mode for a bare em entry");
    bench->add_option("--runs", ba.runs, "Runs per solver")->check(CLI::PositiveNumber);
    bench->add_option("--seed", ba.seed, "Master seed");
    bench->add_option("--order", ba.order, "SAS order")->check(CLI::Range(1, 12));
    bench->add_option("--step", ba.step, "SAS window and EM step, s")->check(CLI::PositiveNumber);
    bench->add_option("--out", ba.out, "Output directory");

    cli::CheckOptions co;
    auto* val = app.add_subcommand("validate", "Run the built-in oracle checks");
    val->add_option("--smib-case", co.smib_case, "SMIB case JSON");
    val->add_option("--case", co.grid_case, "Multimachine case JSON");
    val->add_option("--scenario", co.fault_scenario, "Fault scenario JSON");
    val->add_flag("--quick", co.quick, "Fewer samples, wider tolerances, 2 s cross-solver horizon");
    val->add_flag_function(
        "--inject-fault", [&](std::int64_t) { co.inject = 1e-3; },
        "Perturb the closed-form oracle so the SMIB check must fail");
    val->add_option("--seed", co.seed, "Sampling seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*run) return cmd_run(ra);
        if (*bench) return cmd_bench(ba);
        return cmd_validate(co);
    } catch (const std::exception& e) {
        return report(e);
    }
}
