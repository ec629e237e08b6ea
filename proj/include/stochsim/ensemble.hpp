#pragma once

#include "stochsim/em.hpp"
#include "stochsim/machine.hpp"
#include "stochsim/sas.hpp"
#include "stochsim/scenario.hpp"
#include "stochsim/trajectory.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace stochsim {

enum class SolverKind { sas, em };

const char* to_string(SolverKind s);
SolverKind parse_solver(const std::string& s);

struct EnsembleConfig {
    SolverKind solver = SolverKind::sas;
    SolverConfig sas;
    EMConfig em;
    std::size_t runs = 100;
    std::uint64_t master_seed = 0;
    unsigned jobs = 1;
    /// Called after each completed run with the number finished so far.
    /// Calls are serialized.
    std::function<void(std::size_t)> progress;
};

struct Ensemble {
    std::vector<Trajectory> runs;
    std::vector<std::uint64_t> seeds;
    std::vector<double> wall_seconds;  // per run
    double total_seconds = 0.0;
    std::uint64_t master_seed = 0;
    SolverKind solver = SolverKind::sas;
    std::string scenario;

    std::size_t size() const { return runs.size(); }
};

/// Run i draws its noise from run_seed(master, i). Results are stored by run
/// index, so the ensemble does not depend on `jobs` or scheduling. Diverged
/// runs are kept.
Ensemble run_ensemble(const PreparedSystem& ps, const Scenario& sc, const EnsembleConfig& config);

/// One run of an ensemble, exactly as run_ensemble would produce it.
Trajectory run_member(const PreparedSystem& ps, const Scenario& sc, const EnsembleConfig& config, std::size_t index);

struct SeriesStats {
    std::vector<double> mean;
    std::vector<double> std;   // n - 1 denominator
    std::vector<std::size_t> count;  // finite samples per instant
    bool single_sample = false;      // std forced to 0 somewhere because n = 1
};

/// Pointwise statistics over finite samples (diverged runs contribute NaN and
/// are skipped).
SeriesStats ensemble_stats(const Ensemble& e, VariableId v);

/// Quantile of sorted data by linear interpolation between order statistics
/// at position (n - 1) p.
double quantile_sorted(std::span<const double> sorted, double p);

struct Envelope {
    std::vector<double> lower;
    std::vector<double> upper;
};

/// Pointwise quantiles at (1 - level)/2 and 1 - (1 - level)/2. Needs at least
/// ten runs; level 1 gives min/max.
Envelope confidence_envelope(const Ensemble& e, VariableId v, double level = 0.9);

struct PdfSnapshot {
    double time = 0.0;
    std::string variable;
    double mean = 0.0;
    double std = 0.0;
    std::size_t count = 0;
};

/// Normal fit (sample mean and std) at each requested time; each time must
/// fall on the recorded grid.
std::vector<PdfSnapshot> pdf_evolution(const Ensemble& e, VariableId v, std::span<const double> times);

enum class Monitor {
    speed,      // ω_k - ω_eq,k
    coi_angle,  // (δ_k - δ_COI) - (δ_eq,k - δ_eq,COI)
};

const char* to_string(Monitor m);
Monitor parse_monitor(const std::string& s);

struct StabilityCriterion {
    double t_s = 15.0;
    double r0 = 0.05;
    Monitor monitor = Monitor::speed;
    DynamicState x_eq;
    std::vector<double> inertia;  // COI weights
};

/// x_eq from the post-event network of the scenario at mean loads.
StabilityCriterion make_stability_criterion(const PreparedSystem& ps, const Scenario& sc, double t_s = 15.0,
                                            double r0 = 0.05, Monitor monitor = Monitor::speed);

struct StabilityResult {
    std::vector<bool> stable;        // per run
    std::vector<double> max_deviation;  // sup over t > t_s of the infinity norm
    double probability = 0.0;
};

/// A run is stable when the monitored infinity norm stays below r0 at every
/// grid time after t_s; diverged runs are unstable.
StabilityResult assess_stability(const Ensemble& e, const StabilityCriterion& crit);
double stability_probability(const Ensemble& e, const StabilityCriterion& crit);

/// `t` then `<var>.mean,<var>.std,<var>.q05,<var>.q95` per variable; the
/// quantile columns are NaN for ensembles smaller than ten.
void write_stats_csv(const Ensemble& e, std::span<const VariableId> vars, const std::filesystem::path& file);

/// `time,variable,mean,std,count`
void write_pdf_csv(std::span<const PdfSnapshot> snaps, const std::filesystem::path& file);

void write_stability_json(const StabilityCriterion& crit, const StabilityResult& res, const std::filesystem::path& file);

}  // namespace stochsim
