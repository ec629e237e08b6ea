#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace stochsim {

/// Sampled solution of one run. States are stored row-major, four per
/// generator in (δ, ω, e'q, e'd) order; optional bus voltage magnitudes
/// likewise.
struct Trajectory {
    std::vector<std::string> generator_names;
    std::vector<int> voltage_buses;
    std::vector<double> times;
    std::vector<double> states;
    std::vector<double> voltages;
    bool diverged = false;
    double diverged_at = std::numeric_limits<double>::quiet_NaN();

    std::size_t rows() const { return times.size(); }
    std::size_t state_width() const { return 4 * generator_names.size(); }
    std::span<const double> row(std::size_t r) const { return {states.data() + r * state_width(), state_width()}; }
    double state(std::size_t r, std::size_t col) const { return states[r * state_width() + col]; }
    double voltage(std::size_t r, std::size_t i) const { return voltages[r * voltage_buses.size() + i]; }
};

/// A column of a trajectory: a machine state or a monitored bus voltage.
struct VariableId {
    enum class Kind { state, voltage } kind = Kind::state;
    std::size_t index = 0;  // state column, or position in voltage_buses
};

/// Accepts "<generator>.delta|omega|eqp|edp" or "V<bus>" (e.g. "G1.delta",
/// "V30"). Throws ValidationError for unknown names.
VariableId parse_variable(const Trajectory& shape, const std::string& name);
std::string variable_name(const Trajectory& shape, VariableId v);

double value(const Trajectory& t, std::size_t row, VariableId v);
std::vector<double> column(const Trajectory& t, VariableId v);

/// Header `t,<gen>.delta,<gen>.omega,<gen>.eqp,<gen>.edp,...[,V<bus>...]`,
/// values in %.17g.
void write_trajectory_csv(const Trajectory& t, const std::filesystem::path& file);

/// %.17g, the round-trip format used by every artifact.
std::string format_double(double v);

}  // namespace stochsim
