#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stochsim {

using cplx = std::complex<double>;

enum class BusType { slack, pv, pq };

struct Bus {
    int id = 0;
    BusType type = BusType::pq;
    double v_set = 1.0;   // p.u., used for slack/PV buses and as the flat-start guess
    double angle = 0.0;   // rad, slack reference angle
};

struct Branch {
    int from = 0;
    int to = 0;
    cplx z{0.0, 0.0};     // series impedance, p.u.
    double b_shunt = 0.0; // total line charging susceptance, p.u.
    double ratio = 1.0;   // off-nominal tap on the from side; 1 for lines
};

enum class MachineModel {
    two_axis,   // full four-state model
    classical,  // constant EMF behind x'_d: e'_q, e'_d frozen
};

struct GeneratorParams {
    double H = 0.0;        // s
    double D = 0.0;        // p.u.
    double xd = 0.0;
    double xd_p = 0.0;
    double xq = 0.0;
    double xq_p = 0.0;
    double Td0_p = 0.0;    // s
    double Tq0_p = 0.0;    // s
    double Rs = 0.0;
    double omega_r = 0.0;  // rad/s
};

struct Generator {
    std::string name;
    int bus = 0;
    double p_sched = 0.0;  // scheduled active output for power flow, p.u.
    MachineModel model = MachineModel::two_axis;
    GeneratorParams params;
};

struct Load {
    int bus = 0;
    double p = 0.0;  // mean active load, p.u.
    double q = 0.0;  // mean reactive load, p.u.
};

/// Static network + machine + load description. Immutable after validation.
///
/// A slack bus with no generator attached is treated as an infinite bus: its
/// solved voltage is held fixed during dynamic simulation.
struct SystemCase {
    std::string name;
    double frequency_hz = 60.0;
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;
    std::vector<Load> loads;

    std::size_t bus_index(int id) const;  // throws ValidationError if absent
    std::optional<std::size_t> find_bus(int id) const;
    std::size_t slack_index() const;
    /// Index of the infinite bus, if the slack bus carries no generator.
    std::optional<std::size_t> infinite_bus() const;
    std::size_t generator_count() const { return generators.size(); }
};

SystemCase parse_case(std::string_view text);
SystemCase load_case(const std::filesystem::path& path);

/// Throws ValidationError naming the first violated invariant.
void validate(const SystemCase& sc);

}  // namespace stochsim
