#include "stochsim/trajectory.hpp"

#include "stochsim/error.hpp"

#include <cstdio>
#include <fstream>

namespace stochsim {

namespace {

constexpr const char* kStateSuffix[] = {"delta", "omega", "eqp", "edp"};

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

VariableId parse_variable(const Trajectory& shape, const std::string& name) {
    if (name.size() > 1 && name[0] == 'V' && name.find('.') == std::string::npos) {
        int bus = 0;
        try {
            std::size_t used = 0;
            bus = std::stoi(name.substr(1), &used);
            if (used != name.size() - 1) throw std::invalid_argument(name);
        } catch (const std::exception&) {
            throw ValidationError("unknown variable '" + name + "'");
        }
        for (std::size_t i = 0; i < shape.voltage_buses.size(); ++i) {
            if (shape.voltage_buses[i] == bus) return {VariableId::Kind::voltage, i};
        }
        throw ValidationError("bus " + std::to_string(bus) + " voltage was not recorded");
    }
    const auto dot = name.rfind('.');
    if (dot != std::string::npos) {
        const std::string gen = name.substr(0, dot), suffix = name.substr(dot + 1);
        for (std::size_t g = 0; g < shape.generator_names.size(); ++g) {
            if (shape.generator_names[g] != gen) continue;
            for (std::size_t s = 0; s < 4; ++s) {
                if (suffix == kStateSuffix[s]) return {VariableId::Kind::state, 4 * g + s};
            }
        }
    }
    throw ValidationError("unknown variable '" + name + "'");
}

std::string variable_name(const Trajectory& shape, VariableId v) {
    if (v.kind == VariableId::Kind::voltage) return "V" + std::to_string(shape.voltage_buses.at(v.index));
    return shape.generator_names.at(v.index / 4) + "." + kStateSuffix[v.index % 4];
}

double value(const Trajectory& t, std::size_t row, VariableId v) {
    return v.kind == VariableId::Kind::voltage ? t.voltage(row, v.index) : t.state(row, v.index);
}

std::vector<double> column(const Trajectory& t, VariableId v) {
    std::vector<double> out(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) out[r] = value(t, r, v);
    return out;
}

void write_trajectory_csv(const Trajectory& t, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << 't';
    for (const auto& g : t.generator_names) {
        for (const char* s : kStateSuffix) out << ',' << g << '.' << s;
    }
    for (int b : t.voltage_buses) out << ",V" << b;
    out << '\n';
    const std::size_t nv = t.voltage_buses.size();
    for (std::size_t r = 0; r < t.rows(); ++r) {
        out << format_double(t.times[r]);
        for (double v : t.row(r)) out << ',' << format_double(v);
        for (std::size_t i = 0; i < nv; ++i) out << ',' << format_double(t.voltage(r, i));
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + file.string());
}

}  // namespace stochsim
