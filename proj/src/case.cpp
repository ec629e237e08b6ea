#include "stochsim/case.hpp"

#include "json_reader.hpp"
#include "stochsim/error.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace stochsim {

using detail::json;
using detail::Reader;

namespace {

BusType parse_bus_type(const std::string& s, const std::string& ptr, int line) {
    std::string u = s;
    std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (u == "slack") return BusType::slack;
    if (u == "pv") return BusType::pv;
    if (u == "pq") return BusType::pq;
    throw ParseError(ptr, line, "unknown bus type '" + s + "' (expected slack, PV or PQ)");
}

MachineModel parse_model(const std::string& s, const std::string& ptr, int line) {
    if (s == "two_axis") return MachineModel::two_axis;
    if (s == "classical") return MachineModel::classical;
    throw ParseError(ptr, line, "unknown machine model '" + s + "'");
}

}  // namespace

std::optional<std::size_t> SystemCase::find_bus(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].id == id) return i;
    }
    return std::nullopt;
}

std::size_t SystemCase::bus_index(int id) const {
    auto i = find_bus(id);
    if (!i) throw ValidationError("unknown bus id " + std::to_string(id));
    return *i;
}

std::size_t SystemCase::slack_index() const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].type == BusType::slack) return i;
    }
    throw ValidationError("case has no slack bus");
}

std::optional<std::size_t> SystemCase::infinite_bus() const {
    const std::size_t s = slack_index();
    for (const auto& g : generators) {
        if (g.bus == buses[s].id) return std::nullopt;
    }
    return s;
}

SystemCase parse_case(std::string_view text) {
    const detail::LocatedJson doc = detail::parse_located(text);
    const json& root = doc.root;
    const Reader rd(doc.lines);
    SystemCase sc;
    if (root.contains("name") && root["name"].is_string()) sc.name = root["name"].get<std::string>();

    const json& sys = rd.member(root, "", "system");
    sc.frequency_hz = rd.number(sys, "/system", "frequency_hz");
    sc.base_mva = rd.number(sys, "/system", "base_mva");
    const double omega_default = 2.0 * std::numbers::pi * sc.frequency_hz;

    const json& buses = rd.array(root, "", "buses");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const std::string p = "/buses/" + std::to_string(i);
        Bus b;
        b.id = rd.integer(buses[i], p, "id");
        b.type = parse_bus_type(rd.text(buses[i], p, "type"), p + "/type", rd.line(p + "/type"));
        b.v_set = rd.number_or(buses[i], p, "v", 1.0);
        b.angle = rd.number_or(buses[i], p, "angle", 0.0);
        sc.buses.push_back(b);
    }

    const json& branches = rd.array(root, "", "branches");
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const std::string p = "/branches/" + std::to_string(i);
        Branch br;
        br.from = rd.integer(branches[i], p, "from");
        br.to = rd.integer(branches[i], p, "to");
        br.z = {rd.number(branches[i], p, "r"), rd.number(branches[i], p, "x")};
        br.b_shunt = rd.number_or(branches[i], p, "b", 0.0);
        br.ratio = rd.number_or(branches[i], p, "ratio", 1.0);
        if (br.ratio == 0.0) br.ratio = 1.0;  // MATPOWER convention: 0 means a line
        sc.branches.push_back(br);
    }

    const json& gens = rd.array(root, "", "generators");
    for (std::size_t i = 0; i < gens.size(); ++i) {
        const std::string p = "/generators/" + std::to_string(i);
        const json& g = gens[i];
        Generator gen;
        gen.name = g.contains("name") ? rd.text(g, p, "name") : "G" + std::to_string(i + 1);
        gen.bus = rd.integer(g, p, "bus");
        gen.p_sched = rd.number_or(g, p, "p", 0.0);
        if (g.contains("model")) gen.model = parse_model(rd.text(g, p, "model"), p + "/model", rd.line(p + "/model"));
        auto& m = gen.params;
        m.H = rd.number(g, p, "H");
        m.D = rd.number_or(g, p, "D", 0.0);
        m.xd = rd.number(g, p, "xd");
        m.xd_p = rd.number(g, p, "xd_p");
        m.xq = rd.number(g, p, "xq");
        m.xq_p = rd.number(g, p, "xq_p");
        m.Td0_p = rd.number(g, p, "Td0_p");
        m.Tq0_p = rd.number(g, p, "Tq0_p");
        m.Rs = rd.number_or(g, p, "Rs", 0.0);
        m.omega_r = rd.number_or(g, p, "omega_r", omega_default);
        sc.generators.push_back(std::move(gen));
    }

    const json& loads = rd.array(root, "", "loads");
    for (std::size_t i = 0; i < loads.size(); ++i) {
        const std::string p = "/loads/" + std::to_string(i);
        Load l;
        l.bus = rd.integer(loads[i], p, "bus");
        l.p = rd.number(loads[i], p, "p");
        l.q = rd.number(loads[i], p, "q");
        sc.loads.push_back(l);
    }

    validate(sc);
    return sc;
}

SystemCase load_case(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open case file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

void validate(const SystemCase& sc) {
    auto fail = [](const std::string& msg) { throw ValidationError("invalid case: " + msg); };

    if (!(sc.frequency_hz > 0.0)) fail("system frequency must be positive");
    if (!(sc.base_mva > 0.0)) fail("base MVA must be positive");
    if (sc.buses.empty()) fail("no buses");

    std::set<int> ids;
    int slack_count = 0;
    for (const auto& b : sc.buses) {
        if (!ids.insert(b.id).second) fail("duplicate bus id " + std::to_string(b.id));
        if (b.type == BusType::slack) ++slack_count;
        if (!(b.v_set > 0.0)) fail("bus " + std::to_string(b.id) + " voltage setpoint must be positive");
    }
    if (slack_count != 1) fail("expected exactly one slack bus, found " + std::to_string(slack_count));

    for (std::size_t i = 0; i < sc.branches.size(); ++i) {
        const auto& br = sc.branches[i];
        const std::string tag = "branch " + std::to_string(br.from) + "-" + std::to_string(br.to);
        if (!ids.count(br.from) || !ids.count(br.to)) fail(tag + " references an unknown bus");
        if (br.from == br.to) fail(tag + " is a self loop");
        if (!(std::abs(br.z) > 0.0)) fail(tag + " has zero impedance");
        if (!(br.ratio > 0.0)) fail(tag + " has non-positive tap ratio");
    }

    if (sc.generators.empty()) fail("at least one generator is required");
    std::set<int> gen_buses;
    for (const auto& g : sc.generators) {
        const std::string tag = "generator " + g.name;
        if (!ids.count(g.bus)) fail(tag + " references unknown bus " + std::to_string(g.bus));
        if (!gen_buses.insert(g.bus).second) fail("more than one generator at bus " + std::to_string(g.bus));
        const auto& m = g.params;
        if (!(m.H > 0.0)) fail(tag + ": H must be positive");
        if (!(m.Td0_p > 0.0)) fail(tag + ": T'd0 must be positive");
        if (!(m.Tq0_p > 0.0)) fail(tag + ": T'q0 must be positive");
        if (!(m.xd_p > 0.0 && m.xd >= m.xd_p)) fail(tag + ": requires xd >= x'd > 0");
        if (!(m.xq_p > 0.0 && m.xq >= m.xq_p)) fail(tag + ": requires xq >= x'q > 0");
        if (!(m.omega_r > 0.0)) fail(tag + ": rated speed must be positive");
    }
    for (const auto& b : sc.buses) {
        if (b.type == BusType::pv && !gen_buses.count(b.id)) {
            fail("PV bus " + std::to_string(b.id) + " has no generator");
        }
    }

    std::set<int> load_buses;
    for (const auto& l : sc.loads) {
        if (!ids.count(l.bus)) fail("load references unknown bus " + std::to_string(l.bus));
        if (!load_buses.insert(l.bus).second) fail("more than one load at bus " + std::to_string(l.bus));
    }
}

}  // namespace stochsim
