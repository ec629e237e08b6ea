#include "stochsim/scenario.hpp"

#include "json_reader.hpp"
#include "stochsim/error.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace stochsim {

using detail::json;
using detail::Reader;

Scenario parse_scenario(std::string_view text) {
    const detail::LocatedJson doc = detail::parse_located(text);
    const json& root = doc.root;
    const Reader rd(doc.lines);

    Scenario s;
    if (!root.is_object()) throw ParseError("", 1, "scenario must be a JSON object");
    if (root.contains("name")) s.name = rd.text(root, "", "name");
    s.horizon = rd.number(root, "", "horizon");

    if (root.contains("fault") && !root["fault"].is_null()) {
        const json& f = root["fault"];
        FaultSpec fs;
        fs.bus = rd.integer(f, "/fault", "bus");
        fs.start = rd.number_or(f, "/fault", "start", 0.0);
        fs.duration_cycles = rd.number(f, "/fault", "duration_cycles");
        if (f.contains("trip")) {
            const json& trip = rd.array(f, "/fault", "trip");
            for (std::size_t i = 0; i < trip.size(); ++i) {
                const std::string p = "/fault/trip/" + std::to_string(i);
                const json& pair = trip[i];
                if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
                    !pair[1].is_number_integer()) {
                    throw ParseError(p, rd.line(p), "expected a [from, to] pair of bus ids");
                }
                fs.trip.emplace_back(pair[0].get<int>(), pair[1].get<int>());
            }
        }
        s.fault = fs;
    }

    if (root.contains("stochastic") && !root["stochastic"].is_null()) {
        const json& st = root["stochastic"];
        auto& cfg = s.stochastic;
        const json& buses = rd.member(st, "/stochastic", "buses");
        if (buses.is_string()) {
            if (buses.get<std::string>() != "all") {
                throw ParseError("/stochastic/buses", rd.line("/stochastic/buses"), "expected \"all\" or a list of bus ids");
            }
            cfg.all_buses = true;
        } else {
            const json& arr = rd.array(st, "/stochastic", "buses");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string p = "/stochastic/buses/" + std::to_string(i);
                if (!arr[i].is_number_integer()) throw ParseError(p, rd.line(p), "expected a bus id");
                cfg.buses.push_back(arr[i].get<int>());
            }
        }
        cfg.sigma_rel = rd.number(st, "/stochastic", "sigma_rel");
        cfg.drift_a = rd.number_or(st, "/stochastic", "drift_a", cfg.drift_a);
        cfg.resample_dt = rd.number_or(st, "/stochastic", "resample_dt", cfg.resample_dt);
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

void validate(const Scenario& s, const SystemCase& sc) {
    auto fail = [](const std::string& msg) { throw ValidationError("invalid scenario: " + msg); };
    if (!(s.horizon > 0.0)) fail("horizon must be positive");
    const auto& st = s.stochastic;
    if (st.sigma_rel < 0.0) fail("sigma_rel must be non-negative");
    if (!(st.drift_a > 0.0)) fail("drift_a must be positive");
    if (!(st.resample_dt > 0.0)) fail("resample_dt must be positive");
    for (int b : st.buses) {
        if (!sc.find_bus(b)) fail("stochastic bus " + std::to_string(b) + " does not exist");
        if (std::none_of(sc.loads.begin(), sc.loads.end(), [&](const Load& l) { return l.bus == b; })) {
            fail("stochastic bus " + std::to_string(b) + " carries no load");
        }
    }
    if (s.fault) {
        const auto& f = *s.fault;
        if (!sc.find_bus(f.bus)) fail("fault bus " + std::to_string(f.bus) + " does not exist");
        if (!(f.duration_cycles > 0.0)) fail("fault duration must be positive");
        if (f.start < 0.0) fail("fault start must be non-negative");
        const double clear = f.start + f.duration_cycles / sc.frequency_hz;
        if (!(s.horizon > clear)) fail("horizon must extend past fault clearing");
        NetworkCondition after{Stage::post_fault, 0, f.trip};
        resolve_condition(sc, after);
    }
}

Stage StageSchedule::stage_at(double t, double tol) const {
    if (!has_fault || t + tol < fault_on) return Stage::pre_fault;
    if (t + tol < fault_off) return Stage::fault_on;
    return Stage::post_fault;
}

const NetworkCondition& StageSchedule::condition(Stage s) const {
    switch (s) {
        case Stage::fault_on: return during;
        case Stage::post_fault: return after;
        default: return before_;
    }
}

StageSchedule make_stage_schedule(const Scenario& s, const SystemCase& sc) {
    StageSchedule sch;
    if (!s.fault) return sch;
    sch.has_fault = true;
    sch.fault_on = s.fault->start;
    sch.fault_off = s.fault->start + s.fault->duration_cycles / sc.frequency_hz;
    sch.during = NetworkCondition{Stage::fault_on, s.fault->bus, {}};
    sch.after = NetworkCondition{Stage::post_fault, 0, s.fault->trip};
    return sch;
}

NetworkCondition final_condition(const Scenario& s) {
    if (!s.fault) return {};
    return NetworkCondition{Stage::post_fault, 0, s.fault->trip};
}

}  // namespace stochsim
