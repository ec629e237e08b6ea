#pragma once

#include "stochsim/case.hpp"

#include <filesystem>
#include <sstream>
#include <string>

namespace testing {

inline std::filesystem::path source_path(const std::string& rel) {
    return std::filesystem::path(STOCHSIM_SOURCE_DIR) / rel;
}

/// Slack bus 1 with a generator, PQ bus 2 carrying load p + jq over a line r + jx.
inline stochsim::SystemCase two_bus_case(double r, double x, double p, double q) {
    std::ostringstream os;
    os.precision(17);
    os << R"({"system": {"frequency_hz": 60, "base_mva": 100},
  "buses": [{"id": 1, "type": "slack", "v": 1.0}, {"id": 2, "type": "PQ"}],
  "branches": [{"from": 1, "to": 2, "r": )" << r << R"(, "x": )" << x << R"(}],
  "generators": [{"bus": 1, "H": 4, "D": 1, "xd": 1.2, "xd_p": 0.3, "xq": 1.1, "xq_p": 0.3,
                  "Td0_p": 6, "Tq0_p": 0.5}],
  "loads": [{"bus": 2, "p": )" << p << R"(, "q": )" << q << "}]}";
    return stochsim::parse_case(os.str());
}

}  // namespace testing
