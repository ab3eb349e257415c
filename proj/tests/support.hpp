#ifndef ECOSPEED_TESTS_SUPPORT_HPP
#define ECOSPEED_TESTS_SUPPORT_HPP

#include <filesystem>
#include <random>
#include <string>

#include <json.hpp>

#include "ecospeed/io.hpp"
#include "ecospeed/scenario_io.hpp"

namespace testing_support {

using Json = nlohmann::json;

inline std::string table1_path() { return std::string(ECOSPEED_SCENARIOS) + "/table1.json"; }

inline Json table1_json() { return Json::parse(ecospeed::read_file(table1_path())); }

inline ecospeed::Scenario from_json(const Json& j) { return ecospeed::load_scenario(j.dump()); }

inline ecospeed::Scenario table1() { return from_json(table1_json()); }

/// One straight road from (0.5, 1.5) to (1.5, 1.5), fed by a queue and leaving freely.
inline Json single_road_json(int n_cells, double rho0, double inflow) {
    Json j = table1_json();
    j["discretization"]["n_cells"] = n_cells;
    j["roads"] = Json::array({{{"id", 1},
                               {"start", {0.5, 1.5}},
                               {"end", {1.5, 1.5}},
                               {"width", 0.1},
                               {"rho_max", 1},
                               {"rho0", rho0},
                               {"v_min", 0.25},
                               {"v_max", 2}}});
    j["junctions"] = Json::array();
    j["access"] = Json::array({{{"road", 1}, {"inflow", inflow}}});
    j["exits"] = Json::array({1});
    return j;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("ecospeed_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing_support

#endif // ECOSPEED_TESTS_SUPPORT_HPP
