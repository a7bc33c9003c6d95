#ifndef PFLOW_RUN_CONFIG_HPP
#define PFLOW_RUN_CONFIG_HPP

#include <cstddef>
#include <string>

#include "json.hpp"
#include "pflow/scenario_bench.hpp"

namespace pflow {

struct RunConfig {
    // Sensors are kept in listed order; reverse_sensors flips them on use.
    Scenario scenario = paper_scenario();
    bool reverse_sensors = false;
    BenchOptions bench;
    std::string out_dir = ".";
    std::size_t verify_instances = 20;
    bool inject_perturbation = false;

    Scenario effective_scenario() const;
    void validate() const;
};

RunConfig paper_preset();

nlohmann::json config_to_json(const RunConfig& cfg);

// Overlays the keys present in `j` on the paper preset. Unknown keys and
// wrongly typed values throw ContractViolation.
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config_file(const std::string& path);

}  // namespace pflow

#endif  // PFLOW_RUN_CONFIG_HPP
