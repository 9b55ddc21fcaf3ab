#pragma once

#include "causalid/causal.hpp"
#include "causalid/dynamics.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace causalid {

// Held-out evaluation used for the generalization comparison: a noiseless
// rollout from an initial condition outside the training box.
// One noiseless rollout per (x0, constant input) pair; RMSE pools all runs.
struct HeldOutConfig {
    std::vector<Vector> x0s;
    std::vector<Vector> u_consts; // empty entries -> zero inputs
    int steps = 100;
    int target = 0;
};

struct PlantSpec {
    std::string builtin; // empty -> explicit matrices
    Matrix A;
    Matrix B;
    Vector noise_std;
};

struct ScenarioConfig {
    int schema_version = 1;
    std::string name;
    PlantSpec plant;
    IdentifyConfig identify;
    std::optional<HeldOutConfig> held_out;
    std::uint64_t master_seed = 1;
    std::string output_dir;

    void validate() const;
    std::string to_json_string() const;
};

Plant make_plant(const ScenarioConfig& cfg);

// Built-in scenarios: appendix_c, kinematic_robot, bilinear2, integrator1.
ScenarioConfig builtin_scenario(const std::string& name);
bool is_builtin_scenario(const std::string& name);

ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& json_text);

} // namespace causalid
