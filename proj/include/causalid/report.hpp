#pragma once

#include "causalid/causal.hpp"
#include "causalid/scenario.hpp"

#include <optional>
#include <string>

namespace causalid {

// Exit codes shared by the library pipeline, the C API, and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitMismatch = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeFailure = 3;

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool quiet = false;
};

// Executes a scenario end to end and writes graph.json, tables.txt,
// model_init.json, model_caus.json, generalization.txt and trajectories/.
int run_scenario(const ScenarioConfig& cfg, const RunOverrides& overrides);
int run_scenario_file(const std::string& config_path, const RunOverrides& overrides);

std::string graph_to_json_string(const CausalGraph& graph, const std::string& scenario,
                                 std::uint64_t master_seed,
                                 const std::vector<std::string>& warnings);
CausalGraph graph_from_json_string(const std::string& text);

// Plain-text per-pair result tables (empirical MMD^2 vs test statistic).
std::string format_tables(const CausalGraph& graph);

// Recomputes LTI ground truth from the config's plant and diffs the stored
// graph; returns kExitOk on an exact match, kExitMismatch otherwise.
int verify_graph_file(const std::string& graph_path, const std::string& config_path, bool quiet);
int verify_graph(const CausalGraph& graph, const ScenarioConfig& cfg, std::string* diff);

} // namespace causalid
