#include "causalid.h"

#include <CLI11.hpp>

#include <cstdint>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"causalid — causal structure identification for control systems"};
    app.require_subcommand(1);

    std::string config_path;
    std::string graph_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool quiet = false;

    CLI::App* run = app.add_subcommand("run", "run a scenario config and write reports");
    run->add_option("config", config_path, "scenario config JSON")->required();
    CLI::Option* seed_opt = run->add_option("--seed", seed, "master seed override");
    run->add_option("--out", out_dir, "output directory override");
    run->add_flag("--quiet", quiet, "suppress progress output");

    CLI::App* verify = app.add_subcommand(
        "verify", "check a graph.json against the LTI matrix-power ground truth");
    verify->add_option("graph", graph_path, "graph.json produced by run")->required();
    verify->add_option("config", config_path, "scenario config JSON")->required();
    verify->add_flag("--quiet", quiet, "suppress output");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        const uint64_t* seed_ptr = seed_opt->count() > 0 ? &seed : nullptr;
        return causalid_run_scenario(config_path.c_str(),
                                     out_dir.empty() ? nullptr : out_dir.c_str(), seed_ptr,
                                     quiet ? 1 : 0);
    }
    return causalid_verify_graph(graph_path.c_str(), config_path.c_str(), quiet ? 1 : 0);
}
