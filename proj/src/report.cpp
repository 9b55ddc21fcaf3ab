#include "causalid/report.hpp"
#include "causalid/rng.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace causalid {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json source_json(const SourceRef& src) {
    return {{"kind", src.kind == SourceRef::Kind::state ? "state" : "input"},
            {"index", src.index}};
}

SourceRef source_from_json(const json& j) {
    SourceRef src;
    src.kind = j.at("kind").get<std::string>() == "state" ? SourceRef::Kind::state
                                                          : SourceRef::Kind::input;
    src.index = j.at("index").get<int>();
    return src;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(3) << v;
    return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

} // namespace

std::string graph_to_json_string(const CausalGraph& graph, const std::string& scenario,
                                 std::uint64_t master_seed,
                                 const std::vector<std::string>& warnings) {
    json j;
    j["schema_version"] = 1;
    j["scenario"] = scenario;
    j["master_seed"] = master_seed;
    j["state_dim"] = graph.state_dim;
    j["input_dim"] = graph.input_dim;
    j["state_influence"] = graph.state_influence;
    j["input_influence"] = graph.input_influence;
    json evidence = json::array();
    for (const TestResult& r : graph.evidence) {
        evidence.push_back({{"source", source_json(r.source)},
                            {"target", r.target},
                            {"mmd2_empirical", r.mmd2_empirical},
                            {"threshold", r.threshold},
                            {"mc_mean", r.mc_mean},
                            {"mc_std", r.mc_std},
                            {"nu", r.nu},
                            {"decision", r.causal ? "causal" : "non_causal"},
                            {"subtract_initial", r.subtract_initial},
                            {"repetitions", r.repetitions},
                            {"T", r.T},
                            {"seed", r.seed}});
    }
    j["evidence"] = evidence;
    json untested = json::array();
    for (const UntestedPair& u : graph.untested) {
        untested.push_back({{"source", source_json(u.source)},
                            {"target", u.target},
                            {"predicted_relevance", u.predicted_relevance}});
    }
    j["untested"] = untested;
    j["warnings"] = warnings;
    return j.dump(2) + "\n";
}

CausalGraph graph_from_json_string(const std::string& text) {
    json j = json::parse(text);
    CausalGraph g;
    g.state_dim = j.at("state_dim").get<int>();
    g.input_dim = j.at("input_dim").get<int>();
    g.state_influence = j.at("state_influence").get<std::vector<std::vector<bool>>>();
    g.input_influence = j.at("input_influence").get<std::vector<std::vector<bool>>>();
    for (const auto& e : j.at("evidence")) {
        TestResult r;
        r.source = source_from_json(e.at("source"));
        r.target = e.at("target").get<int>();
        r.mmd2_empirical = e.at("mmd2_empirical").get<double>();
        r.threshold = e.at("threshold").get<double>();
        r.mc_mean = e.at("mc_mean").get<double>();
        r.mc_std = e.at("mc_std").get<double>();
        r.nu = e.at("nu").get<double>();
        r.causal = e.at("decision").get<std::string>() == "causal";
        r.subtract_initial = e.at("subtract_initial").get<bool>();
        r.repetitions = e.at("repetitions").get<int>();
        r.T = e.at("T").get<int>();
        r.seed = e.at("seed").get<std::uint64_t>();
        g.evidence.push_back(r);
    }
    for (const auto& u : j.at("untested")) {
        g.untested.push_back({source_from_json(u.at("source")), u.at("target").get<int>(),
                              u.at("predicted_relevance").get<double>()});
    }
    return g;
}

std::string format_tables(const CausalGraph& graph) {
    std::ostringstream os;
    auto row = [&](const std::string& pair, const TestResult* r) {
        os << std::left << std::setw(14) << pair;
        if (r) {
            os << std::setw(20) << fmt(r->mmd2_empirical) << std::setw(20) << fmt(r->threshold)
               << (r->causal ? "causal" : "non-causal");
        } else {
            os << std::setw(20) << "-" << std::setw(20) << "-" << "not tested";
        }
        os << "\n";
    };
    auto find = [&](SourceRef::Kind kind, int j, int i) -> const TestResult* {
        for (const TestResult& r : graph.evidence) {
            if (r.source.kind == kind && r.source.index == j && r.target == i) return &r;
        }
        return nullptr;
    };

    os << "Causal influences of states on states\n";
    os << std::left << std::setw(14) << "pair" << std::setw(20) << "experimental MMD^2"
       << std::setw(20) << "test statistic" << "decision\n";
    for (int j = 0; j < graph.state_dim; ++j) {
        for (int i = 0; i < graph.state_dim; ++i) {
            row("x" + std::to_string(j + 1) + " -> x" + std::to_string(i + 1),
                find(SourceRef::Kind::state, j, i));
        }
    }
    os << "\nCausal influences of inputs on states\n";
    os << std::left << std::setw(14) << "pair" << std::setw(20) << "experimental MMD^2"
       << std::setw(20) << "test statistic" << "decision\n";
    for (int j = 0; j < graph.input_dim; ++j) {
        for (int i = 0; i < graph.state_dim; ++i) {
            row("u" + std::to_string(j + 1) + " -> x" + std::to_string(i + 1),
                find(SourceRef::Kind::input, j, i));
        }
    }
    return os.str();
}

int run_scenario(const ScenarioConfig& cfg, const RunOverrides& overrides) {
    ScenarioConfig scenario = cfg;
    if (overrides.seed) scenario.master_seed = *overrides.seed;
    if (overrides.out_dir) scenario.output_dir = *overrides.out_dir;
    if (scenario.output_dir.empty()) scenario.output_dir = "out/" + scenario.name;

    try {
        scenario.validate();
    } catch (const std::exception& e) {
        if (!overrides.quiet) std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    try {
        const Plant plant = make_plant(scenario);
        IdentifyResult result = identify_structure(plant, scenario.identify, scenario.master_seed);

        const fs::path out(scenario.output_dir);
        fs::create_directories(out / "trajectories");

        write_file(out / "graph.json",
                   graph_to_json_string(result.graph, scenario.name, scenario.master_seed,
                                        result.warnings));
        write_file(out / "tables.txt", format_tables(result.graph));
        write_file(out / "model_init.json", result.model_init.to_json_string() + "\n");
        write_file(out / "model_caus.json", result.model_caus.to_json_string() + "\n");

        for (size_t k = 0; k < result.excitation.size(); ++k) {
            write_trajectory_csv_file(
                (out / "trajectories" / ("excitation_" + std::to_string(k) + ".csv")).string(),
                result.excitation[k]);
        }
        for (const ExperimentData& exp : result.experiments) {
            for (int r = 0; r < exp.batch_I.size(); ++r) {
                const std::string base = exp.spec.id + "_rep" + std::to_string(r);
                write_trajectory_csv_file(
                    (out / "trajectories" / (base + "_armI.csv")).string(),
                    exp.batch_I.runs[static_cast<size_t>(r)]);
                write_trajectory_csv_file(
                    (out / "trajectories" / (base + "_armII.csv")).string(),
                    exp.batch_II.runs[static_cast<size_t>(r)]);
            }
        }

        if (scenario.held_out) {
            const HeldOutConfig& held = *scenario.held_out;
            TrajectoryBatch held_batch;
            held_batch.spec_id = "held_out";
            for (size_t k = 0; k < held.x0s.size(); ++k) {
                Matrix held_inputs = Matrix::Zero(held.steps, plant.input_dim());
                if (held.u_consts[k].size() == plant.input_dim()) {
                    held_inputs.rowwise() = held.u_consts[k].transpose();
                }
                if (plant.is_lti()) {
                    held_batch.runs.push_back(
                        mean_trajectory(plant.lti(), held.x0s[k], held_inputs));
                } else {
                    held_batch.runs.push_back(
                        simulate(plant, held.x0s[k], held_inputs,
                                 derive_seed(scenario.master_seed,
                                             {0x4e1du, static_cast<std::uint64_t>(k)})));
                }
                write_trajectory_csv_file(
                    (out / "trajectories" / ("held_out_" + std::to_string(k) + ".csv")).string(),
                    held_batch.runs.back());
            }

            std::ostringstream gen;
            gen << "Held-out noiseless rollouts (" << held_batch.runs.size() << " runs, "
                << held.steps << " steps) from initial conditions outside the training box\n\n";
            gen << std::left << std::setw(10) << "target" << std::setw(16) << "rmse_init"
                << std::setw(16) << "rmse_caus" << "ratio\n";
            for (int i = 0; i < plant.state_dim(); ++i) {
                const auto [rmse_init, rmse_caus] =
                    generalization_report(result.model_init, result.model_caus, held_batch, i);
                gen << std::left << std::setw(10) << ("x" + std::to_string(i + 1))
                    << std::setw(16) << fmt(rmse_init) << std::setw(16) << fmt(rmse_caus)
                    << (rmse_init > 0 ? fmt(rmse_caus / rmse_init) : "-") << "\n";
            }
            write_file(out / "generalization.txt", gen.str());
        }

        if (!overrides.quiet) {
            std::cout << "scenario " << scenario.name << " (seed " << scenario.master_seed
                      << ") -> " << out.string() << "\n";
            for (const std::string& w : result.warnings) std::cout << "warning: " << w << "\n";
            for (const SourceFailure& f : result.failures) {
                std::cout << "failure: source " << f.source.label() << ": " << f.reason << "\n";
            }
        }
        return result.failures.empty() ? kExitOk : kExitRuntimeFailure;
    } catch (const std::exception& e) {
        if (!overrides.quiet) std::cerr << "runtime failure: " << e.what() << "\n";
        return kExitRuntimeFailure;
    }
}

int run_scenario_file(const std::string& config_path, const RunOverrides& overrides) {
    ScenarioConfig cfg;
    try {
        cfg = load_scenario(config_path);
    } catch (const std::exception& e) {
        if (!overrides.quiet) std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return run_scenario(cfg, overrides);
}

int verify_graph(const CausalGraph& graph, const ScenarioConfig& cfg, std::string* diff) {
    const Plant plant = make_plant(cfg);
    if (!plant.is_lti()) {
        throw std::runtime_error("verify: ground-truth oracle is only defined for LTI plants");
    }
    const CausalGraph truth = ground_truth_graph(plant.lti(), cfg.identify.design.T);
    if (truth.state_dim != graph.state_dim || truth.input_dim != graph.input_dim) {
        if (diff) *diff = "dimension mismatch between graph and plant";
        return kExitMismatch;
    }
    std::ostringstream os;
    int mismatches = 0;
    for (int j = 0; j < truth.state_dim; ++j) {
        for (int i = 0; i < truth.state_dim; ++i) {
            const bool got = graph.state_influence[j][i];
            const bool want = truth.state_influence[j][i];
            if (got != want) {
                ++mismatches;
                os << "x" << (j + 1) << " -> x" << (i + 1) << ": graph says "
                   << (got ? "causal" : "non-causal") << ", ground truth says "
                   << (want ? "causal" : "non-causal") << "\n";
            }
        }
    }
    for (int j = 0; j < truth.input_dim; ++j) {
        for (int i = 0; i < truth.state_dim; ++i) {
            const bool got = graph.input_influence[j][i];
            const bool want = truth.input_influence[j][i];
            if (got != want) {
                ++mismatches;
                os << "u" << (j + 1) << " -> x" << (i + 1) << ": graph says "
                   << (got ? "causal" : "non-causal") << ", ground truth says "
                   << (want ? "causal" : "non-causal") << "\n";
            }
        }
    }
    if (diff) *diff = os.str();
    return mismatches == 0 ? kExitOk : kExitMismatch;
}

int verify_graph_file(const std::string& graph_path, const std::string& config_path, bool quiet) {
    ScenarioConfig cfg;
    CausalGraph graph;
    try {
        cfg = load_scenario(config_path);
        std::ifstream is(graph_path);
        if (!is) throw std::runtime_error("cannot open " + graph_path);
        std::stringstream buf;
        buf << is.rdbuf();
        graph = graph_from_json_string(buf.str());
    } catch (const std::exception& e) {
        if (!quiet) std::cerr << "verify: " << e.what() << "\n";
        return kExitConfigError;
    }
    try {
        std::string diff;
        const int rc = verify_graph(graph, cfg, &diff);
        if (!quiet) {
            if (rc == kExitOk) {
                std::cout << "verify: graph matches the matrix-power ground truth\n";
            } else {
                std::cout << "verify: mismatches found\n" << diff;
            }
        }
        return rc;
    } catch (const std::exception& e) {
        if (!quiet) std::cerr << "verify: " << e.what() << "\n";
        return kExitConfigError;
    }
}

} // namespace causalid
