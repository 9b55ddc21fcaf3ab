#include "causalid/report.hpp"
#include "causalid/scenario.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace causalid;

namespace {

std::string scenario_path(const std::string& name) {
    return std::string(CAUSALID_SCENARIO_DIR) + "/" + name;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    std::stringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("builtin scenarios parse and validate") {
    for (const char* name : {"appendix_c", "kinematic_robot", "bilinear2", "integrator1"}) {
        ScenarioConfig cfg = builtin_scenario(name);
        CHECK_NOTHROW(cfg.validate());
        // Serialized form parses back to a valid config.
        ScenarioConfig back = parse_scenario(cfg.to_json_string());
        CHECK(back.name == cfg.name);
        CHECK(back.master_seed == cfg.master_seed);
        CHECK(back.identify.design.T == cfg.identify.design.T);
        CHECK(back.identify.mc_runs == cfg.identify.mc_runs);
    }
    CHECK_THROWS(builtin_scenario("missing"));
}

TEST_CASE("shipped scenario files load") {
    for (const char* name :
         {"appendix_c.json", "kinematic_robot.json", "bilinear2.json", "integrator1.json"}) {
        ScenarioConfig cfg = load_scenario(scenario_path(name));
        CHECK_NOTHROW(cfg.validate());
    }
}

TEST_CASE("config rejects malformed input") {
    CHECK_THROWS(parse_scenario("{not json"));
    CHECK_THROWS(parse_scenario("{}"));
    CHECK_THROWS(parse_scenario(R"({"name": "x", "plant": {"builtin": "unknown_plant"}})"));
    // Valid JSON but missing bounds.
    CHECK_THROWS(parse_scenario(
        R"({"name": "x", "plant": {"A": [[1]], "B": [[1]], "noise_std": [0.0]}})"));
}

TEST_CASE("graph JSON round trip preserves evidence") {
    CausalGraph g = CausalGraph::all_causal(2, 1);
    TestResult r;
    r.source = SourceRef{SourceRef::Kind::state, 1};
    r.target = 0;
    r.mmd2_empirical = -1.25e-9;
    r.threshold = 3.5e-7;
    r.mc_mean = 1e-7;
    r.mc_std = 2.5e-7;
    r.nu = 1.0;
    r.causal = false;
    r.subtract_initial = false;
    r.repetitions = 10;
    r.T = 100;
    r.seed = 1234567;
    g.evidence.push_back(r);
    g.set(r.source, 0, false);
    g.untested.push_back({SourceRef{SourceRef::Kind::input, 0}, 1, 1e-12});

    const std::string text = graph_to_json_string(g, "unit", 42, {"note"});
    CausalGraph back = graph_from_json_string(text);
    CHECK(back.state_dim == 2);
    CHECK(back.input_dim == 1);
    CHECK(back.state_influence == g.state_influence);
    CHECK(back.input_influence == g.input_influence);
    REQUIRE(back.evidence.size() == 1);
    CHECK(back.evidence[0].mmd2_empirical == r.mmd2_empirical);
    CHECK(back.evidence[0].threshold == r.threshold);
    CHECK(back.evidence[0].seed == r.seed);
    REQUIRE(back.untested.size() == 1);
    CHECK(back.untested[0].predicted_relevance == 1e-12);
}

TEST_CASE("run_scenario writes the full report set deterministically") {
    const std::filesystem::path out_a = "test_out/integrator_a";
    const std::filesystem::path out_b = "test_out/integrator_b";
    std::filesystem::remove_all("test_out");

    RunOverrides ov;
    ov.quiet = true;
    ov.out_dir = out_a.string();
    REQUIRE(run_scenario_file(scenario_path("integrator1.json"), ov) == kExitOk);
    ov.out_dir = out_b.string();
    REQUIRE(run_scenario_file(scenario_path("integrator1.json"), ov) == kExitOk);

    for (const char* file : {"graph.json", "tables.txt", "model_init.json", "model_caus.json"}) {
        CAPTURE(file);
        CHECK(std::filesystem::exists(out_a / file));
        CHECK(slurp(out_a / file) == slurp(out_b / file));
    }
    CHECK(std::filesystem::exists(out_a / "trajectories" / "excitation_0.csv"));
    CHECK(std::filesystem::exists(out_a / "trajectories" / "state1_rep0_armI.csv"));

    // The stored graph matches the oracle through the public verify entry.
    CHECK(verify_graph_file((out_a / "graph.json").string(),
                            scenario_path("integrator1.json"), true) == kExitOk);

    // A flipped edge is reported as a mismatch.
    CausalGraph g = graph_from_json_string(slurp(out_a / "graph.json"));
    g.state_influence[0][0] = !g.state_influence[0][0];
    std::ofstream(out_a / "flipped.json") << graph_to_json_string(g, "integrator1", 1, {});
    CHECK(verify_graph_file((out_a / "flipped.json").string(),
                            scenario_path("integrator1.json"), true) == kExitMismatch);

    std::filesystem::remove_all("test_out");
}

TEST_CASE("run_scenario maps bad configs to exit 2 without outputs") {
    RunOverrides ov;
    ov.quiet = true;
    ov.out_dir = "test_out/never";
    CHECK(run_scenario_file("test_out/missing.json", ov) == kExitConfigError);
    CHECK_FALSE(std::filesystem::exists("test_out/never"));
}

TEST_CASE("verify rejects nonlinear plants") {
    ScenarioConfig cfg = builtin_scenario("bilinear2");
    CausalGraph g = CausalGraph::all_causal(2, 1);
    std::string diff;
    CHECK_THROWS_AS(verify_graph(g, cfg, &diff), std::runtime_error);
}

TEST_CASE("zero-dynamics plant keeps only direct input edges") {
    Matrix A = Matrix::Zero(2, 2);
    Matrix B(2, 2);
    B << 1.0, 0.0,
         0.0, 1.0;
    const CausalGraph g = ground_truth_graph(LtiModel(A, B, Vector::Zero(2)), 50);
    for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
            CHECK(g.state_influence[j][i] == (i == j)); // movement depends on own decay to 0
            CHECK(g.input_influence[j][i] == (i == j));
        }
    }
}
