#include "causalid/scenario.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace causalid {

using nlohmann::json;

namespace {

Matrix to_matrix(const json& rows) {
    if (!rows.is_array() || rows.empty()) throw std::runtime_error("config: expected a matrix");
    const int r = static_cast<int>(rows.size());
    const int c = static_cast<int>(rows.front().size());
    Matrix m(r, c);
    for (int i = 0; i < r; ++i) {
        const auto& row = rows[static_cast<size_t>(i)];
        if (static_cast<int>(row.size()) != c) {
            throw std::runtime_error("config: ragged matrix rows");
        }
        for (int j = 0; j < c; ++j) m(i, j) = row[static_cast<size_t>(j)].get<double>();
    }
    return m;
}

Vector to_vector(const json& arr) {
    if (!arr.is_array()) throw std::runtime_error("config: expected an array");
    Vector v(static_cast<int>(arr.size()));
    for (int i = 0; i < v.size(); ++i) v[i] = arr[static_cast<size_t>(i)].get<double>();
    return v;
}

json from_matrix(const Matrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    }
    return rows;
}

json from_vector(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

} // namespace

void ScenarioConfig::validate() const {
    if (schema_version != 1) throw std::runtime_error("config: unsupported schema_version");
    if (name.empty()) throw std::runtime_error("config: missing scenario name");
    if (plant.builtin.empty()) {
        if (plant.A.size() == 0 || plant.B.size() == 0) {
            throw std::runtime_error("config: plant needs a builtin name or explicit A/B");
        }
        if (!plant.A.allFinite() || !plant.B.allFinite() || !plant.noise_std.allFinite()) {
            throw std::runtime_error("config: plant matrices must be finite");
        }
    } else if (!is_builtin_scenario(plant.builtin) && plant.builtin != "bilinear2") {
        throw std::runtime_error("config: unknown builtin plant: " + plant.builtin);
    }
    if (identify.design.state_box.dim() == 0 || identify.design.input_box.dim() == 0) {
        throw std::runtime_error("config: missing state/input bounds");
    }
    if (!(identify.kernel.lengthscale > 0.0)) {
        throw std::runtime_error("config: kernel lengthscale must be positive");
    }
    if (identify.mc_runs < 2) throw std::runtime_error("config: mc_runs must be >= 2");
    if (identify.design.T < 1 || identify.design.repetitions < 2) {
        throw std::runtime_error("config: invalid experiment horizon or repetitions");
    }
}

Plant make_plant(const ScenarioConfig& cfg) {
    if (!cfg.plant.builtin.empty()) {
        if (cfg.plant.builtin == "bilinear2") {
            return Plant(make_builtin_nonlinear("bilinear2"));
        }
        const ScenarioConfig base = builtin_scenario(cfg.plant.builtin);
        return Plant(LtiModel(base.plant.A, base.plant.B, base.plant.noise_std));
    }
    return Plant(LtiModel(cfg.plant.A, cfg.plant.B, cfg.plant.noise_std));
}

namespace {

ScenarioConfig appendix_c_scenario() {
    ScenarioConfig cfg;
    cfg.name = "appendix_c";
    Matrix A(3, 3);
    A << 0.9, -0.75, 1.2,
         0.0,  0.9, -1.1,
         0.0,  0.0,  0.7;
    Matrix B(3, 3);
    B << 0.03, 0.0,  0.0,
         0.0,  0.06, 0.0,
         0.07, 0.0,  0.05;
    cfg.plant.A = A;
    cfg.plant.B = B;
    cfg.plant.noise_std = Vector::Constant(3, 1e-4);

    // Box sizes keep the feedforward inputs moderate: holding a state away
    // from the origin needs |u| ~ 40 per unit of x2/x3, which multiplies
    // fitted-model error into the steering offset.
    cfg.identify.design.state_box = Box{Vector::Constant(3, -0.5), Vector::Constant(3, 0.5)};
    cfg.identify.design.input_box = Box{Vector::Constant(3, -5.0), Vector::Constant(3, 5.0)};
    cfg.identify.design.delta1 = 0.0;
    cfg.identify.design.delta2 = 0.0;
    cfg.identify.design.T = 100;
    cfg.identify.design.repetitions = 10;
    cfg.identify.nu = 1.0;
    cfg.identify.mc_runs = 100;
    cfg.identify.fit.kind = ModelKind::linear;
    cfg.identify.fit.increments = true;
    cfg.identify.steering.q_scale = 25.0;
    cfg.identify.excitation_steps = 3000;
    Vector amps(3);
    amps << 2.0, 0.15, 0.15; // dominant first channel, weak side channels
    cfg.identify.excitation_amplitudes = amps;
    // Narrow excitation band: the states stay strongly inter-correlated, so
    // spurious cross terms of the dense initial fit carry real variance (the
    // causal exclusions are what remove them).
    cfg.identify.excitation_f0 = 0.01;
    cfg.identify.excitation_f1 = 0.03;

    // Extrapolated starts outside the training box, with constant drives
    // that exercise the spurious terms the causal exclusions remove.
    HeldOutConfig held;
    auto vec3 = [](double a, double b, double c) {
        Vector v(3);
        v << a, b, c;
        return v;
    };
    held.x0s = {vec3(0, 0, 3), vec3(0, 0, -3), vec3(0, 3, 0), vec3(0, -3, 0)};
    held.u_consts = {vec3(0, 1, 0), vec3(0, -1, 0), vec3(0, 1, 0), vec3(0, -1, 0)};
    held.steps = 100;
    held.target = 2;
    cfg.held_out = held;
    cfg.master_seed = 1;
    return cfg;
}

ScenarioConfig kinematic_robot_scenario() {
    ScenarioConfig cfg;
    cfg.name = "kinematic_robot";
    cfg.plant.A = Matrix::Identity(4, 4);
    Vector b(4);
    b << 0.013, 0.007, 0.01, 0.01;
    cfg.plant.B = b.asDiagonal();
    cfg.plant.noise_std = Vector::Constant(4, 1e-4);

    cfg.identify.design.state_box = Box{Vector::Constant(4, -2.0), Vector::Constant(4, 2.0)};
    cfg.identify.design.input_box = Box{Vector::Constant(4, -5.0), Vector::Constant(4, 5.0)};
    cfg.identify.design.delta1 = 0.0;
    cfg.identify.design.delta2 = 0.0;
    cfg.identify.nu = 1.0;
    cfg.identify.mc_runs = 100;
    cfg.identify.fit.kind = ModelKind::linear;
    cfg.identify.fit.increments = true;
    // Long, low-amplitude excitation: the amplitude keeps the restricted
    // models' noise inflation (and with it the test thresholds) small, the
    // length keeps the fitted coefficients accurate enough for steering.
    cfg.identify.excitation_steps = 12000;
    cfg.identify.excitation_amplitudes = Vector::Constant(4, 0.25);
    // Small B entries make the default LQR loop crawl; weight the state.
    cfg.identify.steering.q_scale = 1e4;
    cfg.identify.steering.max_steps = 800;
    cfg.master_seed = 1;
    return cfg;
}

ScenarioConfig bilinear2_scenario() {
    ScenarioConfig cfg;
    cfg.name = "bilinear2";
    cfg.plant.builtin = "bilinear2";

    cfg.identify.design.state_box = Box{Vector::Constant(2, -2.0), Vector::Constant(2, 2.0)};
    // Small design inputs keep the bilinear rollouts contractive, so the
    // predicted MMD stays informative in |x1(0)| instead of saturating;
    // delta1 then rejects every candidate near the x1 = 0 trap.
    cfg.identify.design.input_box = Box{Vector::Constant(1, -0.5), Vector::Constant(1, 0.5)};
    cfg.identify.design.delta1 = 0.4;
    cfg.identify.design.candidate_budget = 60;
    cfg.identify.nu = 1.0;
    cfg.identify.mc_runs = 100;
    cfg.identify.fit.kind = ModelKind::feature_basis;
    cfg.identify.fit.increments = false;
    cfg.identify.excitation_runs = 40;
    cfg.identify.excitation_steps = 80;
    cfg.identify.excitation_amplitudes = Vector::Constant(1, 1.5);
    cfg.master_seed = 1;
    return cfg;
}

ScenarioConfig integrator1_scenario() {
    ScenarioConfig cfg;
    cfg.name = "integrator1";
    cfg.plant.A = Matrix::Identity(1, 1);
    cfg.plant.B = Matrix::Identity(1, 1);
    cfg.plant.noise_std = Vector::Constant(1, 1e-4);

    cfg.identify.design.state_box = Box{Vector::Constant(1, -2.0), Vector::Constant(1, 2.0)};
    cfg.identify.design.input_box = Box{Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)};
    cfg.identify.design.delta1 = 0.0;
    cfg.identify.design.delta2 = 0.0;
    cfg.identify.nu = 1.0;
    cfg.identify.mc_runs = 100;
    cfg.identify.fit.kind = ModelKind::linear;
    cfg.identify.fit.increments = true;
    cfg.identify.excitation_steps = 1500;
    cfg.identify.excitation_amplitudes = Vector::Constant(1, 1.0);
    cfg.master_seed = 1;
    return cfg;
}

} // namespace

bool is_builtin_scenario(const std::string& name) {
    return name == "appendix_c" || name == "kinematic_robot" || name == "bilinear2" ||
           name == "integrator1";
}

ScenarioConfig builtin_scenario(const std::string& name) {
    if (name == "appendix_c") return appendix_c_scenario();
    if (name == "kinematic_robot") return kinematic_robot_scenario();
    if (name == "bilinear2") return bilinear2_scenario();
    if (name == "integrator1") return integrator1_scenario();
    throw std::runtime_error("unknown builtin scenario: " + name);
}

ScenarioConfig parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
    }

    ScenarioConfig cfg;
    // A builtin seed config may be used as the baseline, then overridden.
    if (j.contains("builtin")) {
        cfg = builtin_scenario(j.at("builtin").get<std::string>());
    }
    cfg.schema_version = j.value("schema_version", cfg.schema_version);
    cfg.name = j.value("name", cfg.name);
    if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();

    if (j.contains("plant")) {
        const json& p = j.at("plant");
        if (p.contains("builtin")) {
            cfg.plant.builtin = p.at("builtin").get<std::string>();
        }
        if (p.contains("A")) cfg.plant.A = to_matrix(p.at("A"));
        if (p.contains("B")) cfg.plant.B = to_matrix(p.at("B"));
        if (p.contains("noise_std")) cfg.plant.noise_std = to_vector(p.at("noise_std"));
    }
    if (j.contains("bounds")) {
        const json& b = j.at("bounds");
        cfg.identify.design.state_box = Box{to_vector(b.at("state_lo")), to_vector(b.at("state_hi"))};
        cfg.identify.design.input_box = Box{to_vector(b.at("input_lo")), to_vector(b.at("input_hi"))};
    }
    if (j.contains("kernel")) {
        cfg.identify.kernel.lengthscale = j.at("kernel").value("lengthscale", 1.0);
    }
    if (j.contains("design")) {
        const json& d = j.at("design");
        if (d.contains("delta1")) cfg.identify.design.delta1 = d.at("delta1").get<double>();
        if (d.contains("delta2")) cfg.identify.design.delta2 = d.at("delta2").get<double>();
        cfg.identify.design.candidate_budget =
            d.value("candidate_budget", cfg.identify.design.candidate_budget);
        cfg.identify.design.T = d.value("T", cfg.identify.design.T);
        cfg.identify.design.repetitions = d.value("repetitions", cfg.identify.design.repetitions);
        if (d.contains("input_class")) {
            const std::string cls = d.at("input_class").get<std::string>();
            if (cls == "constant") cfg.identify.design.input_class = InputClass::constant;
            else if (cls == "chirp") cfg.identify.design.input_class = InputClass::chirp;
            else if (cls == "piecewise_constant")
                cfg.identify.design.input_class = InputClass::piecewise_constant;
            else throw std::runtime_error("config: unknown input_class: " + cls);
        }
    }
    if (j.contains("steering")) {
        const json& st = j.at("steering");
        cfg.identify.steering.q_scale = st.value("q_scale", cfg.identify.steering.q_scale);
        cfg.identify.steering.arrival_tol =
            st.value("arrival_tol", cfg.identify.steering.arrival_tol);
        cfg.identify.steering.max_steps = st.value("max_steps", cfg.identify.steering.max_steps);
        cfg.identify.steering.settle_steps =
            st.value("settle_steps", cfg.identify.steering.settle_steps);
        cfg.identify.steering.riccati_tol =
            st.value("riccati_tol", cfg.identify.steering.riccati_tol);
        cfg.identify.steering.riccati_max_iter =
            st.value("riccati_max_iter", cfg.identify.steering.riccati_max_iter);
    }
    if (j.contains("test")) {
        const json& t = j.at("test");
        cfg.identify.nu = t.value("nu", cfg.identify.nu);
        cfg.identify.mc_runs = t.value("mc_runs", cfg.identify.mc_runs);
    }
    if (j.contains("sysid")) {
        const json& s = j.at("sysid");
        if (s.contains("kind")) {
            const std::string kind = s.at("kind").get<std::string>();
            if (kind == "linear") cfg.identify.fit.kind = ModelKind::linear;
            else if (kind == "feature_basis") cfg.identify.fit.kind = ModelKind::feature_basis;
            else throw std::runtime_error("config: unknown sysid kind: " + kind);
        }
        cfg.identify.fit.increments = s.value("increments", cfg.identify.fit.increments);
        cfg.identify.fit.intercept = s.value("intercept", cfg.identify.fit.intercept);
        cfg.identify.fit.ridge = s.value("ridge", cfg.identify.fit.ridge);
        cfg.identify.excitation_runs = s.value("excitation_runs", cfg.identify.excitation_runs);
        cfg.identify.excitation_steps = s.value("excitation_steps", cfg.identify.excitation_steps);
        if (s.contains("excitation_amplitudes")) {
            cfg.identify.excitation_amplitudes = to_vector(s.at("excitation_amplitudes"));
        }
        cfg.identify.excitation_f0 = s.value("f0", cfg.identify.excitation_f0);
        cfg.identify.excitation_f1 = s.value("f1", cfg.identify.excitation_f1);
        if (s.contains("excitation_x0")) {
            cfg.identify.excitation_x0 = to_vector(s.at("excitation_x0"));
        }
    }
    if (j.contains("held_out")) {
        const json& h = j.at("held_out");
        HeldOutConfig held;
        for (const auto& run : h.at("runs")) {
            held.x0s.push_back(to_vector(run.at("x0")));
            held.u_consts.push_back(run.contains("u_const") ? to_vector(run.at("u_const"))
                                                            : Vector());
        }
        held.steps = h.value("steps", held.steps);
        held.target = h.value("target", held.target);
        cfg.held_out = held;
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_scenario(buf.str());
}

std::string ScenarioConfig::to_json_string() const {
    json j;
    j["schema_version"] = schema_version;
    j["name"] = name;
    j["master_seed"] = master_seed;
    if (!output_dir.empty()) j["output_dir"] = output_dir;
    json p;
    if (!plant.builtin.empty()) {
        p["builtin"] = plant.builtin;
    } else {
        p["A"] = from_matrix(plant.A);
        p["B"] = from_matrix(plant.B);
        p["noise_std"] = from_vector(plant.noise_std);
    }
    j["plant"] = p;
    j["bounds"] = {{"state_lo", from_vector(identify.design.state_box.lo)},
                   {"state_hi", from_vector(identify.design.state_box.hi)},
                   {"input_lo", from_vector(identify.design.input_box.lo)},
                   {"input_hi", from_vector(identify.design.input_box.hi)}};
    j["kernel"] = {{"lengthscale", identify.kernel.lengthscale}};
    json d;
    if (identify.design.delta1) d["delta1"] = *identify.design.delta1;
    if (identify.design.delta2) d["delta2"] = *identify.design.delta2;
    d["candidate_budget"] = identify.design.candidate_budget;
    d["T"] = identify.design.T;
    d["repetitions"] = identify.design.repetitions;
    d["input_class"] = identify.design.input_class == InputClass::constant ? "constant"
                       : identify.design.input_class == InputClass::chirp ? "chirp"
                                                                          : "piecewise_constant";
    j["design"] = d;
    j["steering"] = {{"q_scale", identify.steering.q_scale},
                     {"arrival_tol", identify.steering.arrival_tol},
                     {"max_steps", identify.steering.max_steps},
                     {"settle_steps", identify.steering.settle_steps},
                     {"riccati_tol", identify.steering.riccati_tol},
                     {"riccati_max_iter", identify.steering.riccati_max_iter}};
    j["test"] = {{"nu", identify.nu}, {"mc_runs", identify.mc_runs}};
    json s;
    s["kind"] = identify.fit.kind == ModelKind::linear ? "linear" : "feature_basis";
    s["increments"] = identify.fit.increments;
    s["intercept"] = identify.fit.intercept;
    s["ridge"] = identify.fit.ridge;
    s["excitation_runs"] = identify.excitation_runs;
    s["excitation_steps"] = identify.excitation_steps;
    if (identify.excitation_amplitudes.size() > 0) {
        s["excitation_amplitudes"] = from_vector(identify.excitation_amplitudes);
    }
    s["f0"] = identify.excitation_f0;
    s["f1"] = identify.excitation_f1;
    if (identify.excitation_x0.size() > 0) s["excitation_x0"] = from_vector(identify.excitation_x0);
    j["sysid"] = s;
    if (held_out) {
        json runs = json::array();
        for (size_t k = 0; k < held_out->x0s.size(); ++k) {
            json run = {{"x0", from_vector(held_out->x0s[k])}};
            if (held_out->u_consts[k].size() > 0) {
                run["u_const"] = from_vector(held_out->u_consts[k]);
            }
            runs.push_back(run);
        }
        j["held_out"] = {{"runs", runs},
                         {"steps", held_out->steps},
                         {"target", held_out->target}};
    }
    return j.dump(2);
}

} // namespace causalid
