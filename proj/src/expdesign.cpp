#include "causalid/expdesign.hpp"
#include "causalid/rng.hpp"
#include "causalid/threads.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <stdexcept>

namespace causalid {

using nlohmann::json;

void ExperimentSpec::validate() const {
    if (x0_I.size() != x0_II.size()) throw std::invalid_argument("spec: x0 dimension mismatch");
    if (inputs_I.rows() != T || inputs_II.rows() != T) {
        throw std::invalid_argument("spec: input horizon mismatch");
    }
    if (inputs_I.cols() != inputs_II.cols()) {
        throw std::invalid_argument("spec: input channel mismatch");
    }
    if (repetitions < 2) throw std::invalid_argument("spec: need at least two repetitions");

    if (kind == ExperimentKind::state_test) {
        if (varied_index < 0 || varied_index >= x0_I.size()) {
            throw std::invalid_argument("spec: varied state index out of range");
        }
        for (int l = 0; l < x0_I.size(); ++l) {
            if (l == varied_index) continue;
            if (x0_I[l] != x0_II[l]) {
                throw std::invalid_argument("spec: tied initial states must match exactly");
            }
        }
        if (x0_I[varied_index] == x0_II[varied_index]) {
            throw std::invalid_argument("spec: varied initial state must differ");
        }
        if (inputs_I != inputs_II) {
            throw std::invalid_argument("spec: state test requires identical inputs");
        }
    } else {
        if (varied_index < 0 || varied_index >= inputs_I.cols()) {
            throw std::invalid_argument("spec: varied input index out of range");
        }
        if (x0_I != x0_II) {
            throw std::invalid_argument("spec: input test requires identical initial states");
        }
        for (int l = 0; l < inputs_I.cols(); ++l) {
            if (l == varied_index) continue;
            if (inputs_I.col(l) != inputs_II.col(l)) {
                throw std::invalid_argument("spec: tied input channels must match exactly");
            }
        }
        for (int t = 0; t < T; ++t) {
            if (inputs_I(t, varied_index) == inputs_II(t, varied_index)) {
                throw std::invalid_argument("spec: varied input must differ at every step");
            }
        }
    }
}

std::string ExperimentSpec::to_json_string() const {
    json j;
    j["kind"] = kind == ExperimentKind::state_test ? "state_test" : "input_test";
    j["varied_index"] = varied_index;
    j["T"] = T;
    j["repetitions"] = repetitions;
    j["id"] = id;
    j["x0_I"] = std::vector<double>(x0_I.begin(), x0_I.end());
    j["x0_II"] = std::vector<double>(x0_II.begin(), x0_II.end());
    auto mat = [](const Matrix& m) {
        std::vector<std::vector<double>> rows;
        for (int r = 0; r < m.rows(); ++r) rows.emplace_back(m.row(r).begin(), m.row(r).end());
        return rows;
    };
    j["inputs_I"] = mat(inputs_I);
    j["inputs_II"] = mat(inputs_II);
    return j.dump(2);
}

ExperimentSpec ExperimentSpec::from_json_string(const std::string& text) {
    json j = json::parse(text);
    ExperimentSpec spec;
    spec.kind = j.at("kind").get<std::string>() == "state_test" ? ExperimentKind::state_test
                                                                : ExperimentKind::input_test;
    spec.varied_index = j.at("varied_index").get<int>();
    spec.T = j.at("T").get<int>();
    spec.repetitions = j.at("repetitions").get<int>();
    spec.id = j.value("id", "");
    auto vec = [&](const char* key) {
        const auto v = j.at(key).get<std::vector<double>>();
        return Vector(Eigen::Map<const Vector>(v.data(), static_cast<int>(v.size())));
    };
    spec.x0_I = vec("x0_I");
    spec.x0_II = vec("x0_II");
    auto mat = [&](const char* key) {
        const auto rows = j.at(key).get<std::vector<std::vector<double>>>();
        Matrix m(static_cast<int>(rows.size()),
                 rows.empty() ? 0 : static_cast<int>(rows.front().size()));
        for (int r = 0; r < m.rows(); ++r) {
            for (int c = 0; c < m.cols(); ++c) {
                m(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)];
            }
        }
        return m;
    };
    spec.inputs_I = mat("inputs_I");
    spec.inputs_II = mat("inputs_II");
    spec.validate();
    return spec;
}

namespace {

bool self_test_subtraction(const ExperimentSpec& spec, int target) {
    return spec.kind == ExperimentKind::state_test && spec.varied_index == target;
}

} // namespace

double predicted_mmd(const EstimatedModel& model, const ExperimentSpec& spec, int target,
                     int mc_runs, const KernelConfig& kernel, std::uint64_t seed) {
    spec.validate();
    if (target < 0 || target >= model.state_dim()) {
        throw std::out_of_range("predicted_mmd: target out of range");
    }
    const bool subtract = self_test_subtraction(spec, target);

    if (mc_runs <= 0) {
        const Trajectory a = model.predict(spec.x0_I, spec.inputs_I);
        const Trajectory b = model.predict(spec.x0_II, spec.inputs_II);
        Vector va = a.states.col(target);
        Vector vb = b.states.col(target);
        if (subtract) {
            va.array() -= va[0];
            vb.array() -= vb[0];
        }
        // Squared RKHS distance between the two noiseless rollout embeddings.
        return 2.0 * (1.0 - gaussian_kernel(va, vb, kernel));
    }

    std::vector<double> values(static_cast<size_t>(mc_runs), 0.0);
    parallel_for(mc_runs, [&](int k) {
        const std::uint64_t run_seed = derive_seed(seed, {0xde51u, static_cast<std::uint64_t>(k)});
        TrajectoryBatch bi, bii;
        for (int r = 0; r < spec.repetitions; ++r) {
            bi.runs.push_back(model.predict_sampled(
                spec.x0_I, spec.inputs_I, derive_seed(run_seed, {1, static_cast<std::uint64_t>(r)})));
            bii.runs.push_back(model.predict_sampled(
                spec.x0_II, spec.inputs_II, derive_seed(run_seed, {2, static_cast<std::uint64_t>(r)})));
        }
        values[static_cast<size_t>(k)] =
            mmd2_unbiased(embed(bi, target, subtract), embed(bii, target, subtract), kernel);
    });
    double mean = 0.0;
    for (double v : values) mean += v;
    return mean / mc_runs;
}

namespace {

struct Candidate {
    Vector x0_I, x0_II;
    Matrix inputs_I, inputs_II;
};

Matrix shared_design_inputs(const DesignConfig& cfg, InputClass cls, std::mt19937_64& eng) {
    const int m = cfg.input_box.dim();
    const Vector half = 0.5 * (cfg.input_box.hi - cfg.input_box.lo);
    const Vector center = cfg.input_box.center();
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Matrix u(cfg.T, m);
    switch (cls) {
        case InputClass::constant: {
            for (int j = 0; j < m; ++j) {
                const double v = center[j] + 0.5 * half[j] * unit(eng);
                u.col(j).setConstant(v);
            }
            break;
        }
        case InputClass::chirp: {
            const Matrix base = chirp_signal(cfg.T, 1.0, 0.01, 0.2, m);
            for (int j = 0; j < m; ++j) {
                u.col(j) = center[j] + 0.3 * half[j] * base.col(j).array();
            }
            break;
        }
        case InputClass::piecewise_constant: {
            const int segments = 5;
            const int seg_len = std::max(1, cfg.T / segments);
            for (int j = 0; j < m; ++j) {
                for (int s = 0; s * seg_len < cfg.T; ++s) {
                    const double v = center[j] + 0.5 * half[j] * unit(eng);
                    const int lo = s * seg_len;
                    const int hi = std::min(cfg.T, lo + seg_len);
                    u.col(j).segment(lo, hi - lo).setConstant(v);
                }
            }
            break;
        }
    }
    return u;
}

ExperimentSpec make_spec(ExperimentKind kind, int j, const DesignConfig& cfg, Candidate cand) {
    ExperimentSpec spec;
    spec.kind = kind;
    spec.varied_index = j;
    spec.T = cfg.T;
    spec.repetitions = cfg.repetitions;
    spec.x0_I = std::move(cand.x0_I);
    spec.x0_II = std::move(cand.x0_II);
    spec.inputs_I = std::move(cand.inputs_I);
    spec.inputs_II = std::move(cand.inputs_II);
    return spec;
}

DesignResult search_candidates(const EstimatedModel& model, ExperimentKind kind, int j,
                               const DesignConfig& cfg, const KernelConfig& kernel,
                               std::uint64_t seed,
                               const std::function<Candidate(int, std::mt19937_64&)>& gen) {
    if (cfg.candidate_budget < 1) throw std::invalid_argument("design: budget must be >= 1");
    if (!cfg.delta1.has_value()) throw std::invalid_argument("design: delta1 unresolved");

    const int n = model.state_dim();
    // For state tests the self target's subtracted movement responds to the
    // varied entry for almost any model, which would mask every other
    // target's sensitivity in the score; rate the candidates on the targets
    // the experiment is actually probing.
    std::vector<int> targets;
    for (int i = 0; i < n; ++i) {
        if (kind == ExperimentKind::state_test && i == j && n > 1) continue;
        targets.push_back(i);
    }

    std::vector<ExperimentSpec> specs;
    specs.reserve(static_cast<size_t>(cfg.candidate_budget));
    {
        std::mt19937_64 eng(derive_seed(seed, {0xca4du}));
        for (int c = 0; c < cfg.candidate_budget; ++c) {
            ExperimentSpec spec = make_spec(kind, j, cfg, gen(c, eng));
            spec.validate();
            specs.push_back(std::move(spec));
        }
    }

    std::vector<double> scores(specs.size(), 0.0);
    parallel_for(static_cast<int>(specs.size()), [&](int c) {
        double best = 0.0;
        for (int i : targets) {
            best = std::max(best, predicted_mmd(model, specs[static_cast<size_t>(c)], i, 0, kernel));
        }
        scores[static_cast<size_t>(c)] = best;
    });

    // First candidate above delta1 wins; otherwise the argmax (lowest index
    // on ties) with a below-threshold warning.
    int chosen = -1;
    for (size_t c = 0; c < specs.size(); ++c) {
        if (scores[c] > *cfg.delta1) {
            chosen = static_cast<int>(c);
            break;
        }
    }
    DesignResult result;
    if (chosen >= 0) {
        result.above_delta1 = true;
    } else {
        double best = -1.0;
        for (size_t c = 0; c < specs.size(); ++c) {
            if (scores[c] > best) {
                best = scores[c];
                chosen = static_cast<int>(c);
            }
        }
        result.above_delta1 = false;
        if (best <= 0.0) {
            throw std::runtime_error("design: all candidates predict zero MMD for " +
                                     std::string(kind == ExperimentKind::state_test ? "x" : "u") +
                                     std::to_string(j + 1));
        }
    }
    result.spec = specs[static_cast<size_t>(chosen)];
    result.score = scores[static_cast<size_t>(chosen)];
    result.candidate_index = chosen;
    return result;
}

} // namespace

DesignResult design_state_experiment(const EstimatedModel& model, int varied_state,
                                     const DesignConfig& cfg, const KernelConfig& kernel,
                                     std::uint64_t seed) {
    const int n = model.state_dim();
    if (varied_state < 0 || varied_state >= n) {
        throw std::out_of_range("design: varied state out of range");
    }
    if (cfg.state_box.dim() != n || cfg.input_box.dim() != model.input_dim()) {
        throw std::invalid_argument("design: bounds do not match model dimensions");
    }

    auto gen = [&](int c, std::mt19937_64& eng) {
        Candidate cand;
        if (c == 0) {
            // Heuristic first guess: varied entries at opposite bounds, the
            // rest at the box center, one shared chirp input.
            cand.x0_I = cfg.state_box.center();
            cand.x0_II = cand.x0_I;
            cand.x0_I[varied_state] = cfg.state_box.lo[varied_state];
            cand.x0_II[varied_state] = cfg.state_box.hi[varied_state];
            std::mt19937_64 dummy(0);
            cand.inputs_I = shared_design_inputs(cfg, InputClass::chirp, dummy);
        } else {
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            cand.x0_I.resize(n);
            for (int i = 0; i < n; ++i) {
                cand.x0_I[i] = cfg.state_box.lo[i] +
                               unit(eng) * (cfg.state_box.hi[i] - cfg.state_box.lo[i]);
            }
            cand.x0_II = cand.x0_I;
            cand.x0_II[varied_state] = cfg.state_box.lo[varied_state] +
                                       unit(eng) * (cfg.state_box.hi[varied_state] -
                                                    cfg.state_box.lo[varied_state]);
            if (cand.x0_II[varied_state] == cand.x0_I[varied_state]) {
                cand.x0_II[varied_state] = cfg.state_box.hi[varied_state];
            }
            cand.inputs_I = shared_design_inputs(cfg, cfg.input_class, eng);
        }
        cand.inputs_II = cand.inputs_I;
        return cand;
    };
    DesignResult res = search_candidates(model, ExperimentKind::state_test, varied_state, cfg,
                                         kernel, seed, gen);
    res.spec.id = "state" + std::to_string(varied_state + 1);
    return res;
}

DesignResult design_input_experiment(const EstimatedModel& model, int varied_input,
                                     const DesignConfig& cfg, const KernelConfig& kernel,
                                     std::uint64_t seed) {
    const int m = model.input_dim();
    if (varied_input < 0 || varied_input >= m) {
        throw std::out_of_range("design: varied input out of range");
    }
    if (cfg.state_box.dim() != model.state_dim() || cfg.input_box.dim() != m) {
        throw std::invalid_argument("design: bounds do not match model dimensions");
    }
    const double half = 0.5 * (cfg.input_box.hi[varied_input] - cfg.input_box.lo[varied_input]);
    const double mid = 0.5 * (cfg.input_box.hi[varied_input] + cfg.input_box.lo[varied_input]);

    auto gen = [&](int c, std::mt19937_64& eng) {
        Candidate cand;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (c == 0) {
            cand.x0_I = cfg.state_box.center();
            std::mt19937_64 dummy(0);
            cand.inputs_I = shared_design_inputs(cfg, InputClass::constant, dummy);
            cand.inputs_I.col(varied_input).setConstant(mid + half);
        } else {
            cand.x0_I.resize(cfg.state_box.dim());
            for (int i = 0; i < cand.x0_I.size(); ++i) {
                cand.x0_I[i] = cfg.state_box.lo[i] +
                               unit(eng) * (cfg.state_box.hi[i] - cfg.state_box.lo[i]);
            }
            cand.inputs_I = shared_design_inputs(cfg, cfg.input_class, eng);
            const double amp = (0.2 + 0.8 * unit(eng)) * half;
            cand.inputs_I.col(varied_input).setConstant(mid + amp);
        }
        cand.x0_II = cand.x0_I;
        cand.inputs_II = cand.inputs_I;
        // Arm II mirrors the varied channel's amplitude profile.
        cand.inputs_II.col(varied_input) =
            (2.0 * mid - cand.inputs_I.col(varied_input).array()).matrix();
        return cand;
    };
    DesignResult res = search_candidates(model, ExperimentKind::input_test, varied_input, cfg,
                                         kernel, seed, gen);
    res.spec.id = "input" + std::to_string(varied_input + 1);
    return res;
}

Vector noise_floor_per_target(const EstimatedModel& model, const DesignConfig& cfg,
                              const KernelConfig& kernel, std::uint64_t seed, int mc_runs) {
    const int n = model.state_dim();
    // Identical-arms spec: any MMD is pure sampling noise. Built directly
    // (constraint validation applies only to genuine experiment pairs).
    ExperimentSpec spec;
    spec.kind = ExperimentKind::state_test;
    spec.varied_index = 0;
    spec.T = cfg.T;
    spec.repetitions = cfg.repetitions;
    spec.x0_I = cfg.state_box.center();
    spec.x0_II = spec.x0_I;
    spec.inputs_I = Matrix::Zero(cfg.T, cfg.input_box.dim());
    spec.inputs_II = spec.inputs_I;

    Vector floor(n);
    for (int i = 0; i < n; ++i) {
        std::vector<double> values(static_cast<size_t>(mc_runs), 0.0);
        parallel_for(mc_runs, [&](int k) {
            const std::uint64_t run_seed =
                derive_seed(seed, {0xf100u, static_cast<std::uint64_t>(i),
                                   static_cast<std::uint64_t>(k)});
            TrajectoryBatch bi, bii;
            for (int r = 0; r < spec.repetitions; ++r) {
                bi.runs.push_back(model.predict_sampled(
                    spec.x0_I, spec.inputs_I,
                    derive_seed(run_seed, {1, static_cast<std::uint64_t>(r)})));
                bii.runs.push_back(model.predict_sampled(
                    spec.x0_II, spec.inputs_II,
                    derive_seed(run_seed, {2, static_cast<std::uint64_t>(r)})));
            }
            values[static_cast<size_t>(k)] =
                mmd2_unbiased(embed(bi, i, false), embed(bii, i, false), kernel);
        });
        double mean = 0.0;
        for (double v : values) mean += v;
        floor[i] = std::abs(mean / mc_runs);
    }
    return floor;
}

} // namespace causalid
