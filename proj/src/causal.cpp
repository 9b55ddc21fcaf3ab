#include "causalid/causal.hpp"
#include "causalid/rng.hpp"
#include "causalid/threads.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace causalid {

CausalGraph CausalGraph::all_causal(int n, int m) {
    CausalGraph g;
    g.state_dim = n;
    g.input_dim = m;
    g.state_influence.assign(static_cast<size_t>(n), std::vector<bool>(static_cast<size_t>(n), true));
    g.input_influence.assign(static_cast<size_t>(m), std::vector<bool>(static_cast<size_t>(n), true));
    return g;
}

bool CausalGraph::influences(const SourceRef& src, int target) const {
    const auto& table =
        src.kind == SourceRef::Kind::state ? state_influence : input_influence;
    return table[static_cast<size_t>(src.index)][static_cast<size_t>(target)];
}

void CausalGraph::set(const SourceRef& src, int target, bool value) {
    auto& table = src.kind == SourceRef::Kind::state ? state_influence : input_influence;
    table[static_cast<size_t>(src.index)][static_cast<size_t>(target)] = value;
}

ExperimentData run_experiment(const Plant& plant, const EstimatedModel& model,
                              const ExperimentSpec& spec, const SteeringConfig& steer_cfg,
                              std::uint64_t seed, Vector* session_state) {
    spec.validate();
    if (spec.state_dim() != plant.state_dim() || spec.input_dim() != plant.input_dim()) {
        throw std::invalid_argument("run_experiment: spec does not match plant dimensions");
    }
    const SteeringGains gains = compute_steering_gains(model, steer_cfg);

    ExperimentData data;
    data.spec = spec;
    data.batch_I.spec_id = spec.id;
    data.batch_II.spec_id = spec.id;

    Vector state = session_state && session_state->size() == plant.state_dim()
                       ? *session_state
                       : Vector::Zero(plant.state_dim());

    constexpr int kRetries = 3;
    for (int r = 0; r < spec.repetitions; ++r) {
        SteeringRun run_I, run_II;
        std::uint64_t seed_I = 0, seed_II = 0;
        bool ok = false;
        for (int attempt = 0; attempt < kRetries; ++attempt) {
            seed_I = derive_seed(seed, {0x57e0u, static_cast<std::uint64_t>(r), 0,
                                        static_cast<std::uint64_t>(attempt)});
            seed_II = derive_seed(seed, {0x57e0u, static_cast<std::uint64_t>(r), 1,
                                         static_cast<std::uint64_t>(attempt)});
            run_I = steer_with_gains(plant, state, spec.x0_I, gains, steer_cfg, seed_I);
            run_II = steer_with_gains(plant, state, spec.x0_II, gains, steer_cfg, seed_II);
            if (run_I.arrived && run_II.arrived) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            std::ostringstream msg;
            msg << "run_experiment: steering failed for repetition " << r << " of " << spec.id
                << " (residuals " << (run_I.traj.final_state() - spec.x0_I).norm() << " / "
                << (run_II.traj.final_state() - spec.x0_II).norm() << " after "
                << steer_cfg.max_steps << " steps)";
            throw std::runtime_error(msg.str());
        }

        // Both arms replay from the same checkpoint for a common, settled
        // length so the achieved initial conditions match in distribution.
        const int forced = std::max(run_I.steps, run_II.steps) + steer_cfg.settle_steps;
        run_I = steer_with_gains(plant, state, spec.x0_I, gains, steer_cfg, seed_I, forced);
        run_II = steer_with_gains(plant, state, spec.x0_II, gains, steer_cfg, seed_II, forced);
        data.steering_lengths.push_back(forced);

        // One noise stream per repetition, shared by the two arms.
        const std::uint64_t run_seed =
            derive_seed(seed, {0xea0u, static_cast<std::uint64_t>(r)});
        Trajectory traj_I = simulate(plant, run_I.traj.final_state(), spec.inputs_I, run_seed);
        Trajectory traj_II = simulate(plant, run_II.traj.final_state(), spec.inputs_II, run_seed);
        if (traj_I.truncated || traj_II.truncated) {
            throw std::runtime_error("run_experiment: run left the state space in " + spec.id);
        }
        data.batch_I.runs.push_back(std::move(traj_I));
        data.batch_II.runs.push_back(std::move(traj_II));
        state = data.batch_II.runs.back().final_state();
    }
    if (session_state) *session_state = state;
    return data;
}

ThresholdStats test_threshold(const EstimatedModel& model_ind, const TrajectoryBatch& batch_I,
                              const TrajectoryBatch& batch_II, int target, double nu, int mc_runs,
                              bool subtract_initial, const KernelConfig& kernel,
                              std::uint64_t seed) {
    if (mc_runs < 2) throw std::invalid_argument("test_threshold: mc_runs must be >= 2");
    if (batch_I.runs.empty() || batch_I.size() != batch_II.size()) {
        throw std::invalid_argument("test_threshold: batches must be nonempty and equal-sized");
    }
    const int m = batch_I.size();

    // Achieved initial conditions and applied inputs, per repetition.
    std::vector<Vector> z_I(static_cast<size_t>(m)), z_II(static_cast<size_t>(m));
    for (int r = 0; r < m; ++r) {
        z_I[static_cast<size_t>(r)] = batch_I.runs[static_cast<size_t>(r)].states.row(0);
        z_II[static_cast<size_t>(r)] = batch_II.runs[static_cast<size_t>(r)].states.row(0);
    }

    ThresholdStats stats;
    {
        TrajectoryBatch sim_I, sim_II;
        for (int r = 0; r < m; ++r) {
            sim_I.runs.push_back(model_ind.predict(z_I[static_cast<size_t>(r)],
                                                   batch_I.runs[static_cast<size_t>(r)].inputs));
            sim_II.runs.push_back(model_ind.predict(z_II[static_cast<size_t>(r)],
                                                    batch_II.runs[static_cast<size_t>(r)].inputs));
        }
        stats.mc_mean = mmd2_unbiased(embed(sim_I, target, subtract_initial),
                                      embed(sim_II, target, subtract_initial), kernel);
    }

    std::vector<double> values(static_cast<size_t>(mc_runs), 0.0);
    parallel_for(mc_runs, [&](int k) {
        const std::uint64_t run_seed = derive_seed(seed, {0x3cu, static_cast<std::uint64_t>(k)});
        TrajectoryBatch sim_I, sim_II;
        for (int r = 0; r < m; ++r) {
            sim_I.runs.push_back(model_ind.predict_sampled(
                z_I[static_cast<size_t>(r)], batch_I.runs[static_cast<size_t>(r)].inputs,
                derive_seed(run_seed, {1, static_cast<std::uint64_t>(r)})));
            sim_II.runs.push_back(model_ind.predict_sampled(
                z_II[static_cast<size_t>(r)], batch_II.runs[static_cast<size_t>(r)].inputs,
                derive_seed(run_seed, {2, static_cast<std::uint64_t>(r)})));
        }
        values[static_cast<size_t>(k)] = mmd2_unbiased(embed(sim_I, target, subtract_initial),
                                                       embed(sim_II, target, subtract_initial),
                                                       kernel);
    });

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= mc_runs;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    stats.mc_std = std::sqrt(var / (mc_runs - 1));
    stats.threshold = stats.mc_mean + nu * stats.mc_std;
    return stats;
}

TestResult decide(const TrajectoryBatch& batch_I, const TrajectoryBatch& batch_II, int target,
                  const ThresholdStats& stats, double nu, bool subtract_initial,
                  const KernelConfig& kernel) {
    TestResult res;
    res.target = target;
    res.mc_mean = stats.mc_mean;
    res.mc_std = stats.mc_std;
    res.threshold = stats.threshold;
    res.nu = nu;
    res.subtract_initial = subtract_initial;
    res.repetitions = batch_I.size();
    res.T = batch_I.runs.front().steps();
    res.mmd2_empirical = mmd2_unbiased(embed(batch_I, target, subtract_initial),
                                       embed(batch_II, target, subtract_initial), kernel);
    res.causal = !(res.mmd2_empirical < res.threshold);
    return res;
}

namespace {

std::vector<Trajectory> excite(const Plant& plant, const IdentifyConfig& cfg,
                               std::uint64_t seed) {
    const int m = plant.input_dim();
    Vector x0 = cfg.excitation_x0.size() == plant.state_dim()
                    ? cfg.excitation_x0
                    : (plant.state_bounds() ? plant.state_bounds()->center()
                                            : Vector::Zero(plant.state_dim()));
    Vector amps = cfg.excitation_amplitudes.size() == m ? cfg.excitation_amplitudes
                                                        : Vector::Ones(m);
    std::vector<Trajectory> runs;
    std::mt19937_64 eng(derive_seed(seed, {0xecu}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < cfg.excitation_runs; ++k) {
        Matrix u = chirp_signal(cfg.excitation_steps, 1.0, cfg.excitation_f0, cfg.excitation_f1, m);
        for (int j = 0; j < m; ++j) u.col(j) *= amps[j];
        Vector start = x0;
        if (k > 0 && plant.state_bounds()) {
            // Additional bursts restart from random interior points so the
            // fit sees the whole box (needed for multiplicative dynamics).
            const Box& box = *plant.state_bounds();
            for (int i = 0; i < start.size(); ++i) {
                start[i] = box.lo[i] + unit(eng) * (box.hi[i] - box.lo[i]);
            }
        }
        if (plant.input_bounds()) {
            for (int t = 0; t < u.rows(); ++t) {
                u.row(t) = plant.input_bounds()->clamp(u.row(t).transpose()).transpose();
            }
        }
        runs.push_back(simulate(plant, start, u, derive_seed(seed, {0xecu, 1 + static_cast<std::uint64_t>(k)})));
    }
    return runs;
}

} // namespace

IdentifyResult identify_structure(const Plant& plant, const IdentifyConfig& cfg,
                                  std::uint64_t master_seed) {
    const int n = plant.state_dim();
    const int m = plant.input_dim();

    IdentifyResult result;
    result.excitation = excite(plant, cfg, master_seed);
    result.model_init = fit(result.excitation, cfg.fit);

    EstimatedModel current = result.model_init;
    ExclusionSet exclusions;
    result.graph = CausalGraph::all_causal(n, m);

    DesignConfig design_cfg = cfg.design;
    Vector delta2(n);
    if (!design_cfg.delta1.has_value() || !design_cfg.delta2.has_value()) {
        const Vector floor = noise_floor_per_target(current, design_cfg, cfg.kernel,
                                                    derive_seed(master_seed, {0xf1u}));
        if (!design_cfg.delta1.has_value()) {
            design_cfg.delta1 = 10.0 * floor.maxCoeff();
        }
        delta2 = design_cfg.delta2.has_value() ? Vector::Constant(n, *design_cfg.delta2)
                                               : Vector(10.0 * floor.array());
    } else {
        delta2 = Vector::Constant(n, *design_cfg.delta2);
    }
    result.delta1 = *design_cfg.delta1;
    result.delta2 = delta2;

    std::vector<SourceRef> sources;
    for (int j = 0; j < n; ++j) sources.push_back({SourceRef::Kind::state, j});
    for (int j = 0; j < m; ++j) sources.push_back({SourceRef::Kind::input, j});

    Vector session_state = cfg.excitation_x0.size() == n ? cfg.excitation_x0 : Vector::Zero(n);
    if (plant.state_bounds()) session_state = plant.state_bounds()->center();

    for (size_t s = 0; s < sources.size(); ++s) {
        const SourceRef src = sources[s];
        ExperimentData data;
        try {
            const std::uint64_t design_seed =
                derive_seed(master_seed, {0xdeu, static_cast<std::uint64_t>(s)});
            DesignResult design =
                src.kind == SourceRef::Kind::state
                    ? design_state_experiment(current, src.index, design_cfg, cfg.kernel,
                                              design_seed)
                    : design_input_experiment(current, src.index, design_cfg, cfg.kernel,
                                              design_seed);
            if (!design.above_delta1) {
                result.warnings.push_back("design for " + src.label() +
                                          " stayed below delta1; using best candidate");
            }
            data = run_experiment(plant, current, design.spec, cfg.steering,
                                  derive_seed(master_seed, {0xabu, static_cast<std::uint64_t>(s)}),
                                  &session_state);
        } catch (const std::exception& e) {
            result.failures.push_back({src, e.what()});
            continue;
        }

        for (int i = 0; i < n; ++i) {
            const double relevance = predicted_mmd(current, data.spec, i, 0, cfg.kernel);
            if (!(relevance > delta2[i])) {
                result.graph.untested.push_back({src, i, relevance});
                continue;
            }
            // The restricted model does not use the source's data at all
            // (every row drops it), so its rollouts cannot transmit the
            // source through indirect paths; only row i is adopted on
            // acceptance.
            ExclusionSet threshold_excl = exclusions;
            for (int r = 0; r < n; ++r) threshold_excl.emplace(r, src);
            const EstimatedModel model_ind = fit(result.excitation, cfg.fit, threshold_excl);

            const bool subtract = src.kind == SourceRef::Kind::state && src.index == i;
            const std::uint64_t test_seed =
                derive_seed(master_seed, {0x7eu, static_cast<std::uint64_t>(s),
                                          static_cast<std::uint64_t>(i)});
            const ThresholdStats stats =
                test_threshold(model_ind, data.batch_I, data.batch_II, i, cfg.nu, cfg.mc_runs,
                               subtract, cfg.kernel, test_seed);
            TestResult verdict = decide(data.batch_I, data.batch_II, i, stats, cfg.nu, subtract,
                                        cfg.kernel);
            verdict.source = src;
            verdict.seed = test_seed;
            result.graph.evidence.push_back(verdict);
            result.graph.set(src, i, verdict.causal);
            if (!verdict.causal) {
                // Adopt the restricted row for target i only: per-row OLS
                // makes that row identical to model_ind's row i.
                exclusions.emplace(i, src);
                current = fit(result.excitation, cfg.fit, exclusions);
            }
        }
        result.experiments.push_back(std::move(data));
    }

    result.model_caus = current;
    return result;
}

std::pair<double, double> generalization_report(const EstimatedModel& model_init,
                                                const EstimatedModel& model_caus,
                                                const TrajectoryBatch& held_out, int target) {
    if (held_out.runs.empty()) throw std::invalid_argument("generalization: empty held-out batch");
    auto rmse = [&](const EstimatedModel& model) {
        double acc = 0.0;
        long count = 0;
        for (const Trajectory& traj : held_out.runs) {
            const Trajectory pred =
                model.predict(traj.states.row(0).transpose(), traj.inputs);
            const Vector err = pred.states.col(target) - traj.states.col(target);
            acc += err.squaredNorm();
            count += err.size();
        }
        return std::sqrt(acc / static_cast<double>(count));
    };
    return {rmse(model_init), rmse(model_caus)};
}

CausalGraph ground_truth_graph(const LtiModel& model, int T) {
    const int n = model.state_dim();
    const int m = model.input_dim();
    CausalGraph g;
    g.state_dim = n;
    g.input_dim = m;
    g.state_influence.assign(static_cast<size_t>(n),
                             std::vector<bool>(static_cast<size_t>(n), false));
    g.input_influence.assign(static_cast<size_t>(m),
                             std::vector<bool>(static_cast<size_t>(n), false));

    const double tol = 1e-9;
    Matrix Ak = Matrix::Identity(n, n);
    for (int t = 1; t <= T; ++t) {
        Ak = model.A() * Ak; // A^t
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const double ref = i == j ? 1.0 : 0.0;
                if (std::abs(Ak(i, j) - ref) > tol) {
                    g.state_influence[static_cast<size_t>(j)][static_cast<size_t>(i)] = true;
                }
            }
        }
    }
    // Inputs: (A^k B)_{ij} for k = 0..T-1.
    Matrix AkB = model.B();
    for (int k = 0; k < T; ++k) {
        for (int j = 0; j < m; ++j) {
            for (int i = 0; i < n; ++i) {
                if (std::abs(AkB(i, j)) > tol) {
                    g.input_influence[static_cast<size_t>(j)][static_cast<size_t>(i)] = true;
                }
            }
        }
        AkB = model.A() * AkB;
    }
    return g;
}

} // namespace causalid
