#pragma once

#include "causalid/control.hpp"
#include "causalid/dynamics.hpp"
#include "causalid/expdesign.hpp"
#include "causalid/kernels.hpp"
#include "causalid/sysid.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace causalid {

struct TestResult {
    SourceRef source;
    int target = 0;
    double mmd2_empirical = 0.0;
    double threshold = 0.0;
    double mc_mean = 0.0;
    double mc_std = 0.0;
    double nu = 1.0;
    bool causal = true; // non-causal iff mmd2_empirical < threshold
    bool subtract_initial = false;
    int repetitions = 0;
    int T = 0;
    std::uint64_t seed = 0;
};

// A pair left untested because its predicted relevance stayed at or below
// delta2; the model edge is kept (causal by default).
struct UntestedPair {
    SourceRef source;
    int target = 0;
    double predicted_relevance = 0.0;
};

struct CausalGraph {
    int state_dim = 0;
    int input_dim = 0;
    // influence[source][target]; true means the edge is kept.
    std::vector<std::vector<bool>> state_influence;
    std::vector<std::vector<bool>> input_influence;
    std::vector<TestResult> evidence;
    std::vector<UntestedPair> untested;

    static CausalGraph all_causal(int n, int m);
    bool influences(const SourceRef& src, int target) const;
    void set(const SourceRef& src, int target, bool value);
};

struct ExperimentData {
    ExperimentSpec spec;
    TrajectoryBatch batch_I;
    TrajectoryBatch batch_II;
    std::vector<int> steering_lengths; // per repetition (common to both arms)
};

// Runs the paired experiment on the plant: per repetition both arms steer
// from the same checkpoint to their initial conditions (equal, settled
// lengths; 3 fresh-seed retries), then apply the arm inputs for T steps with
// a shared per-repetition noise stream. session_state, when given, carries
// the plant state across calls.
ExperimentData run_experiment(const Plant& plant, const EstimatedModel& model,
                              const ExperimentSpec& spec, const SteeringConfig& steer_cfg,
                              std::uint64_t seed, Vector* session_state = nullptr);

struct ThresholdStats {
    double mc_mean = 0.0;
    double mc_std = 0.0;
    double threshold = 0.0;
};

// Test statistic under the restricted model: the mean comes from noiseless
// rollouts at the achieved initial conditions, the deviation from mc_runs
// independently seeded sampled rollout pairs.
ThresholdStats test_threshold(const EstimatedModel& model_ind, const TrajectoryBatch& batch_I,
                              const TrajectoryBatch& batch_II, int target, double nu, int mc_runs,
                              bool subtract_initial, const KernelConfig& kernel,
                              std::uint64_t seed);

TestResult decide(const TrajectoryBatch& batch_I, const TrajectoryBatch& batch_II, int target,
                  const ThresholdStats& stats, double nu, bool subtract_initial,
                  const KernelConfig& kernel);

struct IdentifyConfig {
    DesignConfig design;
    SteeringConfig steering;
    KernelConfig kernel;
    FitOptions fit;
    double nu = 1.0;
    int mc_runs = 100;
    // Excitation protocol (Algorithm line 1).
    int excitation_runs = 1;
    int excitation_steps = 3000;
    Vector excitation_x0;          // empty -> zeros / box center
    Vector excitation_amplitudes;  // per-channel chirp scaling
    double excitation_f0 = 0.01;
    double excitation_f1 = 0.2;
};

struct SourceFailure {
    SourceRef source;
    std::string reason;
};

struct IdentifyResult {
    CausalGraph graph;
    EstimatedModel model_init;
    EstimatedModel model_caus;
    std::vector<Trajectory> excitation;
    std::vector<ExperimentData> experiments;
    std::vector<SourceFailure> failures;
    std::vector<std::string> warnings;
    double delta1 = 0.0;
    Vector delta2;
};

IdentifyResult identify_structure(const Plant& plant, const IdentifyConfig& cfg,
                                  std::uint64_t master_seed);

// Noiseless-prediction RMSE of both models on held-out data for one target.
std::pair<double, double> generalization_report(const EstimatedModel& model_init,
                                                const EstimatedModel& model_caus,
                                                const TrajectoryBatch& held_out, int target);

// Ground-truth non-causality for an LTI plant via matrix powers: a state pair
// (j -> i) with i != j is non-causal iff (A^t)_{ij} = 0 for all t <= T; a self
// pair matches the subtract-initial semantics, (A^t)_{jj} = 1 for all t; an
// input pair iff (A^k B)_{ij} = 0 for all k < T.
CausalGraph ground_truth_graph(const LtiModel& model, int T);

} // namespace causalid
