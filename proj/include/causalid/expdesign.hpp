#pragma once

#include "causalid/dynamics.hpp"
#include "causalid/kernels.hpp"
#include "causalid/sysid.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace causalid {

enum class ExperimentKind { state_test, input_test };

// Paired experiment per the two templates: arms I and II share everything
// except one initial-state component (state test) or one input channel at
// every step (input test).
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::state_test;
    int varied_index = 0;
    int T = 100;
    int repetitions = 10;
    Vector x0_I, x0_II;
    Matrix inputs_I, inputs_II;
    std::string id;

    int state_dim() const { return static_cast<int>(x0_I.size()); }
    int input_dim() const { return static_cast<int>(inputs_I.cols()); }
    // Throws unless the arm constraints hold exactly.
    void validate() const;

    std::string to_json_string() const;
    static ExperimentSpec from_json_string(const std::string& text);
};

enum class InputClass { constant, chirp, piecewise_constant };

struct DesignConfig {
    std::optional<double> delta1; // design acceptance threshold on predicted MMD
    std::optional<double> delta2; // per-target relevance threshold
    int candidate_budget = 40;
    int T = 100;
    int repetitions = 10;
    InputClass input_class = InputClass::constant;
    Box state_box;
    Box input_box;
};

// Model-predicted MMD^2 of the target component between the two arms.
// mc_runs = 0: point estimate from one noiseless rollout per arm;
// mc_runs > 0: mean over seeded sampled-rollout batches of `repetitions` runs.
// Self state tests (target == varied state) use the subtract-initial embedding,
// matching the hypothesis test.
double predicted_mmd(const EstimatedModel& model, const ExperimentSpec& spec, int target,
                     int mc_runs, const KernelConfig& kernel, std::uint64_t seed = 0);

struct DesignResult {
    ExperimentSpec spec;
    double score = 0.0;       // max over targets of predicted MMD
    bool above_delta1 = true; // false -> best-effort argmax fallback
    int candidate_index = 0;
};

DesignResult design_state_experiment(const EstimatedModel& model, int varied_state,
                                     const DesignConfig& cfg, const KernelConfig& kernel,
                                     std::uint64_t seed);
DesignResult design_input_experiment(const EstimatedModel& model, int varied_input,
                                     const DesignConfig& cfg, const KernelConfig& kernel,
                                     std::uint64_t seed);

// Mean sampled predicted MMD of an identical-arms spec: the model-implied
// noise floor used for the default delta1/delta2 (10x the floor).
Vector noise_floor_per_target(const EstimatedModel& model, const DesignConfig& cfg,
                              const KernelConfig& kernel, std::uint64_t seed, int mc_runs = 50);

} // namespace causalid
