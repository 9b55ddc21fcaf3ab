#pragma once

#include "causalid/dynamics.hpp"
#include "causalid/sysid.hpp"

#include <cstdint>

namespace causalid {

struct SteeringConfig {
    Matrix Q;             // empty -> q_scale * identity
    Matrix R;             // empty -> identity
    double q_scale = 1.0; // state-weight scale when Q is defaulted
    double arrival_tol = 0.01;
    int max_steps = 400;
    // Extra steps appended when paired runs are forced to a common length, so
    // the first-arrival shell bias decays to the stationary distribution.
    int settle_steps = 20;
    double riccati_tol = 1e-10;
    int riccati_max_iter = 10000;
};

struct ControllabilityResult {
    int rank = 0;
    bool controllable = false;
};

ControllabilityResult controllability_rank(const Matrix& A, const Matrix& B);
ControllabilityResult controllability_rank(const LtiModel& model);
ControllabilityResult controllability_rank(const EstimatedModel& model);

// Feedback gain F for u = M x_des + F x; A + B F has spectral radius < 1.
// Solved by fixed-point iteration of the discrete Riccati equation.
Matrix lqr_gain(const Matrix& A, const Matrix& B, const SteeringConfig& cfg);
Matrix lqr_gain(const EstimatedModel& model, const SteeringConfig& cfg);

// Feedforward M = ((I - A_cl)^{-1} B)^{-1}; pseudo-inverse when B is not
// square, with the tracking residual reported.
Matrix feedforward_gain(const Matrix& A, const Matrix& B, const Matrix& F,
                        double* residual = nullptr);

struct SteeringGains {
    Matrix F;
    Matrix M;
    double feedforward_residual = 0.0;
};

SteeringGains compute_steering_gains(const EstimatedModel& model, const SteeringConfig& cfg);

struct SteeringRun {
    Trajectory traj;
    bool arrived = false;
    int steps = 0; // steps actually taken
};

// Apply u = M x_des + F x on the true plant from `start` until the state is
// within arrival_tol of x_des (or max_steps). If forced_steps >= 0 the law
// runs exactly that many steps and arrival is judged at the end; with equal
// seeds the forced run replays the free run's prefix bit-exactly.
SteeringRun steer_with_gains(const Plant& plant, const Vector& start, const Vector& x_des,
                             const SteeringGains& gains, const SteeringConfig& cfg,
                             std::uint64_t seed, int forced_steps = -1);

// Spec-level convenience: derive gains from the estimated model, then steer.
SteeringRun steer_to(const Plant& plant, const EstimatedModel& model, const Vector& x_des,
                     const SteeringConfig& cfg, std::uint64_t seed);

} // namespace causalid
