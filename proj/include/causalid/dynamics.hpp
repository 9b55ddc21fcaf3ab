#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace causalid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Axis-aligned box in R^k.
struct Box {
    Vector lo;
    Vector hi;

    Box() = default;
    Box(Vector lo_, Vector hi_);

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const Vector& x) const;
    Vector center() const { return 0.5 * (lo + hi); }
    Vector clamp(const Vector& x) const;
};

// One realization of a length-T rollout. states has T+1 rows, inputs T rows.
// A run that left the state bounds is cut at the offending step and flagged.
struct Trajectory {
    Matrix states; // (T+1) x n
    Matrix inputs; // T x m
    bool truncated = false;

    int steps() const { return static_cast<int>(inputs.rows()); }
    int state_dim() const { return static_cast<int>(states.cols()); }
    int input_dim() const { return static_cast<int>(inputs.cols()); }
    Vector final_state() const { return states.row(states.rows() - 1); }
};

struct TrajectoryBatch {
    std::vector<Trajectory> runs;
    std::string spec_id;

    int size() const { return static_cast<int>(runs.size()); }
};

// x(t+1) = A x(t) + B u(t) + v(t),  v ~ N(0, diag(noise_std^2))
class LtiModel {
public:
    LtiModel(Matrix A, Matrix B, Vector noise_std);

    const Matrix& A() const { return A_; }
    const Matrix& B() const { return B_; }
    const Vector& noise_std() const { return noise_std_; }
    int state_dim() const { return static_cast<int>(A_.rows()); }
    int input_dim() const { return static_cast<int>(B_.cols()); }

    Vector step(const Vector& x, const Vector& u) const { return A_ * x + B_ * u; }

private:
    Matrix A_;
    Matrix B_;
    Vector noise_std_;
};

// Deterministic transition map plus additive Gaussian noise, restricted to
// box-shaped state and input spaces.
class NonlinearModel {
public:
    using TransitionFn = std::function<Vector(const Vector&, const Vector&)>;

    NonlinearModel(std::string name, TransitionFn transition, Vector noise_std,
                   Box state_bounds, Box input_bounds);

    const std::string& name() const { return name_; }
    const Vector& noise_std() const { return noise_std_; }
    const Box& state_bounds() const { return state_bounds_; }
    const Box& input_bounds() const { return input_bounds_; }
    int state_dim() const { return static_cast<int>(noise_std_.size()); }
    int input_dim() const { return input_bounds_.dim(); }

    Vector step(const Vector& x, const Vector& u) const { return transition_(x, u); }

private:
    std::string name_;
    TransitionFn transition_;
    Vector noise_std_;
    Box state_bounds_;
    Box input_bounds_;
};

// A plant is either form; immutable and shareable after construction.
class Plant {
public:
    Plant(LtiModel m) : model_(std::move(m)) {}
    Plant(NonlinearModel m) : model_(std::move(m)) {}

    bool is_lti() const { return std::holds_alternative<LtiModel>(model_); }
    const LtiModel& lti() const { return std::get<LtiModel>(model_); }
    const NonlinearModel& nonlinear() const { return std::get<NonlinearModel>(model_); }

    int state_dim() const;
    int input_dim() const;
    const Vector& noise_std() const;
    const Box* state_bounds() const;
    const Box* input_bounds() const;

    Vector step_mean(const Vector& x, const Vector& u) const;

private:
    std::variant<LtiModel, NonlinearModel> model_;
};

// Stochastic rollout; bitwise deterministic for fixed arguments and seed.
Trajectory simulate(const Plant& plant, const Vector& x0, const Matrix& inputs,
                    std::uint64_t rng_seed);

// Noiseless rollout of an LTI model.
Trajectory mean_trajectory(const LtiModel& model, const Vector& x0, const Matrix& inputs);

// Linear-frequency-sweep excitation, one column per channel. Channels get a
// 2*pi*j/m phase shift and a staggered sweep start so the input block has
// full column rank over a long horizon.
Matrix chirp_signal(int T, double amplitude, double f0, double f1, int channels);

// CSV round trip: header "t,x1..xn,u1..um", one row per step, input cells
// blank on the last row.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_trajectory_csv_file(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& is);
Trajectory read_trajectory_csv_file(const std::string& path);

// Registry of named nonlinear built-ins (`bilinear2`).
NonlinearModel make_builtin_nonlinear(const std::string& name);

} // namespace causalid
