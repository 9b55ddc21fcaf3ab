#pragma once

#include "causalid/dynamics.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace causalid {

enum class ModelKind { linear, feature_basis };

// A source variable of the system: a state component or an input channel.
struct SourceRef {
    enum class Kind { state, input };
    Kind kind = Kind::state;
    int index = 0;

    bool operator<(const SourceRef& o) const {
        return kind != o.kind ? kind < o.kind : index < o.index;
    }
    bool operator==(const SourceRef& o) const { return kind == o.kind && index == o.index; }
    std::string label() const;
};

// (target state i, excluded source) pairs. Excluding a source zeroes every
// regressor that involves it in the target's row.
using ExclusionSet = std::set<std::pair<int, SourceRef>>;

struct FitOptions {
    ModelKind kind = ModelKind::linear;
    // Regress x(t+1) - x(t) instead of x(t+1); the stored coefficients are
    // increment weights and the effective linear part is A = I + C_x.
    bool increments = false;
    // Append a constant regressor. Off by default: the systems are modeled
    // around zero.
    bool intercept = false;
    double ridge = 0.0;
};

// Black-box model \hat f fitted by per-state least squares.
class EstimatedModel {
public:
    EstimatedModel() = default;
    EstimatedModel(FitOptions opts, int n, int m, Matrix coef, Vector noise_std_hat,
                   ExclusionSet excluded);

    ModelKind kind() const { return opts_.kind; }
    bool increments() const { return opts_.increments; }
    int state_dim() const { return n_; }
    int input_dim() const { return m_; }
    int regressor_count() const { return static_cast<int>(coef_.cols()); }
    const Matrix& coefficients() const { return coef_; }
    const Vector& noise_std_hat() const { return noise_std_hat_; }
    const ExclusionSet& excluded() const { return excluded_; }

    double coefficient(int target, int regressor) const { return coef_(target, regressor); }
    std::vector<std::string> regressor_names() const;

    // Effective one-step linear part (only meaningful for kind linear; for
    // feature_basis this is the linear slice used by gain computation).
    Matrix linear_A() const;
    Matrix linear_B() const;

    Vector step_mean(const Vector& x, const Vector& u) const;
    Trajectory predict(const Vector& x0, const Matrix& inputs) const;
    Trajectory predict_sampled(const Vector& x0, const Matrix& inputs, std::uint64_t seed) const;

    std::string to_json_string() const;
    static EstimatedModel from_json_string(const std::string& text);

private:
    FitOptions opts_;
    int n_ = 0;
    int m_ = 0;
    Matrix coef_; // n x p
    Vector noise_std_hat_;
    ExclusionSet excluded_;
};

// Names and source-involvement of the regressors for a given model class.
std::vector<std::string> regressor_names(const FitOptions& opts, int n, int m);
int regressor_count(const FitOptions& opts, int n, int m);
// Regressor columns that involve the given source variable.
std::vector<int> regressors_involving(const FitOptions& opts, int n, int m,
                                      const SourceRef& src);

// Per-state ordinary least squares over all transitions in `data`.
// Throws on a rank-deficient regressor matrix, naming the deficient columns.
EstimatedModel fit(const std::vector<Trajectory>& data, const FitOptions& opts,
                   const ExclusionSet& excluded = {});

} // namespace causalid
