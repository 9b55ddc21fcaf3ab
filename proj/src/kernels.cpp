#include "causalid/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace causalid {

SampleSet embed(const TrajectoryBatch& batch, int component, bool subtract_initial) {
    if (batch.runs.empty()) throw std::invalid_argument("embed: empty batch");
    const int n = batch.runs.front().state_dim();
    if (component < 0 || component >= n) {
        throw std::out_of_range("embed: state component index out of range");
    }
    const int rows = static_cast<int>(batch.runs.front().states.rows());
    SampleSet set;
    set.samples.resize(batch.size(), rows);
    for (int r = 0; r < batch.size(); ++r) {
        const Trajectory& traj = batch.runs[static_cast<size_t>(r)];
        if (traj.states.rows() != rows || traj.state_dim() != n) {
            throw std::invalid_argument("embed: runs must share dimensions");
        }
        Eigen::VectorXd v = traj.states.col(component);
        if (subtract_initial) v.array() -= v[0];
        set.samples.row(r) = v.transpose();
    }
    return set;
}

double gaussian_kernel(const Vector& a, const Vector& b, const KernelConfig& cfg) {
    if (a.size() != b.size()) throw std::invalid_argument("gaussian_kernel: dimension mismatch");
    if (!(cfg.lengthscale > 0.0) || !std::isfinite(cfg.lengthscale)) {
        throw std::invalid_argument("gaussian_kernel: lengthscale must be finite and positive");
    }
    const double d2 = (a - b).squaredNorm();
    return std::exp(-d2 / (2.0 * cfg.lengthscale * cfg.lengthscale));
}

double mmd2_unbiased(const SampleSet& X, const SampleSet& Y, const KernelConfig& cfg) {
    const int m = X.size();
    if (m < 2) throw std::invalid_argument("mmd2_unbiased: need at least two samples");
    if (Y.size() != m) throw std::invalid_argument("mmd2_unbiased: sample counts must match");
    if (X.dim() != Y.dim()) throw std::invalid_argument("mmd2_unbiased: sample dims must match");

    const double inv_two_l2 = 1.0 / (2.0 * cfg.lengthscale * cfg.lengthscale);
    auto k = [&](const auto& a, const auto& b) {
        return std::exp(-(a - b).squaredNorm() * inv_two_l2);
    };

    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            acc += k(X.samples.row(i), X.samples.row(j));
            acc += k(Y.samples.row(i), Y.samples.row(j));
            acc -= k(X.samples.row(i), Y.samples.row(j));
            acc -= k(X.samples.row(j), Y.samples.row(i));
        }
    }
    return acc / (static_cast<double>(m) * (m - 1));
}

} // namespace causalid
