#include "causalid/control.hpp"
#include "causalid/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <stdexcept>

namespace causalid {

namespace {

double spectral_radius(const Matrix& M) {
    return M.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace

ControllabilityResult controllability_rank(const Matrix& A, const Matrix& B) {
    const int n = static_cast<int>(A.rows());
    const int m = static_cast<int>(B.cols());
    Matrix C(n, n * m);
    Matrix Ak = Matrix::Identity(n, n);
    for (int k = 0; k < n; ++k) {
        C.middleCols(k * m, m) = Ak * B;
        Ak = A * Ak;
    }
    Eigen::JacobiSVD<Matrix> svd(C);
    const auto& sv = svd.singularValues();
    const double thresh = n * sv.maxCoeff() * 1e-12;
    ControllabilityResult res;
    for (int i = 0; i < sv.size(); ++i) {
        if (sv[i] > thresh) ++res.rank;
    }
    res.controllable = res.rank == n;
    return res;
}

ControllabilityResult controllability_rank(const LtiModel& model) {
    return controllability_rank(model.A(), model.B());
}

ControllabilityResult controllability_rank(const EstimatedModel& model) {
    return controllability_rank(model.linear_A(), model.linear_B());
}

Matrix lqr_gain(const Matrix& A, const Matrix& B, const SteeringConfig& cfg) {
    const int n = static_cast<int>(A.rows());
    const int m = static_cast<int>(B.cols());
    if (!controllability_rank(A, B).controllable) {
        throw std::runtime_error("lqr_gain: (A, B) is not controllable");
    }
    const Matrix Q = cfg.Q.size() > 0 ? cfg.Q : cfg.q_scale * Matrix::Identity(n, n);
    const Matrix R = cfg.R.size() > 0 ? cfg.R : Matrix::Identity(m, m);

    Matrix P = Q;
    bool converged = false;
    for (int it = 0; it < cfg.riccati_max_iter; ++it) {
        const Matrix BtP = B.transpose() * P;
        const Matrix G = (R + BtP * B).ldlt().solve(BtP * A);
        const Matrix P_next = A.transpose() * P * A - A.transpose() * P * B * G + Q;
        const double diff = (P_next - P).cwiseAbs().maxCoeff();
        P = P_next;
        if (diff < cfg.riccati_tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw std::runtime_error("lqr_gain: Riccati iteration did not converge");
    }
    const Matrix BtP = B.transpose() * P;
    const Matrix F = -(R + BtP * B).ldlt().solve(BtP * A);
    if (spectral_radius(A + B * F) >= 1.0) {
        throw std::runtime_error("lqr_gain: closed loop is not stable");
    }
    return F;
}

Matrix lqr_gain(const EstimatedModel& model, const SteeringConfig& cfg) {
    return lqr_gain(model.linear_A(), model.linear_B(), cfg);
}

Matrix feedforward_gain(const Matrix& A, const Matrix& B, const Matrix& F, double* residual) {
    const int n = static_cast<int>(A.rows());
    const Matrix Acl = A + B * F;
    const Matrix IA = Matrix::Identity(n, n) - Acl;
    Eigen::FullPivLU<Matrix> lu(IA);
    if (!lu.isInvertible()) throw std::runtime_error("feedforward_gain: I - A_cl is singular");
    const Matrix X = lu.solve(B); // n x m

    Matrix M;
    if (X.rows() == X.cols()) {
        Eigen::FullPivLU<Matrix> lux(X);
        if (!lux.isInvertible()) {
            throw std::runtime_error("feedforward_gain: (I - A_cl)^{-1} B is singular");
        }
        M = lux.inverse();
    } else {
        M = X.completeOrthogonalDecomposition().pseudoInverse();
    }
    if (residual) *residual = (X * M - Matrix::Identity(n, n)).norm();
    return M;
}

SteeringGains compute_steering_gains(const EstimatedModel& model, const SteeringConfig& cfg) {
    SteeringGains gains;
    const Matrix A = model.linear_A();
    const Matrix B = model.linear_B();
    gains.F = lqr_gain(A, B, cfg);
    gains.M = feedforward_gain(A, B, gains.F, &gains.feedforward_residual);
    return gains;
}

SteeringRun steer_with_gains(const Plant& plant, const Vector& start, const Vector& x_des,
                             const SteeringGains& gains, const SteeringConfig& cfg,
                             std::uint64_t seed, int forced_steps) {
    const int n = plant.state_dim();
    if (start.size() != n || x_des.size() != n) {
        throw std::invalid_argument("steer: dimension mismatch");
    }
    const Box* ubox = plant.input_bounds();
    const Vector& sigma = plant.noise_std();
    GaussianStream g(seed);

    const int cap = forced_steps >= 0 ? forced_steps : cfg.max_steps;
    std::vector<Vector> xs{start};
    std::vector<Vector> us;
    Vector x = start;
    bool arrived = false;
    int t = 0;
    for (; t < cap; ++t) {
        if (forced_steps < 0 && (x - x_des).norm() < cfg.arrival_tol) {
            arrived = true;
            break;
        }
        Vector u = gains.M * x_des + gains.F * x;
        if (ubox) u = ubox->clamp(u);
        Vector next = plant.step_mean(x, u);
        for (int i = 0; i < n; ++i) {
            if (sigma[i] > 0.0) next[i] += sigma[i] * g.next();
        }
        const Box* xbox = plant.state_bounds();
        if (!next.allFinite() || (xbox && !xbox->contains(next))) break;
        x = next;
        us.push_back(u);
        xs.push_back(x);
    }
    if (forced_steps >= 0) {
        arrived = (x - x_des).norm() < cfg.arrival_tol;
    } else if (!arrived) {
        arrived = (x - x_des).norm() < cfg.arrival_tol;
    }

    SteeringRun run;
    run.arrived = arrived;
    run.steps = static_cast<int>(us.size());
    run.traj.states.resize(static_cast<int>(xs.size()), n);
    run.traj.inputs.resize(static_cast<int>(us.size()), plant.input_dim());
    for (size_t i = 0; i < xs.size(); ++i) run.traj.states.row(static_cast<int>(i)) = xs[i];
    for (size_t i = 0; i < us.size(); ++i) run.traj.inputs.row(static_cast<int>(i)) = us[i];
    return run;
}

SteeringRun steer_to(const Plant& plant, const EstimatedModel& model, const Vector& x_des,
                     const SteeringConfig& cfg, std::uint64_t seed) {
    const SteeringGains gains = compute_steering_gains(model, cfg);
    // Start from the plant's origin when used standalone.
    return steer_with_gains(plant, Vector::Zero(plant.state_dim()), x_des, gains, cfg, seed);
}

} // namespace causalid
