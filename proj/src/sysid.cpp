#include "causalid/sysid.hpp"
#include "causalid/rng.hpp"

#include <nlohmann/json.hpp>

#include <sstream>
#include <stdexcept>

namespace causalid {

using nlohmann::json;

std::string SourceRef::label() const {
    return (kind == Kind::state ? "x" : "u") + std::to_string(index + 1);
}

std::vector<std::string> regressor_names(const FitOptions& opts, int n, int m) {
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
    for (int j = 0; j < m; ++j) names.push_back("u" + std::to_string(j + 1));
    if (opts.kind == ModelKind::feature_basis) {
        const int d = n + m;
        auto var = [&](int a) { return names[static_cast<size_t>(a)]; };
        for (int a = 0; a < d; ++a) {
            for (int b = a; b < d; ++b) {
                names.push_back(var(a) + "*" + var(b));
            }
        }
    }
    if (opts.intercept) names.push_back("1");
    return names;
}

int regressor_count(const FitOptions& opts, int n, int m) {
    const int d = n + m;
    int p = opts.kind == ModelKind::linear ? d : d + d * (d + 1) / 2;
    if (opts.intercept) ++p;
    return p;
}

std::vector<int> regressors_involving(const FitOptions& opts, int n, int m,
                                      const SourceRef& src) {
    const int d = n + m;
    const int flat = src.kind == SourceRef::Kind::state ? src.index : n + src.index;
    std::vector<int> cols{flat};
    if (opts.kind == ModelKind::feature_basis) {
        int col = d;
        for (int a = 0; a < d; ++a) {
            for (int b = a; b < d; ++b, ++col) {
                if (a == flat || b == flat) cols.push_back(col);
            }
        }
    }
    return cols;
}

namespace {

// z = (x, u) -> regressor row.
void fill_regressors(const FitOptions& opts, const Vector& x, const Vector& u,
                     Eigen::RowVectorXd& row) {
    const int n = static_cast<int>(x.size());
    const int m = static_cast<int>(u.size());
    const int d = n + m;
    for (int i = 0; i < n; ++i) row[i] = x[i];
    for (int j = 0; j < m; ++j) row[n + j] = u[j];
    int col = d;
    if (opts.kind == ModelKind::feature_basis) {
        auto z = [&](int a) { return a < n ? x[a] : u[a - n]; };
        for (int a = 0; a < d; ++a) {
            for (int b = a; b < d; ++b, ++col) {
                row[col] = z(a) * z(b);
            }
        }
    }
    if (opts.intercept) row[col] = 1.0;
}

} // namespace

EstimatedModel::EstimatedModel(FitOptions opts, int n, int m, Matrix coef, Vector noise_std_hat,
                               ExclusionSet excluded)
    : opts_(opts),
      n_(n),
      m_(m),
      coef_(std::move(coef)),
      noise_std_hat_(std::move(noise_std_hat)),
      excluded_(std::move(excluded)) {
    if (coef_.rows() != n_ || coef_.cols() != causalid::regressor_count(opts_, n_, m_)) {
        throw std::invalid_argument("EstimatedModel: coefficient shape mismatch");
    }
    for (const auto& [target, src] : excluded_) {
        for (int col : regressors_involving(opts_, n_, m_, src)) {
            if (coef_(target, col) != 0.0) {
                throw std::invalid_argument("EstimatedModel: excluded coefficient must be zero");
            }
        }
    }
}

std::vector<std::string> EstimatedModel::regressor_names() const {
    return causalid::regressor_names(opts_, n_, m_);
}

Matrix EstimatedModel::linear_A() const {
    Matrix A = coef_.leftCols(n_);
    if (opts_.increments) A += Matrix::Identity(n_, n_);
    return A;
}

Matrix EstimatedModel::linear_B() const { return coef_.middleCols(n_, m_); }

Vector EstimatedModel::step_mean(const Vector& x, const Vector& u) const {
    Eigen::RowVectorXd row(causalid::regressor_count(opts_, n_, m_));
    fill_regressors(opts_, x, u, row);
    Vector next = coef_ * row.transpose();
    if (opts_.increments) next += x;
    return next;
}

Trajectory EstimatedModel::predict(const Vector& x0, const Matrix& inputs) const {
    if (x0.size() != n_ || inputs.cols() != m_) {
        throw std::invalid_argument("predict: dimension mismatch");
    }
    const int T = static_cast<int>(inputs.rows());
    Trajectory traj;
    traj.states.resize(T + 1, n_);
    traj.inputs = inputs;
    traj.states.row(0) = x0.transpose();
    Vector x = x0;
    for (int t = 0; t < T; ++t) {
        x = step_mean(x, inputs.row(t).transpose());
        traj.states.row(t + 1) = x.transpose();
    }
    return traj;
}

Trajectory EstimatedModel::predict_sampled(const Vector& x0, const Matrix& inputs,
                                           std::uint64_t seed) const {
    if (x0.size() != n_ || inputs.cols() != m_) {
        throw std::invalid_argument("predict: dimension mismatch");
    }
    const int T = static_cast<int>(inputs.rows());
    GaussianStream g(seed);
    Trajectory traj;
    traj.states.resize(T + 1, n_);
    traj.inputs = inputs;
    traj.states.row(0) = x0.transpose();
    Vector x = x0;
    for (int t = 0; t < T; ++t) {
        x = step_mean(x, inputs.row(t).transpose());
        for (int i = 0; i < n_; ++i) {
            if (noise_std_hat_[i] > 0.0) x[i] += noise_std_hat_[i] * g.next();
        }
        traj.states.row(t + 1) = x.transpose();
    }
    return traj;
}

EstimatedModel fit(const std::vector<Trajectory>& data, const FitOptions& opts,
                   const ExclusionSet& excluded) {
    if (data.empty()) throw std::invalid_argument("fit: no data");
    const int n = data.front().state_dim();
    const int m = data.front().input_dim();
    const int p = regressor_count(opts, n, m);

    int rows = 0;
    for (const auto& traj : data) {
        if (traj.state_dim() != n || traj.input_dim() != m) {
            throw std::invalid_argument("fit: trajectories must share dimensions");
        }
        rows += traj.steps();
    }
    if (rows < p) throw std::invalid_argument("fit: fewer transitions than regressors");

    Matrix Phi(rows, p);
    Matrix Y(rows, n);
    Eigen::RowVectorXd reg_row(p);
    int r = 0;
    for (const auto& traj : data) {
        for (int t = 0; t < traj.steps(); ++t, ++r) {
            const Vector x = traj.states.row(t).transpose();
            const Vector u = traj.inputs.row(t).transpose();
            fill_regressors(opts, x, u, reg_row);
            Phi.row(r) = reg_row;
            Y.row(r) = traj.states.row(t + 1);
            if (opts.increments) Y.row(r) -= traj.states.row(t);
        }
    }
    if (!Phi.allFinite() || !Y.allFinite()) throw std::invalid_argument("fit: data must be finite");

    const auto names = regressor_names(opts, n, m);
    Matrix coef = Matrix::Zero(n, p);
    Vector sigma_hat(n);

    for (int i = 0; i < n; ++i) {
        // Columns kept for this target row.
        std::vector<bool> drop(static_cast<size_t>(p), false);
        for (const auto& [target, src] : excluded) {
            if (target != i) continue;
            for (int col : regressors_involving(opts, n, m, src)) {
                drop[static_cast<size_t>(col)] = true;
            }
        }
        std::vector<int> keep;
        for (int c = 0; c < p; ++c) {
            if (!drop[static_cast<size_t>(c)]) keep.push_back(c);
        }
        const int pi = static_cast<int>(keep.size());

        Matrix Phi_i(rows, pi);
        for (int c = 0; c < pi; ++c) Phi_i.col(c) = Phi.col(keep[static_cast<size_t>(c)]);

        if (pi == 0) {
            // Every regressor excluded: the restricted row predicts nothing
            // but its own residual spread.
            sigma_hat[i] = std::sqrt(Y.col(i).squaredNorm() / rows);
            continue;
        }

        Vector beta;
        if (opts.ridge > 0.0) {
            Matrix G = Phi_i.transpose() * Phi_i + opts.ridge * Matrix::Identity(pi, pi);
            beta = G.ldlt().solve(Phi_i.transpose() * Y.col(i));
        } else {
            Eigen::ColPivHouseholderQR<Matrix> qr(Phi_i);
            qr.setThreshold(1e-10);
            if (qr.rank() < pi) {
                std::ostringstream msg;
                msg << "fit: rank-deficient regressor matrix for target x" << (i + 1)
                    << "; deficient columns:";
                const auto perm = qr.colsPermutation().indices();
                for (int c = qr.rank(); c < pi; ++c) {
                    msg << " " << names[static_cast<size_t>(keep[static_cast<size_t>(perm[c])])];
                }
                throw std::runtime_error(msg.str());
            }
            beta = qr.solve(Y.col(i));
        }

        for (int c = 0; c < pi; ++c) coef(i, keep[static_cast<size_t>(c)]) = beta[c];
        const double ssr = (Y.col(i) - Phi_i * beta).squaredNorm();
        const int dof = rows - pi;
        sigma_hat[i] = dof > 0 ? std::sqrt(ssr / dof) : 0.0;
    }

    return EstimatedModel(opts, n, m, std::move(coef), std::move(sigma_hat), excluded);
}

std::string EstimatedModel::to_json_string() const {
    json j;
    j["kind"] = opts_.kind == ModelKind::linear ? "linear" : "feature_basis";
    j["increments"] = opts_.increments;
    j["intercept"] = opts_.intercept;
    j["ridge"] = opts_.ridge;
    j["state_dim"] = n_;
    j["input_dim"] = m_;
    j["regressors"] = regressor_names();
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < n_; ++i) {
        rows.emplace_back(coef_.row(i).begin(), coef_.row(i).end());
    }
    j["coefficients"] = rows;
    j["noise_std_hat"] = std::vector<double>(noise_std_hat_.begin(), noise_std_hat_.end());
    json ex = json::array();
    for (const auto& [target, src] : excluded_) {
        ex.push_back({{"target", target},
                      {"source_kind", src.kind == SourceRef::Kind::state ? "state" : "input"},
                      {"source_index", src.index}});
    }
    j["excluded"] = ex;
    return j.dump(2);
}

EstimatedModel EstimatedModel::from_json_string(const std::string& text) {
    json j = json::parse(text);
    FitOptions opts;
    opts.kind = j.at("kind").get<std::string>() == "linear" ? ModelKind::linear
                                                            : ModelKind::feature_basis;
    opts.increments = j.at("increments").get<bool>();
    opts.intercept = j.value("intercept", false);
    opts.ridge = j.value("ridge", 0.0);
    const int n = j.at("state_dim").get<int>();
    const int m = j.at("input_dim").get<int>();
    const auto rows = j.at("coefficients").get<std::vector<std::vector<double>>>();
    Matrix coef(n, causalid::regressor_count(opts, n, m));
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[static_cast<size_t>(i)].size()) != coef.cols()) {
            throw std::runtime_error("model JSON: coefficient row length mismatch");
        }
        for (int c = 0; c < coef.cols(); ++c) {
            coef(i, c) = rows[static_cast<size_t>(i)][static_cast<size_t>(c)];
        }
    }
    const auto sig = j.at("noise_std_hat").get<std::vector<double>>();
    Vector sigma = Eigen::Map<const Vector>(sig.data(), static_cast<int>(sig.size()));
    ExclusionSet excluded;
    for (const auto& e : j.at("excluded")) {
        SourceRef src;
        src.kind = e.at("source_kind").get<std::string>() == "state" ? SourceRef::Kind::state
                                                                     : SourceRef::Kind::input;
        src.index = e.at("source_index").get<int>();
        excluded.emplace(e.at("target").get<int>(), src);
    }
    return EstimatedModel(opts, n, m, std::move(coef), std::move(sigma), std::move(excluded));
}

} // namespace causalid
