#include "causalid/dynamics.hpp"
#include "causalid/rng.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace causalid {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

} // namespace

Box::Box(Vector lo_, Vector hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    require(lo.size() == hi.size(), "box bounds must have equal dimension");
    require(lo.size() > 0, "box must be nonempty");
    for (int i = 0; i < lo.size(); ++i) {
        require(lo[i] <= hi[i], "box lower bound exceeds upper bound");
    }
}

bool Box::contains(const Vector& x) const {
    if (x.size() != lo.size()) return false;
    for (int i = 0; i < x.size(); ++i) {
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    }
    return true;
}

Vector Box::clamp(const Vector& x) const {
    Vector y = x;
    for (int i = 0; i < y.size(); ++i) {
        y[i] = std::min(std::max(y[i], lo[i]), hi[i]);
    }
    return y;
}

LtiModel::LtiModel(Matrix A, Matrix B, Vector noise_std)
    : A_(std::move(A)), B_(std::move(B)), noise_std_(std::move(noise_std)) {
    require(A_.rows() == A_.cols(), "A must be square");
    require(B_.rows() == A_.rows(), "B must have as many rows as A");
    require(noise_std_.size() == A_.rows(), "noise_std must have one entry per state");
    require(all_finite(A_) && all_finite(B_) && noise_std_.allFinite(),
            "model matrices must be finite");
    for (int i = 0; i < noise_std_.size(); ++i) {
        require(noise_std_[i] >= 0.0, "noise_std entries must be nonnegative");
    }
}

NonlinearModel::NonlinearModel(std::string name, TransitionFn transition, Vector noise_std,
                               Box state_bounds, Box input_bounds)
    : name_(std::move(name)),
      transition_(std::move(transition)),
      noise_std_(std::move(noise_std)),
      state_bounds_(std::move(state_bounds)),
      input_bounds_(std::move(input_bounds)) {
    require(static_cast<bool>(transition_), "transition map required");
    require(noise_std_.size() == state_bounds_.dim(),
            "noise_std dimension must match state bounds");
    for (int i = 0; i < noise_std_.size(); ++i) {
        require(noise_std_[i] >= 0.0, "noise_std entries must be nonnegative");
    }
}

int Plant::state_dim() const {
    return is_lti() ? lti().state_dim() : nonlinear().state_dim();
}

int Plant::input_dim() const {
    return is_lti() ? lti().input_dim() : nonlinear().input_dim();
}

const Vector& Plant::noise_std() const {
    return is_lti() ? lti().noise_std() : nonlinear().noise_std();
}

const Box* Plant::state_bounds() const {
    return is_lti() ? nullptr : &nonlinear().state_bounds();
}

const Box* Plant::input_bounds() const {
    return is_lti() ? nullptr : &nonlinear().input_bounds();
}

Vector Plant::step_mean(const Vector& x, const Vector& u) const {
    return is_lti() ? lti().step(x, u) : nonlinear().step(x, u);
}

Trajectory simulate(const Plant& plant, const Vector& x0, const Matrix& inputs,
                    std::uint64_t rng_seed) {
    const int n = plant.state_dim();
    const int m = plant.input_dim();
    require(x0.size() == n, "x0 dimension mismatch");
    require(inputs.cols() == m, "input dimension mismatch");
    require(x0.allFinite() && all_finite(inputs), "simulate requires finite arguments");

    const Box* xbox = plant.state_bounds();
    const Box* ubox = plant.input_bounds();
    if (xbox) require(xbox->contains(x0), "x0 outside state bounds");
    if (ubox) {
        for (int t = 0; t < inputs.rows(); ++t) {
            require(ubox->contains(inputs.row(t).transpose()), "input outside input bounds");
        }
    }

    const int T = static_cast<int>(inputs.rows());
    const Vector& sigma = plant.noise_std();
    GaussianStream g(rng_seed);

    Matrix states(T + 1, n);
    states.row(0) = x0.transpose();
    Vector x = x0;
    int done = 0;
    bool truncated = false;
    for (int t = 0; t < T; ++t) {
        Vector next = plant.step_mean(x, inputs.row(t).transpose());
        for (int i = 0; i < n; ++i) {
            if (sigma[i] > 0.0) next[i] += sigma[i] * g.next();
        }
        if (!next.allFinite() || (xbox && !xbox->contains(next))) {
            truncated = true;
            break;
        }
        x = next;
        states.row(t + 1) = x.transpose();
        done = t + 1;
    }

    Trajectory traj;
    traj.states = states.topRows(done + 1);
    traj.inputs = inputs.topRows(done);
    traj.truncated = truncated;
    return traj;
}

Trajectory mean_trajectory(const LtiModel& model, const Vector& x0, const Matrix& inputs) {
    Plant p(LtiModel(model.A(), model.B(), Vector::Zero(model.state_dim())));
    return simulate(p, x0, inputs, 0);
}

Matrix chirp_signal(int T, double amplitude, double f0, double f1, int channels) {
    require(T >= 1, "chirp needs T >= 1");
    require(channels >= 1, "chirp needs at least one channel");
    require(f0 > 0.0 && f0 < 0.5 && f1 > 0.0 && f1 < 0.5,
            "chirp frequencies must lie in (0, 0.5) cycles/step");

    constexpr double two_pi = 6.283185307179586476925286766559;
    Matrix u(T, channels);
    for (int j = 0; j < channels; ++j) {
        // Stagger the sweep start per channel; a pure phase shift keeps all
        // channels in the 2-D span of one sweep and the block loses rank.
        const double f0j = f0 + (f1 - f0) * static_cast<double>(j) / (2.0 * channels);
        const double df = f1 - f0j;
        const double phase0 = two_pi * static_cast<double>(j) / channels;
        for (int t = 0; t < T; ++t) {
            const double tt = static_cast<double>(t);
            const double phase = two_pi * (f0j * tt + 0.5 * df * tt * tt / T) + phase0;
            u(t, j) = amplitude * std::sin(phase);
        }
    }
    return u;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    const int n = traj.state_dim();
    const int m = traj.input_dim();
    os << "t";
    for (int i = 0; i < n; ++i) os << ",x" << (i + 1);
    for (int j = 0; j < m; ++j) os << ",u" << (j + 1);
    os << "\n";
    os << std::setprecision(17);
    for (int t = 0; t < traj.states.rows(); ++t) {
        os << t;
        for (int i = 0; i < n; ++i) os << "," << traj.states(t, i);
        for (int j = 0; j < m; ++j) {
            os << ",";
            if (t < traj.inputs.rows()) os << traj.inputs(t, j);
        }
        os << "\n";
    }
}

void write_trajectory_csv_file(const std::string& path, const Trajectory& traj) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_trajectory_csv(os, traj);
}

Trajectory read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty trajectory CSV");

    int n = 0, m = 0;
    {
        std::stringstream header(line);
        std::string cell;
        std::getline(header, cell, ',');
        if (cell != "t") throw std::runtime_error("trajectory CSV must start with 't' column");
        while (std::getline(header, cell, ',')) {
            if (!cell.empty() && cell[0] == 'x') ++n;
            else if (!cell.empty() && cell[0] == 'u') ++m;
            else throw std::runtime_error("unexpected trajectory CSV column: " + cell);
        }
    }
    if (n == 0) throw std::runtime_error("trajectory CSV has no state columns");

    std::vector<Vector> xs;
    std::vector<Vector> us;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        Vector x(n), u(m);
        for (int i = 0; i < n; ++i) {
            if (!std::getline(row, cell, ',')) throw std::runtime_error("short CSV row");
            x[i] = std::stod(cell);
        }
        bool has_input = m > 0;
        for (int j = 0; j < m; ++j) {
            if (!std::getline(row, cell, ',')) cell.clear();
            if (cell.empty()) { has_input = false; break; }
            u[j] = std::stod(cell);
        }
        xs.push_back(x);
        if (has_input) us.push_back(u);
    }
    if (xs.size() != us.size() + 1) {
        throw std::runtime_error("trajectory CSV must have inputs on all rows but the last");
    }

    Trajectory traj;
    traj.states.resize(static_cast<int>(xs.size()), n);
    traj.inputs.resize(static_cast<int>(us.size()), m);
    for (size_t t = 0; t < xs.size(); ++t) traj.states.row(static_cast<int>(t)) = xs[t];
    for (size_t t = 0; t < us.size(); ++t) traj.inputs.row(static_cast<int>(t)) = us[t];
    return traj;
}

Trajectory read_trajectory_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_trajectory_csv(is);
}

NonlinearModel make_builtin_nonlinear(const std::string& name) {
    if (name == "bilinear2") {
        // x1(t+1) = x1(t) x2(t), x2(t+1) = u(t). From x1(0)=0 the first
        // component stays 0 for any x2(0) and input.
        auto f = [](const Vector& x, const Vector& u) {
            Vector next(2);
            next[0] = x[0] * x[1];
            next[1] = u[0];
            return next;
        };
        Vector sigma(2);
        sigma << 1e-3, 1e-3;
        Box xbox{Vector::Constant(2, -2.0), Vector::Constant(2, 2.0)};
        Box ubox{Vector::Constant(1, -2.0), Vector::Constant(1, 2.0)};
        return NonlinearModel("bilinear2", f, sigma, xbox, ubox);
    }
    throw std::invalid_argument("unknown built-in nonlinear model: " + name);
}

} // namespace causalid
