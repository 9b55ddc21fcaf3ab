#include "causalid/dynamics.hpp"
#include "causalid/sysid.hpp"

#include <doctest.h>

#include <random>

using namespace causalid;

namespace {

LtiModel test_plant(double sigma) {
    Matrix A(3, 3);
    A << 0.9, -0.75, 1.2,
         0.0,  0.9, -1.1,
         0.0,  0.0,  0.7;
    Matrix B(3, 3);
    B << 0.03, 0.0,  0.0,
         0.0,  0.06, 0.0,
         0.07, 0.0,  0.05;
    return LtiModel(A, B, Vector::Constant(3, sigma));
}

std::vector<Trajectory> rich_data(double sigma, std::uint64_t seed = 0) {
    LtiModel plant = test_plant(sigma);
    Matrix u = chirp_signal(3000, 1.0, 0.01, 0.2, 3);
    return {simulate(Plant(plant), Vector::Zero(3), u, seed)};
}

double training_ssr(const EstimatedModel& model, const std::vector<Trajectory>& data,
                    int target) {
    double ssr = 0.0;
    for (const Trajectory& traj : data) {
        for (int t = 0; t < traj.steps(); ++t) {
            const Vector pred = model.step_mean(traj.states.row(t).transpose(),
                                                traj.inputs.row(t).transpose());
            const double err = pred[target] - traj.states(t + 1, target);
            ssr += err * err;
        }
    }
    return ssr;
}

} // namespace

TEST_CASE("noiseless fit recovers the plant exactly") {
    const auto data = rich_data(0.0);
    EstimatedModel model = fit(data, FitOptions{});
    CHECK((model.linear_A() - test_plant(0).A()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((model.linear_B() - test_plant(0).B()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(model.noise_std_hat().maxCoeff() < 1e-9);
}

TEST_CASE("increment form recovers the same plant") {
    const auto data = rich_data(0.0);
    FitOptions opts;
    opts.increments = true;
    EstimatedModel model = fit(data, opts);
    CHECK((model.linear_A() - test_plant(0).A()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((model.linear_B() - test_plant(0).B()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("exclusions zero coefficients and keep sparse rows tight") {
    const auto data = rich_data(0.0);
    // True row 3 only uses x3, u1, u3; excluding x1 and x2 there must not
    // change its residual.
    ExclusionSet excl;
    excl.emplace(2, SourceRef{SourceRef::Kind::state, 0});
    excl.emplace(2, SourceRef{SourceRef::Kind::state, 1});
    EstimatedModel full = fit(data, FitOptions{});
    EstimatedModel restricted = fit(data, FitOptions{}, excl);

    CHECK(restricted.coefficient(2, 0) == 0.0);
    CHECK(restricted.coefficient(2, 1) == 0.0);
    CHECK(restricted.coefficient(2, 2) == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(training_ssr(restricted, data, 2) ==
          doctest::Approx(training_ssr(full, data, 2)).epsilon(1e-8));
}

TEST_CASE("refit equivalence: exclusion equals column deletion") {
    const auto data = rich_data(1e-4, 7);
    ExclusionSet excl;
    excl.emplace(1, SourceRef{SourceRef::Kind::input, 2});
    EstimatedModel excluded = fit(data, FitOptions{}, excl);

    // Rebuild the same regression with the u3 column literally removed.
    const Trajectory& traj = data.front();
    const int rows = traj.steps();
    Matrix Phi(rows, 5);
    Vector y(rows);
    for (int t = 0; t < rows; ++t) {
        Phi(t, 0) = traj.states(t, 0);
        Phi(t, 1) = traj.states(t, 1);
        Phi(t, 2) = traj.states(t, 2);
        Phi(t, 3) = traj.inputs(t, 0);
        Phi(t, 4) = traj.inputs(t, 1);
        y[t] = traj.states(t + 1, 1);
    }
    Vector beta = (Phi.transpose() * Phi).ldlt().solve(Phi.transpose() * y);
    for (int c = 0; c < 5; ++c) {
        CHECK(excluded.coefficient(1, c) == doctest::Approx(beta[c]).epsilon(1e-8));
    }
    CHECK(excluded.coefficient(1, 5) == 0.0);
}

TEST_CASE("OLS optimality: coefficient nudges do not reduce the residual") {
    const auto data = rich_data(1e-3, 3);
    EstimatedModel model = fit(data, FitOptions{});
    const double base = training_ssr(model, data, 0);
    for (int c = 0; c < model.regressor_count(); ++c) {
        for (double delta : {-1e-3, 1e-3}) {
            Matrix coef = model.coefficients();
            coef(0, c) += delta;
            EstimatedModel nudged(FitOptions{}, 3, 3, coef, model.noise_std_hat(), {});
            CHECK(training_ssr(nudged, data, 0) >= base);
        }
    }
}

TEST_CASE("rank deficiency names the dead columns") {
    // A constant trajectory has no excitation at all.
    Trajectory flat;
    flat.states = Matrix::Constant(40, 2, 1.0);
    flat.inputs = Matrix::Zero(39, 1);
    try {
        fit({flat}, FitOptions{});
        FAIL("expected rank-deficiency error");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("rank-deficient") != std::string::npos);
        CHECK(msg.find("u1") != std::string::npos);
    }
}

TEST_CASE("predict interpolates noiseless training data") {
    LtiModel plant(Matrix::Identity(1, 1), Matrix::Identity(1, 1), Vector::Zero(1));
    Matrix u = chirp_signal(500, 1.0, 0.05, 0.2, 1);
    Trajectory data = simulate(Plant(plant), Vector::Zero(1), u, 0);
    EstimatedModel model = fit({data}, FitOptions{});
    Trajectory pred = model.predict(Vector::Zero(1), u);
    CHECK((pred.states - data.states).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("zero-coefficient model predicts a constant") {
    EstimatedModel model(FitOptions{}, 2, 1, Matrix::Zero(2, 3), Vector::Zero(2), {});
    Vector x0(2);
    x0 << 3.0, -1.0;
    Trajectory pred = model.predict(x0, Matrix::Ones(10, 1));
    CHECK((pred.states.row(10).transpose() - Vector::Zero(2)).norm() == 0.0);

    FitOptions inc;
    inc.increments = true;
    EstimatedModel holder(inc, 2, 1, Matrix::Zero(2, 3), Vector::Zero(2), {});
    Trajectory held = holder.predict(x0, Matrix::Ones(10, 1));
    CHECK((held.states.row(10).transpose() - x0).norm() == 0.0);
}

TEST_CASE("sampled prediction is seed deterministic and uses sigma_hat") {
    const auto data = rich_data(1e-3, 5);
    EstimatedModel model = fit(data, FitOptions{});
    Vector x0 = Vector::Zero(3);
    Matrix u = Matrix::Zero(50, 3);
    Trajectory a = model.predict_sampled(x0, u, 11);
    Trajectory b = model.predict_sampled(x0, u, 11);
    CHECK(a.states == b.states);
    Trajectory quiet = model.predict(x0, u);
    CHECK((a.states - quiet.states).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("feature basis covers bilinear dynamics") {
    NonlinearModel truth = make_builtin_nonlinear("bilinear2");
    NonlinearModel quiet("bilinear2", [truth](const Vector& x, const Vector& u) {
        return truth.step(x, u);
    }, Vector::Zero(2), truth.state_bounds(), truth.input_bounds());
    Plant plant(quiet);

    std::vector<Trajectory> data;
    std::mt19937_64 eng(21);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int k = 0; k < 30; ++k) {
        Vector x0(2);
        x0 << unit(eng), unit(eng);
        Matrix u(40, 1);
        for (int t = 0; t < 40; ++t) u(t, 0) = 1.5 * unit(eng);
        Trajectory traj = simulate(plant, x0, u, 100 + k);
        if (traj.steps() > 0) data.push_back(traj);
    }
    FitOptions opts;
    opts.kind = ModelKind::feature_basis;
    EstimatedModel model = fit(data, opts);

    const auto names = model.regressor_names();
    int x1x2 = -1;
    for (size_t i = 0; i < names.size(); ++i) {
        if (names[i] == "x1*x2") x1x2 = static_cast<int>(i);
    }
    REQUIRE(x1x2 >= 0);
    CHECK(model.coefficient(0, x1x2) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(model.coefficient(1, 2) == doctest::Approx(1.0).epsilon(1e-6)); // x2 <- u
    CHECK(model.noise_std_hat().maxCoeff() < 1e-8);
}

TEST_CASE("model JSON round trip") {
    const auto data = rich_data(1e-4, 9);
    ExclusionSet excl;
    excl.emplace(0, SourceRef{SourceRef::Kind::state, 1});
    FitOptions opts;
    opts.increments = true;
    EstimatedModel model = fit(data, opts, excl);
    EstimatedModel back = EstimatedModel::from_json_string(model.to_json_string());
    CHECK(back.kind() == model.kind());
    CHECK(back.increments() == model.increments());
    CHECK((back.coefficients() - model.coefficients()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.noise_std_hat() - model.noise_std_hat()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.excluded() == model.excluded());
}

TEST_CASE("intercept flag absorbs a constant offset") {
    // x(t+1) = 0.5 x(t) + u(t) + 2, identifiable only with the intercept.
    Trajectory traj;
    const int T = 200;
    traj.states.resize(T + 1, 1);
    traj.inputs = chirp_signal(T, 1.0, 0.05, 0.2, 1);
    traj.states(0, 0) = 0.0;
    for (int t = 0; t < T; ++t) {
        traj.states(t + 1, 0) = 0.5 * traj.states(t, 0) + traj.inputs(t, 0) + 2.0;
    }
    FitOptions opts;
    opts.intercept = true;
    EstimatedModel model = fit({traj}, opts);
    CHECK(model.coefficient(0, 0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(model.coefficient(0, 1) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(model.coefficient(0, 2) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(model.regressor_names().back() == "1");
    CHECK(model.noise_std_hat()[0] < 1e-9);
    // Round trip keeps the flag.
    EstimatedModel back = EstimatedModel::from_json_string(model.to_json_string());
    CHECK(back.regressor_count() == 3);
    Trajectory pred = back.predict(Vector::Zero(1), traj.inputs);
    CHECK((pred.states - traj.states).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("fit rejects bad inputs") {
    CHECK_THROWS_AS(fit({}, FitOptions{}), std::invalid_argument);
    Trajectory tiny;
    tiny.states = Matrix::Ones(3, 3);
    tiny.inputs = Matrix::Ones(2, 3);
    CHECK_THROWS_AS(fit({tiny}, FitOptions{}), std::invalid_argument);
}
