#include "causalid.h"

#include "causalid/dynamics.hpp"
#include "causalid/control.hpp"
#include "causalid/kernels.hpp"
#include "causalid/report.hpp"

#include <cstring>
#include <mutex>
#include <set>
#include <string>

namespace {

thread_local std::string g_last_error;

// Live handles, so stale pointers are rejected instead of dereferenced.
std::set<causalid_model*> g_models;
std::mutex g_models_mutex;

void set_error(const std::string& msg) { g_last_error = msg; }

bool valid_handle(const causalid_model* model) {
    std::lock_guard<std::mutex> lock(g_models_mutex);
    return g_models.count(const_cast<causalid_model*>(model)) > 0;
}

} // namespace

struct causalid_model {
    causalid::Plant plant;
};

extern "C" {

void causalid_version(int* major, int* minor, int* patch) {
    if (major) *major = 0;
    if (minor) *minor = 1;
    if (patch) *patch = 0;
}

const char* causalid_status_message(causalid_status status) {
    switch (status) {
        case CAUSALID_OK: return "ok";
        case CAUSALID_ERR_INVALID_ARGUMENT: return "invalid argument";
        case CAUSALID_ERR_INVALID_HANDLE: return "invalid handle";
        case CAUSALID_ERR_DIMENSION: return "dimension mismatch";
        case CAUSALID_ERR_RUNTIME: return "runtime error";
        default: return "unknown status";
    }
}

const char* causalid_last_error(void) { return g_last_error.c_str(); }

causalid_status causalid_lti_create(const double* A, const double* B, const double* noise_std,
                                    int32_t n, int32_t m, causalid_model** out) {
    if (!A || !B || !noise_std || !out || n < 1 || m < 1) {
        set_error("lti_create: null buffer or non-positive dimension");
        return CAUSALID_ERR_INVALID_ARGUMENT;
    }
    *out = nullptr;
    try {
        causalid::Matrix Am(n, n), Bm(n, m);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) Am(i, j) = A[i * n + j];
            for (int j = 0; j < m; ++j) Bm(i, j) = B[i * m + j];
        }
        causalid::Vector sigma(n);
        for (int i = 0; i < n; ++i) sigma[i] = noise_std[i];
        auto* handle = new causalid_model{causalid::Plant(
            causalid::LtiModel(std::move(Am), std::move(Bm), std::move(sigma)))};
        {
            std::lock_guard<std::mutex> lock(g_models_mutex);
            g_models.insert(handle);
        }
        *out = handle;
        return CAUSALID_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return CAUSALID_ERR_INVALID_ARGUMENT;
    }
}

causalid_status causalid_builtin_create(const char* name, causalid_model** out) {
    if (!name || !out) {
        set_error("builtin_create: null argument");
        return CAUSALID_ERR_INVALID_ARGUMENT;
    }
    *out = nullptr;
    try {
        auto* handle =
            new causalid_model{causalid::Plant(causalid::make_builtin_nonlinear(name))};
        {
            std::lock_guard<std::mutex> lock(g_models_mutex);
            g_models.insert(handle);
        }
        *out = handle;
        return CAUSALID_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return CAUSALID_ERR_INVALID_ARGUMENT;
    }
}

void causalid_model_free(causalid_model* model) {
    if (!model) return;
    {
        std::lock_guard<std::mutex> lock(g_models_mutex);
        if (g_models.erase(model) == 0) return;
    }
    delete model;
}

causalid_status causalid_model_dims(const causalid_model* model, int32_t* state_dim,
                                    int32_t* input_dim) {
    if (!model || !valid_handle(model)) {
        set_error("model_dims: invalid handle");
        return CAUSALID_ERR_INVALID_HANDLE;
    }
    if (state_dim) *state_dim = model->plant.state_dim();
    if (input_dim) *input_dim = model->plant.input_dim();
    return CAUSALID_OK;
}

causalid_status causalid_simulate(const causalid_model* model, const double* x0,
                                  const double* inputs, int32_t T, uint64_t seed,
                                  double* states_out, int32_t* steps_done) {
    if (!model || !valid_handle(model)) {
        set_error("simulate: invalid handle");
        return CAUSALID_ERR_INVALID_HANDLE;
    }
    if (!x0 || !inputs || !states_out || T < 0) {
        set_error("simulate: null buffer or negative horizon");
        return CAUSALID_ERR_INVALID_ARGUMENT;
    }
    const int n = model->plant.state_dim();
    const int m = model->plant.input_dim();
    try {
        causalid::Vector x(n);
        for (int i = 0; i < n; ++i) x[i] = x0[i];
        causalid::Matrix u(T, m);
        for (int t = 0; t < T; ++t) {
            for (int j = 0; j < m; ++j) u(t, j) = inputs[t * m + j];
        }
        const causalid::Trajectory traj = causalid::simulate(model->plant, x, u, seed);
        for (int t = 0; t < traj.states.rows(); ++t) {
            for (int i = 0; i < n; ++i) states_out[t * n + i] = traj.states(t, i);
        }
        if (steps_done) *steps_done = traj.steps();
        return CAUSALID_OK;
    } catch (const std::invalid_argument& e) {
        set_error(e.what());
        return CAUSALID_ERR_DIMENSION;
    } catch (const std::exception& e) {
        set_error(e.what());
        return CAUSALID_ERR_RUNTIME;
    }
}

causalid_status causalid_chirp(int32_t T, double amplitude, double f0, double f1,
                               int32_t channels, double* out) {
    if (!out) {
        set_error("chirp: null output buffer");
        return CAUSALID_ERR_INVALID_ARGUMENT;
    }
    try {
        const causalid::Matrix u = causalid::chirp_signal(T, amplitude, f0, f1, channels);
        for (int t = 0; t < T; ++t) {
            for (int j = 0; j < channels; ++j) out[t * channels + j] = u(t, j);
        }
        return CAUSALID_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return CAUSALID_ERR_INVALID_ARGUMENT;
    }
}

causalid_status causalid_mmd2_unbiased(const double* X, const double* Y, int32_t m, int32_t d,
                                       double lengthscale, double* out) {
    if (!X || !Y || !out || m < 2 || d < 1) {
        set_error("mmd2_unbiased: null buffer, m < 2, or d < 1");
        return CAUSALID_ERR_INVALID_ARGUMENT;
    }
    try {
        causalid::SampleSet sx, sy;
        sx.samples.resize(m, d);
        sy.samples.resize(m, d);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < d; ++j) {
                sx.samples(i, j) = X[i * d + j];
                sy.samples(i, j) = Y[i * d + j];
            }
        }
        causalid::KernelConfig cfg;
        cfg.lengthscale = lengthscale;
        *out = causalid::mmd2_unbiased(sx, sy, cfg);
        return CAUSALID_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return CAUSALID_ERR_INVALID_ARGUMENT;
    }
}

causalid_status causalid_controllability_rank(const double* A, const double* B, int32_t n,
                                              int32_t m, int32_t* rank, int32_t* controllable) {
    if (!A || !B || n < 1 || m < 1) {
        set_error("controllability_rank: null buffer or non-positive dimension");
        return CAUSALID_ERR_INVALID_ARGUMENT;
    }
    try {
        causalid::Matrix Am(n, n), Bm(n, m);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) Am(i, j) = A[i * n + j];
            for (int j = 0; j < m; ++j) Bm(i, j) = B[i * m + j];
        }
        const auto res = causalid::controllability_rank(Am, Bm);
        if (rank) *rank = res.rank;
        if (controllable) *controllable = res.controllable ? 1 : 0;
        return CAUSALID_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return CAUSALID_ERR_RUNTIME;
    }
}

int causalid_run_scenario(const char* config_path, const char* out_dir,
                          const uint64_t* seed_override, int quiet) {
    if (!config_path) {
        set_error("run_scenario: null config path");
        return causalid::kExitConfigError;
    }
    causalid::RunOverrides overrides;
    if (out_dir) overrides.out_dir = std::string(out_dir);
    if (seed_override) overrides.seed = *seed_override;
    overrides.quiet = quiet != 0;
    try {
        return causalid::run_scenario_file(config_path, overrides);
    } catch (const std::exception& e) {
        set_error(e.what());
        return causalid::kExitRuntimeFailure;
    }
}

int causalid_verify_graph(const char* graph_path, const char* config_path, int quiet) {
    if (!graph_path || !config_path) {
        set_error("verify_graph: null path");
        return causalid::kExitConfigError;
    }
    try {
        return causalid::verify_graph_file(graph_path, config_path, quiet != 0);
    } catch (const std::exception& e) {
        set_error(e.what());
        return causalid::kExitConfigError;
    }
}

} // extern "C"
