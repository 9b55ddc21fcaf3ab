/* causalid — causal structure identification for simulated control systems.
 *
 * C API over the C++ core: opaque handles, integer status codes, row-major
 * double buffers. All functions are thread-safe unless noted; error detail
 * for the calling thread is available via causalid_last_error().
 */
#ifndef CAUSALID_H
#define CAUSALID_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CAUSALID_API __declspec(dllexport)
#else
#define CAUSALID_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef int32_t causalid_status;

enum {
    CAUSALID_OK = 0,
    CAUSALID_ERR_INVALID_ARGUMENT = -1,
    CAUSALID_ERR_INVALID_HANDLE = -2,
    CAUSALID_ERR_DIMENSION = -3,
    CAUSALID_ERR_RUNTIME = -4
};

/* Opaque plant handle (LTI or named nonlinear built-in). */
typedef struct causalid_model causalid_model;

CAUSALID_API void causalid_version(int* major, int* minor, int* patch);

/* Static description of a status code. */
CAUSALID_API const char* causalid_status_message(causalid_status status);

/* Detail message for the last failing call on this thread. */
CAUSALID_API const char* causalid_last_error(void);

/* ---- plants ---------------------------------------------------------- */

/* A: n*n row-major, B: n*m row-major, noise_std: n entries (>= 0). */
CAUSALID_API causalid_status causalid_lti_create(const double* A, const double* B,
                                                 const double* noise_std, int32_t n, int32_t m,
                                                 causalid_model** out);

/* Named nonlinear built-in, e.g. "bilinear2". */
CAUSALID_API causalid_status causalid_builtin_create(const char* name, causalid_model** out);

CAUSALID_API void causalid_model_free(causalid_model* model);

CAUSALID_API causalid_status causalid_model_dims(const causalid_model* model, int32_t* state_dim,
                                                 int32_t* input_dim);

/* Stochastic rollout. inputs: T*m row-major; states_out: (T+1)*n row-major.
 * Deterministic for fixed arguments and seed. Returns the number of completed
 * steps in *steps_done (< T when the state left its bounds). */
CAUSALID_API causalid_status causalid_simulate(const causalid_model* model, const double* x0,
                                               const double* inputs, int32_t T, uint64_t seed,
                                               double* states_out, int32_t* steps_done);

/* ---- primitives ------------------------------------------------------ */

/* Linear-frequency-sweep excitation; out: T*channels row-major. */
CAUSALID_API causalid_status causalid_chirp(int32_t T, double amplitude, double f0, double f1,
                                            int32_t channels, double* out);

/* Unbiased squared-MMD estimate between two m*d row-major sample sets. */
CAUSALID_API causalid_status causalid_mmd2_unbiased(const double* X, const double* Y, int32_t m,
                                                    int32_t d, double lengthscale, double* out);

/* Kalman controllability rank of (A, B). */
CAUSALID_API causalid_status causalid_controllability_rank(const double* A, const double* B,
                                                           int32_t n, int32_t m, int32_t* rank,
                                                           int32_t* controllable);

/* ---- pipeline -------------------------------------------------------- */

/* Runs a scenario config end to end, writing graph.json, tables.txt, model
 * and trajectory files. Returns a process-style exit code: 0 success,
 * 2 config error, 3 runtime failure. seed_override/out_dir may be NULL. */
CAUSALID_API int causalid_run_scenario(const char* config_path, const char* out_dir,
                                       const uint64_t* seed_override, int quiet);

/* Diffs a stored graph.json against the matrix-power ground truth of the
 * config's LTI plant. Returns 0 on exact match, 1 on mismatch, 2 on a
 * config/IO error or an unsupported (nonlinear) plant. */
CAUSALID_API int causalid_verify_graph(const char* graph_path, const char* config_path, int quiet);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CAUSALID_H */
