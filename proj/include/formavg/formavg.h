/* Copyright 2026 The formavg Authors
 * SPDX-License-Identifier: Apache-2.0 */

#ifndef FORMAVG_FORMAVG_H
#define FORMAVG_FORMAVG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FA_API __declspec(dllexport)
#else
#define FA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Nonzero values match the library's error categories. */
typedef enum fa_status {
    FA_OK = 0,
    FA_INVALID_ARGUMENT = 1,
    FA_DIMENSION_MISMATCH = 2,
    FA_DECLARED_CONSTANT_VIOLATED = 3,
    FA_DINI_VIOLATED = 4,
    FA_DIVERGENT_INTEGRAL = 5,
    FA_UNBOUNDED = 6,
    FA_QUADRATURE_NOT_CONVERGED = 7,
    FA_STEP_SIZE_UNDERFLOW = 8,
    FA_STIFFNESS_BUDGET_EXCEEDED = 9,
    FA_BOUND_VIOLATED = 10,
    FA_POWER_ITERATION_STALLED = 11,
    FA_GRID_NOT_CONVERGED = 12,
    FA_SINGULAR_RESOLVENT = 13,
    FA_EXPONENTIAL_NOT_CONVERGED = 14,
    FA_SQRT_RESIDUAL_TOO_LARGE = 15,
    FA_GRID_MISMATCH = 16,
    FA_CONFIG_ERROR = 17,
    FA_IO = 18,
    FA_INTERNAL = 99
} fa_status;

typedef struct fa_config fa_config;
typedef struct fa_result fa_result;

FA_API const char* fa_version(void);

/* Message of the last failed call on this thread; empty if none. */
FA_API const char* fa_last_error(void);

FA_API const char* fa_status_name(fa_status status);

/* Configuration from an INI file or INI text. */
FA_API fa_status fa_config_load(const char* path, fa_config** out);
FA_API fa_status fa_config_parse(const char* text, fa_config** out);
FA_API void fa_config_free(fa_config* config);

FA_API fa_status fa_config_set_seed(fa_config* config, uint64_t seed);
/* Tolerance of the discretized solves. */
FA_API fa_status fa_config_set_tolerance(fa_config* config, double tol);
/* Output directory named in the config. Owned by the config. */
FA_API const char* fa_config_output(const fa_config* config);

FA_API size_t fa_command_count(void);
FA_API const char* fa_command_name(size_t index);

/* Runs one subcommand. A bound violation still returns FA_OK; inspect
 * fa_result_passed. */
FA_API fa_status fa_run(const fa_config* config, const char* command, fa_result** out);
FA_API void fa_result_free(fa_result* result);

/* 1 if every checked bound held, 0 otherwise. */
FA_API int fa_result_passed(const fa_result* result);
FA_API const char* fa_result_summary(const fa_result* result);
FA_API size_t fa_result_artifact_count(const fa_result* result);
/* Name and contents of an artifact; pointers are owned by the result. */
FA_API fa_status fa_result_artifact(const fa_result* result, size_t index, const char** name,
                                    const char** content, size_t* size);
/* Writes all artifacts into dir, creating it if needed. */
FA_API fa_status fa_result_write(const fa_result* result, const char* dir);

/* Theoretical brackets for the power modulus c t^beta on [0, T]. */
FA_API fa_status fa_bracket_bound(double c, double beta, double T, double gamma, double mesh,
                                  double* out);
FA_API fa_status fa_two_subdivision_bound(double c, double beta, double T, double gamma,
                                          double mesh_coarse, double mesh_fine, double* out);

#ifdef __cplusplus
}
#endif

#endif /* FORMAVG_FORMAVG_H */
