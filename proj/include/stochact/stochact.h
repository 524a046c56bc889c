/* C interface to the stochact library.
 *
 * Every function returns a stochact_status; on failure a message is kept
 * per thread and can be read with stochact_last_error(). Handles are opaque
 * and owned by the caller, who releases them with the matching *_free.
 */
#ifndef STOCHACT_STOCHACT_H
#define STOCHACT_STOCHACT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define STOCHACT_API __declspec(dllexport)
#else
#define STOCHACT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum stochact_status {
  STOCHACT_OK = 0,
  STOCHACT_ERR_CONFIG = 1,
  STOCHACT_ERR_PARSE = 2,
  STOCHACT_ERR_DIMENSION = 3,
  STOCHACT_ERR_IO = 4,
  STOCHACT_ERR_INVALID_ARGUMENT = 5,
  STOCHACT_ERR_INTERNAL = 6,
  STOCHACT_ERR_VERIFY_FAILED = 7
} stochact_status;

typedef struct stochact_experiment stochact_experiment;
typedef struct stochact_report stochact_report;

typedef void (*stochact_line_callback)(const char* line, void* user);

STOCHACT_API const char* stochact_version(void);
/* Message of the last failed call on this thread ("" if none). */
STOCHACT_API const char* stochact_last_error(void);

/* Loads and validates a TOML or JSON config. `overrides` holds
 * `override_count` strings of the form "dotted.key=value". Validation
 * problems are all joined into the last-error message. */
STOCHACT_API stochact_status stochact_experiment_load(const char* path, const char* const* overrides,
                                                      size_t override_count,
                                                      stochact_experiment** out);
STOCHACT_API stochact_status stochact_experiment_parse(const char* text, const char* const* overrides,
                                                       size_t override_count,
                                                       stochact_experiment** out);
STOCHACT_API void stochact_experiment_free(stochact_experiment* experiment);

STOCHACT_API stochact_status stochact_experiment_set_seed(stochact_experiment* experiment,
                                                          uint64_t seed);
/* Configured output.directory (valid until free). */
STOCHACT_API const char* stochact_experiment_output_directory(const stochact_experiment* experiment);

/* Number of validation warnings and access by index (valid until free). */
STOCHACT_API size_t stochact_experiment_warning_count(const stochact_experiment* experiment);
STOCHACT_API const char* stochact_experiment_warning(const stochact_experiment* experiment,
                                                     size_t index);

/* `command` is one of solve-control, optimize-actuator, round-levelset,
 * estimate-obs, sweep. A NULL or empty `out_dir` skips artifact output. */
STOCHACT_API stochact_status stochact_run(const stochact_experiment* experiment, const char* command,
                                          const char* out_dir, stochact_report** out);
STOCHACT_API void stochact_report_free(stochact_report* report);

STOCHACT_API const char* stochact_report_status(const stochact_report* report);
STOCHACT_API const char* stochact_report_json(const stochact_report* report);
STOCHACT_API stochact_status stochact_report_scalar(const stochact_report* report, const char* name,
                                                    double* value);
/* Copies up to `capacity` values of a named field into `values` and sets
 * `length` to the full field length; `values` may be NULL to query it. */
STOCHACT_API stochact_status stochact_report_field(const stochact_report* report, const char* name,
                                                   double* values, size_t capacity,
                                                   size_t* length);

/* Runs the property suite; each group summary line goes to `callback`.
 * Returns STOCHACT_ERR_VERIFY_FAILED when any group fails. */
STOCHACT_API stochact_status stochact_verify(const stochact_experiment* experiment,
                                             stochact_line_callback callback, void* user);

/* Recomputes report scalars from artifacts in `dir`; mismatches are sent
 * to `callback` and yield STOCHACT_ERR_VERIFY_FAILED. */
STOCHACT_API stochact_status stochact_check_artifacts(const char* dir, stochact_line_callback callback,
                                                      void* user);

#ifdef __cplusplus
}
#endif

#endif
