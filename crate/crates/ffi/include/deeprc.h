#ifndef DEEPRC_H
#define DEEPRC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DeeprcStatus {
  DEEPRC_STATUS_OK = 0,
  DEEPRC_STATUS_NULL_POINTER = 1,
  DEEPRC_STATUS_INVALID_ARGUMENT = 2,
  DEEPRC_STATUS_DIMENSION = 3,
  DEEPRC_STATUS_CONFIG = 4,
  DEEPRC_STATUS_IO = 5,
  DEEPRC_STATUS_NUMERICAL = 6,
  DEEPRC_STATUS_BUFFER_TOO_SMALL = 7,
  DEEPRC_STATUS_PANIC = 8,
} DeeprcStatus;

typedef enum DeeprcFamily {
  DEEPRC_FAMILY_A = 0,
  DEEPRC_FAMILY_B = 1,
  DEEPRC_FAMILY_C = 2,
  DEEPRC_FAMILY_D = 3,
  DEEPRC_FAMILY_K = 4,
  DEEPRC_FAMILY_F = 5,
  DEEPRC_FAMILY_G = 6,
} DeeprcFamily;

// Matrices of the lifted system anchored at a given time.
typedef enum DeeprcLiftedMatrix {
  DEEPRC_LIFTED_MATRIX_A = 0,
  DEEPRC_LIFTED_MATRIX_B = 1,
  DEEPRC_LIFTED_MATRIX_F = 2,
  DEEPRC_LIFTED_MATRIX_K = 3,
  DEEPRC_LIFTED_MATRIX_C = 4,
  DEEPRC_LIFTED_MATRIX_D = 5,
  DEEPRC_LIFTED_MATRIX_G = 6,
  DEEPRC_LIFTED_MATRIX_H = 7,
} DeeprcLiftedMatrix;

typedef enum DeeprcArm {
  DEEPRC_ARM_DEEPRC = 0,
  DEEPRC_ARM_BASELINE = 1,
  DEEPRC_ARM_NO_CONTROL = 2,
} DeeprcArm;

// Opaque periodic plant.
typedef struct DeeprcPlant DeeprcPlant;

// Opaque result of a closed-loop experiment.
typedef struct DeeprcReport DeeprcReport;

typedef struct DeeprcDims {
  size_t period;
  size_t states;
  size_t inputs;
  size_t outputs;
  size_t disturbances;
} DeeprcDims;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next call into this library from the same thread.
const char *deeprc_last_error(void);

// The built-in case-study plant. Release with [`deeprc_plant_free`].
struct DeeprcPlant *deeprc_plant_case_study(void);

// Load the `[plant]` table of a TOML or JSON configuration file.
//
// # Safety
// `config_path` must be a NUL-terminated string and `out` writable.
enum DeeprcStatus deeprc_plant_from_config(const char *config_path, struct DeeprcPlant **out);

// # Safety
// `plant` must come from this library and not be used afterwards.
void deeprc_plant_free(struct DeeprcPlant *plant);

// # Safety
// `plant` must be a live handle and `out` writable.
enum DeeprcStatus deeprc_plant_dims(const struct DeeprcPlant *plant, struct DeeprcDims *out);

// Write the matrix of `family` at time `k` in row-major order; `rows` and
// `cols` receive its shape. With a null `out` only the shape is reported.
//
// # Safety
// `out` must hold `len` doubles; `rows` and `cols` may be null.
enum DeeprcStatus deeprc_plant_matrix_at(const struct DeeprcPlant *plant,
                                         enum DeeprcFamily family,
                                         int64_t k,
                                         double *out,
                                         size_t len,
                                         size_t *rows,
                                         size_t *cols);

// One plant step at time `k`. Vectors have the lengths given by
// [`deeprc_plant_dims`]; `x_next` and `y` receive the results.
//
// # Safety
// All pointers must reference arrays of the plant's dimensions.
enum DeeprcStatus deeprc_plant_step(const struct DeeprcPlant *plant,
                                    const double *x,
                                    const double *u,
                                    const double *d,
                                    const double *e,
                                    int64_t k,
                                    double *x_next,
                                    double *y);

// One matrix of the lifted system anchored at `k0`, row-major. With a null
// `out` only the shape is reported.
//
// # Safety
// `out` must hold `len` doubles; `rows` and `cols` may be null.
enum DeeprcStatus deeprc_lift(const struct DeeprcPlant *plant,
                              int64_t k0,
                              enum DeeprcLiftedMatrix which,
                              double *out,
                              size_t len,
                              size_t *rows,
                              size_t *cols);

// `q |y|^2 + r |u|^2` for one period of stacked outputs and inputs.
//
// # Safety
// `y` and `u` must hold `ny` and `nu` doubles, `out` must be writable.
enum DeeprcStatus deeprc_iteration_cost(const double *y,
                                        size_t ny,
                                        const double *u,
                                        size_t nu,
                                        double q,
                                        double r,
                                        double *out);

// Run the three-arm experiment. `config_path` may be null for the built-in
// case study. A negative `seed` keeps the configured seed; `noise` is 0 to
// disable noise, 1 to enable it and negative to keep the configured value.
//
// # Safety
// `config_path` is null or NUL-terminated; `out` must be writable.
enum DeeprcStatus deeprc_experiment_run(const char *config_path,
                                        int64_t seed,
                                        int32_t noise,
                                        size_t init_periods,
                                        size_t run_periods,
                                        struct DeeprcReport **out);

// # Safety
// `report` must come from this library and not be used afterwards.
void deeprc_report_free(struct DeeprcReport *report);

// Number of period costs of one arm (zero for a null handle).
//
// # Safety
// `report` must be null or a live handle.
size_t deeprc_report_cost_count(const struct DeeprcReport *report, enum DeeprcArm arm);

// Index of the first period under control.
//
// # Safety
// `report` must be null or a live handle.
size_t deeprc_report_enable_period(const struct DeeprcReport *report);

// Copy the period costs of one arm into `out`.
//
// # Safety
// `out` must hold `len` doubles.
enum DeeprcStatus deeprc_report_costs(const struct DeeprcReport *report,
                                      enum DeeprcArm arm,
                                      double *out,
                                      size_t len);

// Write the per-arm CSV logs, the cost CSV and `metadata.json` into `dir`.
//
// # Safety
// `dir` must be a NUL-terminated string.
enum DeeprcStatus deeprc_report_export_csv(const struct DeeprcReport *report, const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEEPRC_H */
