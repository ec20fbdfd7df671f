#ifndef NEAROPT_H
#define NEAROPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum NearoptStatus {
  NEAROPT_STATUS_OK = 0,
  /*
   A required pointer argument was null.
   */
  NEAROPT_STATUS_NULL_ARGUMENT = 1,
  /*
   A string argument was not valid UTF-8.
   */
  NEAROPT_STATUS_INVALID_UTF8 = 2,
  /*
   Bad configuration or parameter.
   */
  NEAROPT_STATUS_CONFIG = 3,
  /*
   An upstream stage has not run or its outputs changed.
   */
  NEAROPT_STATUS_STALE = 4,
  /*
   The pathway LP has no feasible solution.
   */
  NEAROPT_STATUS_INFEASIBLE = 5,
  /*
   Solver or numerical failure.
   */
  NEAROPT_STATUS_RUNTIME = 6,
  /*
   File could not be read or written.
   */
  NEAROPT_STATUS_IO = 7,
  /*
   Index outside the valid range.
   */
  NEAROPT_STATUS_OUT_OF_RANGE = 8,
  /*
   A Rust panic was caught at the boundary.
   */
  NEAROPT_STATUS_PANIC = 9,
} NearoptStatus;

/*
 Pipeline stage selector for [`nearopt_pipeline_run`].
 */
typedef enum NearoptStage {
  NEAROPT_STAGE_OPTIMIZE = 0,
  NEAROPT_STAGE_MAA = 1,
  NEAROPT_STAGE_SAMPLE = 2,
  NEAROPT_STAGE_CLUSTER = 3,
  NEAROPT_STAGE_TREE = 4,
  NEAROPT_STAGE_REPORT = 5,
  NEAROPT_STAGE_ALL = 6,
} NearoptStage;

/*
 A loaded run configuration.
 */
typedef struct NearoptPipeline NearoptPipeline;

/*
 An in-memory sample matrix.
 */
typedef struct NearoptSamples NearoptSamples;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until
 the next call on this thread.
 */
const char *nearopt_last_error(void);

/*
 Library version as a static string.
 */
const char *nearopt_version(void);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not be freed twice.
 */
void nearopt_string_free(char *s);

/*
 Capital recovery factor for interest `rate` over `years`.

 # Safety
 `out` must be null or point to writable memory.
 */
enum NearoptStatus nearopt_annuity(double rate, uint32_t years, double *out);

/*
 Annualized cost per unit of capacity (capex in EUR/kW, result in EUR/kW/a).

 # Safety
 `out` must be null or point to writable memory.
 */
enum NearoptStatus nearopt_annualized_cost(double capex,
                                           double fixed_om,
                                           double rate,
                                           uint32_t years,
                                           double *out);

/*
 Loads a run configuration. `pathway` may be null to keep every
 configured pathway; `seed` overrides the configured seed when
 `override_seed` is non-zero.

 # Safety
 String arguments must be null or valid nul-terminated strings; `out`
 must point to writable memory.
 */
enum NearoptStatus nearopt_pipeline_open(const char *config_path,
                                         const char *pathway,
                                         int32_t override_seed,
                                         uint64_t seed,
                                         struct NearoptPipeline **out);

/*
 # Safety
 `p` must be null or a handle from [`nearopt_pipeline_open`], freed once.
 */
void nearopt_pipeline_free(struct NearoptPipeline *p);

/*
 Runs one stage, or all of them.

 # Safety
 `p` must be a live handle.
 */
enum NearoptStatus nearopt_pipeline_run(const struct NearoptPipeline *p, enum NearoptStage stage);

/*
 Output directory of the run, as a new string.

 # Safety
 `p` must be a live handle; `out` must point to writable memory.
 */
enum NearoptStatus nearopt_pipeline_output_dir(const struct NearoptPipeline *p, char **out);

/*
 Reads a `.samples` file and its sidecar.

 # Safety
 `path` must be a valid string; `out` must point to writable memory.
 */
enum NearoptStatus nearopt_samples_read(const char *path, struct NearoptSamples **out);

/*
 Draws `n` uniform samples from the hull stored in an MAA hull JSON file.

 # Safety
 `hull_path` must be a valid string; `out` must point to writable memory.
 */
enum NearoptStatus nearopt_samples_from_hull(const char *hull_path,
                                             size_t n,
                                             uint64_t seed,
                                             struct NearoptSamples **out);

/*
 Writes samples to `path` plus the `path.json` sidecar.

 # Safety
 `s` must be a live handle and `path` a valid string.
 */
enum NearoptStatus nearopt_samples_write(const struct NearoptSamples *s, const char *path);

/*
 # Safety
 `s` must be null or a handle from this library, freed once.
 */
void nearopt_samples_free(struct NearoptSamples *s);

/*
 Row count; 0 for a null handle.

 # Safety
 `s` must be null or a live handle.
 */
size_t nearopt_samples_rows(const struct NearoptSamples *s);

/*
 Column count; 0 for a null handle.

 # Safety
 `s` must be null or a live handle.
 */
size_t nearopt_samples_cols(const struct NearoptSamples *s);

/*
 Row-major `rows × cols` matrix, valid while the handle lives.

 # Safety
 `s` must be null or a live handle.
 */
const double *nearopt_samples_data(const struct NearoptSamples *s);

/*
 Copies row `row` into `buf`, which holds `len` doubles.

 # Safety
 `s` must be a live handle; `buf` must hold `len` writable doubles.
 */
enum NearoptStatus nearopt_samples_row(const struct NearoptSamples *s,
                                       size_t row,
                                       double *buf,
                                       size_t len);

/*
 Name of column `col`, as a new string.

 # Safety
 `s` must be a live handle; `out` must point to writable memory.
 */
enum NearoptStatus nearopt_samples_variable(const struct NearoptSamples *s, size_t col, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEAROPT_H */
