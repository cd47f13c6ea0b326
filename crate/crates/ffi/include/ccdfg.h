/* SPDX-License-Identifier: Apache-2.0 */

#ifndef CCDFG_H
#define CCDFG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CcdfgCheckKind {
  CCDFG_CHECK_KIND_CORRECTNESS = 0,
  CCDFG_CHECK_KIND_INVARIANT = 1,
} CcdfgCheckKind;

typedef enum CcdfgStatus {
  CCDFG_STATUS_OK = 0,
  CCDFG_STATUS_NULL_ARGUMENT = 1,
  CCDFG_STATUS_INVALID_UTF8 = 2,
  CCDFG_STATUS_PARSE_ERROR = 3,
  CCDFG_STATUS_INVALID = 4,
  CCDFG_STATUS_EXEC_ERROR = 5,
  CCDFG_STATUS_HAZARD_CONFLICT = 6,
  CCDFG_STATUS_SYNTHESIS_ERROR = 7,
  CCDFG_STATUS_INVALID_PARAMS = 8,
  CCDFG_STATUS_CHECK_FAILED = 9,
  CCDFG_STATUS_NOT_FOUND = 10,
  CCDFG_STATUS_PANIC = 11,
} CcdfgStatus;

/**
 * A parsed `.ccdfg` document, sequential or pipelined.
 */
typedef struct CcdfgDesign CcdfgDesign;

/**
 * A pipelined design together with the sequential design it came from.
 */
typedef struct CcdfgPipeline CcdfgPipeline;

/**
 * Variable bindings, memory and pointers.
 */
typedef struct CcdfgState CcdfgState;

typedef struct CcdfgPipelineParams {
  size_t interval;
  size_t m;
  size_t depth;
} CcdfgPipelineParams;

/**
 * Sweep settings for [`ccdfg_pipeline_check`]. `width_bits` of 0 means 64.
 */
typedef struct CcdfgCheckConfig {
  uint64_t k_max;
  uint64_t samples;
  uint64_t seed;
  uint64_t mem_size;
  uint32_t width_bits;
} CcdfgCheckConfig;

typedef struct CcdfgCheckResult {
  uint64_t passed;
  uint64_t total;
} CcdfgCheckResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failing call on this thread, or null.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *ccdfg_last_error(void);

/**
 * # Safety
 * `s` is null or a string returned by this library, not yet freed.
 */
void ccdfg_string_free(char *s);

/**
 * Parses a `.ccdfg` document.
 *
 * # Safety
 * `text` is a nul-terminated string; `out` points to writable storage.
 */
enum CcdfgStatus ccdfg_design_parse(const char *text, struct CcdfgDesign **out);

/**
 * # Safety
 * `d` is null or a live design handle.
 */
void ccdfg_design_free(struct CcdfgDesign *d);

/**
 * 1 for a pipelined document, 0 for a sequential one.
 *
 * # Safety
 * `d` is a live design handle.
 */
int32_t ccdfg_design_is_pipelined(const struct CcdfgDesign *d);

/**
 * Checks the structural rules. Returns `Invalid` with one diagnostic per
 * line in the last error when any rule is broken.
 *
 * # Safety
 * `d` is a live design handle.
 */
enum CcdfgStatus ccdfg_design_validate(const struct CcdfgDesign *d);

/**
 * Writes the canonical text of a design; free it with `ccdfg_string_free`.
 *
 * # Safety
 * `d` is a live design handle; `out` points to writable storage.
 */
enum CcdfgStatus ccdfg_design_serialize(const struct CcdfgDesign *d, char **out);

/**
 * Parses a `.cstate` document at `width_bits` (0 means 64).
 *
 * # Safety
 * `text` is a nul-terminated string; `out` points to writable storage.
 */
enum CcdfgStatus ccdfg_state_parse(const char *text, uint32_t width_bits, struct CcdfgState **out);

/**
 * # Safety
 * `s` is null or a live state handle.
 */
void ccdfg_state_free(struct CcdfgState *s);

/**
 * # Safety
 * `s` is a live state handle; `out` points to writable storage.
 */
enum CcdfgStatus ccdfg_state_serialize(const struct CcdfgState *s, char **out);

/**
 * Value bound to variable `name`; `NotFound` when unbound.
 *
 * # Safety
 * `s` is a live state handle, `name` a nul-terminated string and `out`
 * points to writable storage.
 */
enum CcdfgStatus ccdfg_state_var(const struct CcdfgState *s, const char *name, uint64_t *out);

/**
 * Memory word at `addr`; `NotFound` when unmapped.
 *
 * # Safety
 * `s` is a live state handle; `out` points to writable storage.
 */
enum CcdfgStatus ccdfg_state_mem(const struct CcdfgState *s, uint64_t addr, uint64_t *out);

/**
 * Runs `iterations` source iterations of a design from `init`, as the
 * `run` command does. `out_cycles` may be null.
 *
 * # Safety
 * `d` and `init` are live handles; `out_state` points to writable storage;
 * `out_cycles` is null or writable.
 */
enum CcdfgStatus ccdfg_run(const struct CcdfgDesign *d,
                           const struct CcdfgState *init,
                           uint64_t iterations,
                           struct CcdfgState **out_state,
                           uint64_t *out_cycles);

/**
 * Pipelines a sequential design at initiation interval `interval`.
 *
 * # Safety
 * `d` is a live design handle; `out` points to writable storage.
 */
enum CcdfgStatus ccdfg_pipeline(const struct CcdfgDesign *d,
                                size_t interval,
                                struct CcdfgPipeline **out);

/**
 * # Safety
 * `p` is null or a live pipeline handle.
 */
void ccdfg_pipeline_free(struct CcdfgPipeline *p);

/**
 * # Safety
 * `p` is a live pipeline handle; `out` points to writable storage.
 */
enum CcdfgStatus ccdfg_pipeline_params(const struct CcdfgPipeline *p,
                                       struct CcdfgPipelineParams *out);

/**
 * The pipelined design as a new design handle, meta included.
 *
 * # Safety
 * `p` is a live pipeline handle; `out` points to writable storage.
 */
enum CcdfgStatus ccdfg_pipeline_design(const struct CcdfgPipeline *p, struct CcdfgDesign **out);

struct CcdfgCheckConfig ccdfg_check_config_default(void);

/**
 * Sweeps a checker over k = 1..=k_max and seeded random states. Returns
 * `CheckFailed` with the first failing report in the last error when any
 * check fails; `out` is filled either way. A null `config` uses the
 * defaults.
 *
 * # Safety
 * `p` is a live pipeline handle; `config` is null or readable; `out`
 * points to writable storage.
 */
enum CcdfgStatus ccdfg_pipeline_check(const struct CcdfgPipeline *p,
                                      enum CcdfgCheckKind kind,
                                      const struct CcdfgCheckConfig *config,
                                      struct CcdfgCheckResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CCDFG_H */
