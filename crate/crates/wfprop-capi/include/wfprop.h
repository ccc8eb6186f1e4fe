#ifndef WFPROP_H
#define WFPROP_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by fallible functions.
 */
typedef enum WfpropStatus {
  WFPROP_STATUS_OK = 0,
  WFPROP_STATUS_PARSE_ERROR = 1,
  WFPROP_STATUS_INVALID_ARGUMENT = 2,
  WFPROP_STATUS_GUARD_EXCEEDED = 3,
  /**
   * Propagation under the given assumptions conflicted.
   */
  WFPROP_STATUS_CONFLICT = 4,
} WfpropStatus;

/**
 * An immutable parsed program.
 */
typedef struct WfpropProgram WfpropProgram;

/**
 * A finished solve: answer sets and statistics.
 */
typedef struct WfpropResult WfpropResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. Valid until
 * the next failing call on the same thread.
 */
const char *wfprop_last_error(void);

/**
 * # Safety
 * `text` must be a valid nul-terminated string and `out` a valid pointer.
 */
enum WfpropStatus wfprop_program_parse(const char *text, struct WfpropProgram **out);

/**
 * # Safety
 * `program` must come from `wfprop_program_parse` and not be freed twice.
 */
void wfprop_program_free(struct WfpropProgram *program);

/**
 * # Safety
 * `program` must be a live handle.
 */
uintptr_t wfprop_program_atom_count(const struct WfpropProgram *program);

/**
 * # Safety
 * `program` must be a live handle.
 */
uintptr_t wfprop_program_body_count(const struct WfpropProgram *program);

/**
 * # Safety
 * `program` must be a live handle.
 */
uintptr_t wfprop_program_rule_count(const struct WfpropProgram *program);

/**
 * 0 = unary, 1 = component-unary, 2 = general, -1 = bad handle.
 *
 * # Safety
 * `program` must be a live handle.
 */
int32_t wfprop_program_class(const struct WfpropProgram *program);

/**
 * Enumerate answer sets. `props` is a comma list (`"up,fl,dom"`; null means
 * `up,fl`), `enum_limit` 0 enumerates all, `time_limit_ms` 0 means no
 * budget.
 *
 * # Safety
 * `program` must be a live handle, `out` a valid pointer, `props` null or a
 * valid nul-terminated string.
 */
enum WfpropStatus wfprop_solve(const struct WfpropProgram *program,
                               const char *props,
                               uintptr_t enum_limit,
                               uint64_t time_limit_ms,
                               uint64_t seed,
                               struct WfpropResult **out);

/**
 * # Safety
 * `result` must come from `wfprop_solve` and not be freed twice.
 */
void wfprop_result_free(struct WfpropResult *result);

/**
 * # Safety
 * `result` must be a live handle.
 */
uintptr_t wfprop_result_answer_count(const struct WfpropResult *result);

/**
 * Space-joined sorted atom names of answer set `index`, or null. The string
 * is owned by the result handle.
 *
 * # Safety
 * `result` must be a live handle.
 */
const char *wfprop_result_answer(const struct WfpropResult *result, uintptr_t index);

/**
 * # Safety
 * `result` must be a live handle.
 */
uint64_t wfprop_result_branches(const struct WfpropResult *result);

/**
 * # Safety
 * `result` must be a live handle.
 */
uint64_t wfprop_result_conflicts(const struct WfpropResult *result);

/**
 * Whether enumeration ran to exhaustion (no limit or budget cut it short).
 *
 * # Safety
 * `result` must be a live handle.
 */
bool wfprop_result_complete(const struct WfpropResult *result);

/**
 * Root propagation fixpoint as a newline-joined listing (one literal with
 * its propagator tag per line), written to `*out` as a malloc-style string
 * released with `wfprop_string_free`. `assume` is a comma list like
 * `"t:a,f:b"` (null for none). Returns `Conflict` when propagation fails;
 * `*out` then holds the conflict description.
 *
 * # Safety
 * `program` must be a live handle, `out` valid, strings nul-terminated.
 */
enum WfpropStatus wfprop_propagate(const struct WfpropProgram *program,
                                   const char *props,
                                   const char *assume,
                                   char **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void wfprop_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* WFPROP_H */
