#ifndef QFUSION_H
#define QFUSION_H

/* Generated by cbindgen from the qfusion-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call; `qf_last_error` carries the detail.
 */
typedef enum QfStatus {
  QF_STATUS_OK = 0,
  QF_STATUS_NULL_POINTER = 1,
  QF_STATUS_INVALID_UTF8 = 2,
  QF_STATUS_PARSE_ERROR = 3,
  QF_STATUS_INVALID_ARGUMENT = 4,
  QF_STATUS_SIMULATION_ERROR = 5,
  QF_STATUS_TRANSPILE_ERROR = 6,
  QF_STATUS_PANIC = 7,
} QfStatus;

/**
 * Opaque handle to a parsed circuit.
 */
typedef struct QfCircuit QfCircuit;

/**
 * Gadget counts and resource-state accounting for a circuit.
 */
typedef struct QfResourceReport {
  uint64_t t_count;
  uint64_t cs_count;
  uint64_t toffoli_count;
  uint64_t f_states_used;
  uint64_t t_states_equivalent;
  uint64_t gadget_depth;
} QfResourceReport;

/**
 * Outcome of running the identity registry.
 */
typedef struct QfVerifySummary {
  uint64_t total;
  uint64_t failed;
  double max_deviation;
} QfVerifySummary;

/**
 * Probabilities of the four twirled error classes (I, X2, Z2, X2Z2).
 */
typedef struct QfErrorDistribution {
  double p_i;
  double p_x;
  double p_z;
  double p_xz;
} QfErrorDistribution;

/**
 * Postselected output of a detection block; `output` is meaningful
 * only when `has_output` is set.
 */
typedef struct QfBlockResult {
  double accept_probability;
  bool has_output;
  struct QfErrorDistribution output;
} QfBlockResult;

/**
 * Summary of a greedy nesting schedule.
 */
typedef struct QfNestingSummary {
  uint64_t rounds;
  bool converged;
  bool diverged;
  double raw_per_output;
  struct QfErrorDistribution final_distribution;
} QfNestingSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static C string.
 */
const char *qf_version(void);

/**
 * Message describing the most recent failure on this thread, or null
 * if no call has failed yet. Valid until the next failing call.
 */
const char *qf_last_error(void);

/**
 * Parses circuit JSON into a handle.
 *
 * # Safety
 * `json` must point to a NUL-terminated string and `out` must be valid
 * for writes; on success the caller owns the handle and must release
 * it with `qf_circuit_free`.
 */
enum QfStatus qf_circuit_parse(const char *json, struct QfCircuit **out);

/**
 * Releases a circuit handle; null is a no-op.
 *
 * # Safety
 * `handle` must come from this library and not be used afterwards.
 */
void qf_circuit_free(struct QfCircuit *handle);

/**
 * Releases a string returned through a `char **` out-parameter; null
 * is a no-op.
 *
 * # Safety
 * `text` must come from this library and not be used afterwards.
 */
void qf_string_free(char *text);

/**
 * Serializes the circuit back to JSON.
 *
 * # Safety
 * `handle` must be a live circuit handle and `out` valid for writes;
 * the returned string must be released with `qf_string_free`.
 */
enum QfStatus qf_circuit_to_json(const struct QfCircuit *handle, char **out);

/**
 * Number of wires the circuit declares.
 *
 * # Safety
 * `handle` must be a live circuit handle and `out` valid for writes.
 */
enum QfStatus qf_circuit_wire_count(const struct QfCircuit *handle, uint64_t *out);

/**
 * Resource accounting for a qubit-only circuit.
 *
 * # Safety
 * `handle` must be a live circuit handle and `out` valid for writes.
 */
enum QfStatus qf_circuit_resources(const struct QfCircuit *handle, struct QfResourceReport *out);

/**
 * Rewrites every T, CS, and CCX gate into a resource-state gadget.
 *
 * # Safety
 * `handle` must be a live circuit handle and `out` valid for writes;
 * on success the caller owns the new handle.
 */
enum QfStatus qf_circuit_recompile(const struct QfCircuit *handle, struct QfCircuit **out);

/**
 * Samples the circuit's classical outputs and returns `outcome,count`
 * CSV rows sorted by outcome. Shots are drawn from counter-keyed
 * streams, so a fixed seed reproduces the histogram exactly.
 *
 * # Safety
 * `handle` must be a live circuit handle and `out` valid for writes;
 * the returned string must be released with `qf_string_free`.
 */
enum QfStatus qf_circuit_sample(const struct QfCircuit *handle,
                                uint64_t shots,
                                uint64_t seed,
                                char **out);

/**
 * Runs every identity whose case id starts with `prefix` (null or
 * empty selects the whole registry) and summarizes the outcome.
 *
 * # Safety
 * `prefix` must be null or a NUL-terminated string; `out` must be
 * valid for writes.
 */
enum QfStatus qf_verify_identities(const char *prefix, struct QfVerifySummary *out);

/**
 * Exact X-detection block map; `consumed` is the state spent on the
 * parity check.
 *
 * # Safety
 * All pointers must be valid for reads (`out` for writes).
 */
enum QfStatus qf_xdetect(const struct QfErrorDistribution *input,
                         const struct QfErrorDistribution *consumed,
                         struct QfBlockResult *out);

/**
 * Exact Z-detection block map over `inputs[0..7]`: the surviving
 * state followed by the six consumed ones.
 *
 * # Safety
 * `inputs` must point to seven readable distributions; `out` must be
 * valid for writes.
 */
enum QfStatus qf_zdetect(const struct QfErrorDistribution *inputs, struct QfBlockResult *out);

/**
 * Greedy nesting under the twirled preparation noise model with rate
 * `p`, stopping once the total error drops below `stop_eps`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QfStatus qf_greedy_nesting(double p,
                                uint64_t max_rounds,
                                double stop_eps,
                                struct QfNestingSummary *out);

/**
 * Bisects for the largest noise rate whose greedy nesting converges;
 * requires convergence at `lo` and divergence at `hi`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QfStatus qf_threshold_scan(double lo, double hi, double tol, double *out);

/**
 * Asymptotic consumption figures: the per-quadratic-suppression ratio
 * 2 * 7^(log_3 2) and the unamortized X-plus-Z round cost.
 *
 * # Safety
 * Both pointers must be valid for writes.
 */
enum QfStatus qf_cost_ratio(double *quadratic_amortized, double *raw_pair_composite);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QFUSION_H */
