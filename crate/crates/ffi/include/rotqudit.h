#ifndef ROTQUDIT_H
#define ROTQUDIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum RqStatus {
  RQ_STATUS_OK = 0,
  RQ_STATUS_NULL_POINTER = 1,
  RQ_STATUS_INVALID_ARGUMENT = 2,
  RQ_STATUS_PARSE = 3,
  RQ_STATUS_COMPUTE = 4,
  RQ_STATUS_SIZE_GUARD = 5,
  RQ_STATUS_PANIC = 6,
} RqStatus;

/**
 * Compiled gate sequence.
 */
typedef struct RqCircuit RqCircuit;

/**
 * Outcome of one trajectory propagation.
 */
typedef struct RqEvolution RqEvolution;

/**
 * Truth-table comparison of a sequence.
 */
typedef struct RqVerification {
  double fidelity;
  double max_deviation;
  double leakage;
  size_t entangler_count;
  size_t depth;
  size_t entangler_depth;
  /**
   * 1 if the sequence matches within tolerance.
   */
  uint8_t passed;
} RqVerification;

typedef struct RqEvolutionSummary {
  double f_iswap;
  double f_id;
  double fidelity_plus;
  double fidelity_minus;
  double unitarity_defect;
  double leakage;
  double pulse_area;
  /**
   * +1 for the +i branch, -1 for -i.
   */
  int32_t phase_branch;
  size_t steps;
  /**
   * Side of the square operator.
   */
  size_t dim;
} RqEvolutionSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *rq_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rq_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void rq_string_free(char *s);

/**
 * Transport timescale t₀ (μs) of a molecule preset in the reference trap.
 *
 * # Safety
 * `molecule` must be a NUL-terminated string; `out` must be writable.
 */
enum RqStatus rq_confinement_timescale(const char *molecule, double *out);

/**
 * Compiles a named gate. `encoding` may be null for the gate's default;
 * `n` sets the qubit count of cnz/toffoli; `layout` is 0 (linear) or 1
 * (tree); `branch` is the hardware entangler phase, +1 or -1.
 *
 * # Safety
 * String arguments must be NUL-terminated or null where allowed; `out`
 * must be writable.
 */
enum RqStatus rq_circuit_compile(const char *gate,
                                 const char *encoding,
                                 size_t n,
                                 uint32_t layout,
                                 int32_t branch,
                                 struct RqCircuit **out);

/**
 * Parses the line-oriented sequence format.
 *
 * # Safety
 * `source` must be NUL-terminated; `default_encoding` may be null; `out`
 * must be writable.
 */
enum RqStatus rq_circuit_from_text(const char *source,
                                   const char *default_encoding,
                                   struct RqCircuit **out);

/**
 * Text form of a circuit; free the result with [`rq_string_free`].
 *
 * # Safety
 * `circuit` must be a live handle; `out` must be writable.
 */
enum RqStatus rq_circuit_to_text(const struct RqCircuit *circuit, char **out);

/**
 * Number of native operations; 0 for a null handle.
 *
 * # Safety
 * `circuit` must be null or a live handle.
 */
size_t rq_circuit_num_ops(const struct RqCircuit *circuit);

/**
 * # Safety
 * `circuit` must be null or a live handle.
 */
size_t rq_circuit_num_qudits(const struct RqCircuit *circuit);

/**
 * Entangler applications (a power-p op counts p).
 *
 * # Safety
 * `circuit` must be null or a live handle.
 */
size_t rq_circuit_entangler_count(const struct RqCircuit *circuit);

/**
 * Compares a circuit with a named gate's truth table on hardware with
 * entangler phase `branch` (+1 or -1).
 *
 * # Safety
 * `circuit` must be a live handle, `gate` NUL-terminated, `out` writable.
 */
enum RqStatus rq_circuit_verify(const struct RqCircuit *circuit,
                                const char *gate,
                                uint32_t layout,
                                int32_t branch,
                                double tolerance,
                                struct RqVerification *out);

/**
 * # Safety
 * `circuit` must be null or a handle not yet freed.
 */
void rq_circuit_free(struct RqCircuit *circuit);

/**
 * Propagates a molecule pair along a trajectory in the reference trap.
 * `mode` may be null (secular).
 *
 * # Safety
 * Strings must be NUL-terminated (or null where allowed); `out` writable.
 */
enum RqStatus rq_evolve(const char *molecule,
                        const char *kind,
                        double tau_us,
                        const char *mode,
                        uint32_t j_max,
                        struct RqEvolution **out);

/**
 * # Safety
 * `evolution` must be a live handle; `out` writable.
 */
enum RqStatus rq_evolution_summary(const struct RqEvolution *evolution,
                                   struct RqEvolutionSummary *out);

/**
 * Copies the evolved operator row-major into `re` and `im`, each of
 * length `len` = dim².
 *
 * # Safety
 * `evolution` must be a live handle; `re` and `im` must hold `len` doubles.
 */
enum RqStatus rq_evolution_operator(const struct RqEvolution *evolution,
                                    double *re,
                                    double *im,
                                    size_t len);

/**
 * # Safety
 * `evolution` must be null or a handle not yet freed.
 */
void rq_evolution_free(struct RqEvolution *evolution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROTQUDIT_H */
