#ifndef SHADOW_COUPLING_H
#define SHADOW_COUPLING_H

#include <stdbool.h>
#include <stddef.h>

typedef enum ScStatus {
  SC_STATUS_OK = 0,
  SC_STATUS_NULL_POINTER = 1,
  SC_STATUS_INVALID_ARGUMENT = 2,
  SC_STATUS_NOT_IN_CONVEX_ORDER = 3,
  SC_STATUS_NOT_DOMINATED = 4,
  SC_STATUS_BUFFER_TOO_SMALL = 5,
  SC_STATUS_INTERNAL = 6,
  SC_STATUS_PANIC = 7,
} ScStatus;

typedef enum ScLiftKind {
  SC_LIFT_KIND_LEFT_CURTAIN = 0,
  SC_LIFT_KIND_RIGHT_CURTAIN = 1,
  SC_LIFT_KIND_SUNSET = 2,
  SC_LIFT_KIND_MIDDLE = 3,
} ScLiftKind;

// Opaque lifted coupling.
typedef struct ScLiftedCoupling ScLiftedCoupling;

// Opaque finitely-atomic measure.
typedef struct ScMeasure ScMeasure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *sc_last_error_message(void);

// Builds a measure from `n` positions and masses.
//
// # Safety
// `xs` and `ms` must point to `n` readable doubles; `out` must be writable.
enum ScStatus sc_measure_new(const double *xs, const double *ms, size_t n, struct ScMeasure **out);

// # Safety
// `m` must come from this library and not be freed twice.
void sc_measure_free(struct ScMeasure *m);

// Number of atoms after canonicalization.
//
// # Safety
// `m` must be a live handle or null.
size_t sc_measure_len(const struct ScMeasure *m);

// Copies the sorted atoms into `xs` and `ms`, each of capacity `cap`.
//
// # Safety
// `m` must be a live handle; `xs` and `ms` must hold `cap` doubles.
enum ScStatus sc_measure_atoms(const struct ScMeasure *m, double *xs, double *ms, size_t cap);

// Writes whether `a ≤_c b`.
//
// # Safety
// Handles must be live; `out` writable.
enum ScStatus sc_leq_convex(const struct ScMeasure *a, const struct ScMeasure *b, bool *out);

// Shadow of `source` in `target`.
//
// # Safety
// Handles must be live; `out` writable.
enum ScStatus sc_shadow(const struct ScMeasure *target,
                        const struct ScMeasure *source,
                        struct ScMeasure **out);

// Shadow coupling of `mu` and `nu` along a named lift, each piece split
// into `refine` parts.
//
// # Safety
// Handles must be live; `out` writable.
enum ScStatus sc_shadow_coupling(const struct ScMeasure *mu,
                                 const struct ScMeasure *nu,
                                 enum ScLiftKind kind,
                                 size_t refine,
                                 struct ScLiftedCoupling **out);

// # Safety
// `c` must come from this library and not be freed twice.
void sc_lifted_coupling_free(struct ScLiftedCoupling *c);

// Number of `(u0, u1, x, y, mass)` rows.
//
// # Safety
// `c` must be a live handle or null.
size_t sc_lifted_coupling_len(const struct ScLiftedCoupling *c);

// Copies the rows into five arrays of capacity `cap`.
//
// # Safety
// `c` must be a live handle; each array must hold `cap` doubles.
enum ScStatus sc_lifted_coupling_rows(const struct ScLiftedCoupling *c,
                                      double *u0,
                                      double *u1,
                                      double *x,
                                      double *y,
                                      double *mass,
                                      size_t cap);

// Runs the martingale (tolerance 1e-9), monotone-support (1e-6) and
// optimality-certificate checks; writes whether all pass.
//
// # Safety
// `c` must be a live handle; `out` writable.
enum ScStatus sc_lifted_coupling_verify(const struct ScLiftedCoupling *c, bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHADOW_COUPLING_H */
