#ifndef QDBOUNDS_H
#define QDBOUNDS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/*
 Result code of every call.
 */
typedef enum QdbStatus {
  QDB_STATUS_OK = 0,
  QDB_STATUS_NULL_POINTER = 1,
  QDB_STATUS_INVALID_ARGUMENT = 2,
  QDB_STATUS_CONFIG = 3,
  QDB_STATUS_NUMERICAL = 4,
  QDB_STATUS_PANIC = 5,
} QdbStatus;

/*
 Opaque operator handle.
 */
typedef struct QdbOperator QdbOperator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *qdb_version(void);

/*
 Copy the last error message of this thread into `buf` (NUL-terminated,
 truncated to `len`). Returns the full message length without the NUL.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
uintptr_t qdb_last_error(char *buf, uintptr_t len);

/*
 Build an operator from a TOML table with `coupling`, `kernel` and
 `potential` keys, in the scenario format.

 # Safety
 `toml` must be a valid NUL-terminated string; `out` must be writable.
 */
enum QdbStatus qdb_operator_from_toml(const char *toml, struct QdbOperator **out);

/*
 Kernel `e^{-|n|}`, potential `2 cos(2 pi x)` at the golden mean, `theta = 0`.

 # Safety
 `out` must be writable.
 */
enum QdbStatus qdb_operator_long_range_cosine(double coupling, struct QdbOperator **out);

/*
 Release a handle. Null is ignored.

 # Safety
 `op` must come from a `qdb_operator_*` constructor and not be used afterwards.
 */
void qdb_operator_free(struct QdbOperator *op);

/*
 Upper bound `K` on the spectrum.

 # Safety
 `op` must be a live handle; `out` must be writable.
 */
enum QdbStatus qdb_spectrum_bound(const struct QdbOperator *op, double *out);

/*
 `G(m, n; E + i eta)` for the operator restricted to `[lo, hi]`.

 # Safety
 `op` must be a live handle; `re` and `im` must be writable.
 */
enum QdbStatus qdb_greens_entry(const struct QdbOperator *op,
                                int64_t lo,
                                int64_t hi,
                                double energy,
                                double eta,
                                int64_t m,
                                int64_t n,
                                double *re,
                                double *im);

/*
 Largest violation of the two-block resolvent identity split after `split`.

 # Safety
 `op` must be a live handle; `out` must be writable.
 */
enum QdbStatus qdb_resolvent_identity_residual(const struct QdbOperator *op,
                                               int64_t lo,
                                               int64_t hi,
                                               int64_t split,
                                               double energy,
                                               double eta,
                                               double *out);

/*
 Abel-averaged moment of order `p` at time scale `t` for a state started at `site`.

 # Safety
 `op` must be a live handle; `value` and `error_bar` must be writable.
 */
enum QdbStatus qdb_abel_moment(const struct QdbOperator *op,
                               int64_t site,
                               double p,
                               double t,
                               double *value,
                               double *error_bar);

/*
 Time-averaged correlator `a(j, n, T)` by the time route and the energy route.

 # Safety
 `op` must be a live handle; `a_time` and `a_energy` must be writable.
 */
enum QdbStatus qdb_correlator(const struct QdbOperator *op,
                              int64_t j,
                              int64_t n,
                              double t,
                              double *a_time,
                              double *a_energy);

/*
 Relative interior residual of the commutator decomposition for the
 operator's kernel and weights `amp e^{-rate |k|}`, `|k| <= radius`.

 # Safety
 `op` must be a live handle; `out` must be writable.
 */
enum QdbStatus qdb_commutator_residual(const struct QdbOperator *op,
                                       double gamma_amp,
                                       double gamma_rate,
                                       uint32_t gamma_radius,
                                       uint32_t p,
                                       uint32_t window_size,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QDBOUNDS_H */
