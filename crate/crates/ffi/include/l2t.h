#ifndef L2T_H
#define L2T_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum L2tStatus {
  L2T_STATUS_OK = 0,
  L2T_STATUS_NULL_POINTER = 1,
  L2T_STATUS_INVALID_INPUT = 2,
  L2T_STATUS_NOT_WEAKLY_ACYCLIC = 3,
  L2T_STATUS_NOT_DETERMINANT_CLASS = 4,
  L2T_STATUS_PANIC = 5,
} L2tStatus;

/**
 * Based chain complex over C[Z^k].
 */
typedef struct L2tComplex L2tComplex;

/**
 * Graph manifold with fiber images.
 */
typedef struct L2tGraph L2tGraph;

/**
 * Laurent polynomial over C[Z^k].
 */
typedef struct L2tLaurent L2tLaurent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call on the same thread.
 */
const char *l2t_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *l2t_version(void);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum L2tStatus l2t_laurent_from_json(const char *json, struct L2tLaurent **out);

/**
 * # Safety
 * `p` must come from `l2t_laurent_from_json` or be NULL.
 */
void l2t_laurent_free(struct L2tLaurent *p);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum L2tStatus l2t_complex_from_json(const char *json, struct L2tComplex **out);

/**
 * # Safety
 * `p` must come from `l2t_complex_from_json` or be NULL.
 */
void l2t_complex_free(struct L2tComplex *p);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum L2tStatus l2t_graph_from_json(const char *json, struct L2tGraph **out);

/**
 * # Safety
 * `p` must come from `l2t_graph_from_json` or be NULL.
 */
void l2t_graph_free(struct L2tGraph *p);

/**
 * Mahler measure; `tol` is the quadrature tolerance for several variables.
 *
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
enum L2tStatus l2t_mahler(const struct L2tLaurent *p, double tol, double *out);

/**
 * L2-torsion by the subset method. Status failures are reported through
 * the return code.
 *
 * # Safety
 * `c` must be a live handle and `out` a valid pointer.
 */
enum L2tStatus l2t_torsion(const struct L2tComplex *c, double tol, uint64_t seed, double *out);

/**
 * Closed-form twisted torsion of a graph manifold.
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum L2tStatus l2t_graph_torsion(const struct L2tGraph *m, double *out);

/**
 * Thurston norm of the class stored on the pieces.
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum L2tStatus l2t_graph_thurston_norm(const struct L2tGraph *m, double *out);

/**
 * L2-Alexander torsion of a graph manifold at `t` for the stored class;
 * nonzero `symmetric` selects the symmetric normalization.
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum L2tStatus l2t_graph_alexander(const struct L2tGraph *m, double t, int symmetric, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* L2T_H */
