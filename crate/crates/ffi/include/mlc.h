#ifndef MLC_H
#define MLC_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the first four match the `mlc` exit codes.
 */
typedef enum MlcStatus {
  MLC_STATUS_OK = 0,
  MLC_STATUS_USAGE = 1,
  MLC_STATUS_PRECONDITION = 2,
  MLC_STATUS_NUMERICAL = 3,
  MLC_STATUS_NULL_POINTER = 4,
  MLC_STATUS_PANIC = 5,
} MlcStatus;

/**
 * A closed triangle mesh with its edge lengths.
 */
typedef struct MlcMesh MlcMesh;

/**
 * Result of a solve.
 */
typedef struct MlcSolution MlcSolution;

/**
 * Scalar summary of a solve.
 */
typedef struct MlcReport {
  size_t iterations;
  double residual;
  double energy;
  double area;
  double cubic_norm_sq;
  double gb_residual;
  double area_identity_residual;
  double minmax_value;
} MlcReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into this library from the same thread.
 */
const char *mlc_last_error(void);

/**
 * Loads an OFF file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MlcStatus mlc_mesh_load_off(const char *path, struct MlcMesh **out);

/**
 * Builds a closed surface of the given genus with `subdivisions` rounds of
 * Loop subdivision.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MlcStatus mlc_mesh_generate(size_t genus, size_t subdivisions, struct MlcMesh **out);

/**
 * # Safety
 * `mesh` must be NULL or a handle from this library.
 */
size_t mlc_mesh_vertex_count(const struct MlcMesh *mesh);

/**
 * # Safety
 * `mesh` must be NULL or a handle from this library.
 */
size_t mlc_mesh_edge_count(const struct MlcMesh *mesh);

/**
 * # Safety
 * `mesh` must be NULL or a handle from this library.
 */
int64_t mlc_mesh_euler_characteristic(const struct MlcMesh *mesh);

/**
 * # Safety
 * `mesh` must be NULL or a handle from this library, not used afterwards.
 */
void mlc_mesh_free(struct MlcMesh *mesh);

/**
 * Spacelike solve. `beta` holds one value per edge and `tau` one per vertex;
 * either may be NULL with length 0 to mean zero. `tol <= 0` selects the
 * default tolerance.
 *
 * # Safety
 * Arrays must hold the stated number of values; `out` must be valid.
 */
enum MlcStatus mlc_solve(const struct MlcMesh *mesh,
                         const double *beta,
                         size_t beta_len,
                         const double *tau,
                         size_t tau_len,
                         double tol,
                         struct MlcSolution **out);

/**
 * # Safety
 * `solution` must be a handle from this library and `out` valid.
 */
enum MlcStatus mlc_solution_report(const struct MlcSolution *solution, struct MlcReport *out);

/**
 * Copies the conformal factor into `buffer`, which must hold exactly one
 * value per vertex.
 *
 * # Safety
 * `buffer` must have room for `len` values.
 */
enum MlcStatus mlc_solution_factor(const struct MlcSolution *solution, double *buffer, size_t len);

/**
 * Report as a JSON string, released with [`mlc_string_free`].
 *
 * # Safety
 * `solution` must be a handle from this library and `out` valid.
 */
enum MlcStatus mlc_solution_report_json(const struct MlcSolution *solution, char **out);

/**
 * # Safety
 * `solution` must be NULL or a handle from this library, not used afterwards.
 */
void mlc_solution_free(struct MlcSolution *solution);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void mlc_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MLC_H */
