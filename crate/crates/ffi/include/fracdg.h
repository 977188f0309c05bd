#ifndef FRACDG_H
#define FRACDG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FdgStatus {
  FDG_STATUS_OK = 0,
  FDG_STATUS_NULL_POINTER = 1,
  FDG_STATUS_INVALID_ARGUMENT = 2,
  FDG_STATUS_CONFIG = 3,
  FDG_STATUS_MESH = 4,
  FDG_STATUS_SOLVER = 5,
  FDG_STATUS_IO = 6,
  FDG_STATUS_PANIC = 7,
} FdgStatus;

/**
 * Solution of the full-dimensional reference model.
 */
typedef struct FdgFull FdgFull;

/**
 * Problem definition: a preset with its aperture scale.
 */
typedef struct FdgProblem FdgProblem;

/**
 * Solution of one reduced variant.
 */
typedef struct FdgReduced FdgReduced;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next `fdg_*` call on the same thread.
 */
const char *fdg_last_error(void);

/**
 * Crate version as a static NUL-terminated string.
 */
const char *fdg_version(void);

/**
 * Creates one of the built-in problems (`perp-asym`, `perp-sym`,
 * `tangential`, `manufactured`) with aperture scale `d0`.
 *
 * # Safety
 * `preset` must be a NUL-terminated string; `out` must be writable.
 */
enum FdgStatus fdg_problem_new(const char *preset, double d0, struct FdgProblem **out);

/**
 * # Safety
 * `p` must come from [`fdg_problem_new`] and not be used afterwards.
 */
void fdg_problem_free(struct FdgProblem *p);

/**
 * Left-hand side of the sufficient coercivity bound and whether it stays below 16.
 *
 * # Safety
 * `problem` must be a live handle; `lhs` and `satisfied` must be writable.
 */
enum FdgStatus fdg_wellposedness(const struct FdgProblem *problem, double *lhs, bool *satisfied);

/**
 * Solves reduced variant `I`, `I-R`, `II` or `II-R` with mesh size `h` and
 * polynomial degree `degree` in bulk and fracture.
 *
 * # Safety
 * `problem` must be a live handle, `variant` NUL-terminated, `out` writable.
 */
enum FdgStatus fdg_solve_reduced(const struct FdgProblem *problem,
                                 const char *variant,
                                 double h,
                                 uint32_t degree,
                                 struct FdgReduced **out);

/**
 * # Safety
 * `s` must come from [`fdg_solve_reduced`] and not be used afterwards.
 */
void fdg_reduced_free(struct FdgReduced *s);

/**
 * Fracture pressure `p_Γ(t)`.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum FdgStatus fdg_reduced_pressure(const struct FdgReduced *s, double t, double *out);

/**
 * Bulk pressure at `(x, y)`.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum FdgStatus fdg_reduced_bulk_pressure(const struct FdgReduced *s,
                                         double x,
                                         double y,
                                         double *out);

/**
 * Numbers of bulk and fracture unknowns.
 *
 * # Safety
 * `s` must be a live handle; `bulk` and `fracture` writable.
 */
enum FdgStatus fdg_reduced_dofs(const struct FdgReduced *s, size_t *bulk, size_t *fracture);

/**
 * Solves the full-dimensional model with the fracture resolved by elements.
 *
 * # Safety
 * `problem` must be a live handle and `out` writable.
 */
enum FdgStatus fdg_solve_full(const struct FdgProblem *problem,
                              double h,
                              uint32_t degree,
                              struct FdgFull **out);

/**
 * # Safety
 * `s` must come from [`fdg_solve_full`] and not be used afterwards.
 */
void fdg_full_free(struct FdgFull *s);

/**
 * Pressure of the full model at `(x, y)`.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum FdgStatus fdg_full_pressure(const struct FdgFull *s, double x, double y, double *out);

/**
 * `L2(Γ)` distance between the fracture pressure of `reduced` and the
 * transversal average of `full`.
 *
 * # Safety
 * Both handles must be live and `out` writable.
 */
enum FdgStatus fdg_interface_error(const struct FdgReduced *reduced,
                                   const struct FdgFull *full,
                                   double *out);

/**
 * Runs the experiment in the TOML file `config` and writes its outputs to
 * `out_dir`. Returns [`FdgStatus::Solver`] when some rows failed.
 *
 * # Safety
 * Both arguments must be NUL-terminated strings.
 */
enum FdgStatus fdg_run_config(const char *config, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACDG_H */
