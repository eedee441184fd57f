#ifndef LAMINATE_BLOCH_H
#define LAMINATE_BLOCH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Branch classification of one multiplier.
 */
typedef enum LbClassification {
  LB_CLASSIFICATION_SHEAR_PROPAGATING = 0,
  LB_CLASSIFICATION_SHEAR_EVANESCENT = 1,
  LB_CLASSIFICATION_COMPRESSIONAL_PROPAGATING = 2,
  LB_CLASSIFICATION_COMPRESSIONAL_EVANESCENT = 3,
  LB_CLASSIFICATION_THERMAL_DAMPING = 4,
  LB_CLASSIFICATION_DIFFUSIVE_DAMPING = 5,
  LB_CLASSIFICATION_MIXED = 6,
} LbClassification;

/**
 * Result of every fallible call.
 */
typedef enum LbStatus {
  LB_STATUS_OK = 0,
  LB_STATUS_NULL_POINTER = 1,
  LB_STATUS_INVALID_ARGUMENT = 2,
  LB_STATUS_CONFIG = 3,
  LB_STATUS_NUMERIC = 4,
  LB_STATUS_INDEX_OUT_OF_RANGE = 5,
  LB_STATUS_PANIC = 6,
} LbStatus;

/**
 * Opaque unit cell.
 */
typedef struct LbCell LbCell;

/**
 * Opaque Floquet solution at one (k₁, ω).
 */
typedef struct LbSolution LbSolution;

/**
 * One Floquet multiplier λ = e^{i(k2r* + i k2i*)}. λ itself can overflow a
 * double, so it is given through ln λ = ln_abs + i·arg.
 */
typedef struct LbMultiplier {
  double k2r_star;
  double k2i_star;
  double ln_abs;
  double arg;
  enum LbClassification classification;
  /**
   * Index of the reciprocal partner 1/λ.
   */
  uint32_t partner;
} LbMultiplier;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *lb_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t lb_last_error(char *buf, uintptr_t len);

/**
 * The two-layer SOFC cell (1 mm + 1 mm), fully coupled.
 *
 * # Safety
 * `out` must be null or valid for one pointer write.
 */
enum LbStatus lb_cell_sofc_bilayer(struct LbCell **out);

/**
 * Builds the cell of a run-configuration JSON document (only `cell` is
 * used; the rest is validated).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` valid for one pointer write.
 */
enum LbStatus lb_cell_from_config_json(const char *json, struct LbCell **out);

/**
 * Copy of `cell` with every coupling coefficient scaled by `delta` ≥ 0.
 *
 * # Safety
 * `cell` must be a live handle; `out` valid for one pointer write.
 */
enum LbStatus lb_cell_with_coupling(const struct LbCell *cell, double delta, struct LbCell **out);

/**
 * Cell period L in meters, or NaN for a null handle.
 *
 * # Safety
 * `cell` must be null or a live handle.
 */
double lb_cell_period(const struct LbCell *cell);

/**
 * # Safety
 * `cell` must be null or a handle not yet freed.
 */
void lb_cell_free(struct LbCell *cell);

/**
 * The eight Floquet multipliers at real k₁* = k₁L and ω* (rad/s).
 * `precision` is "auto", "double", "dd", "qd" or "mp:<bits>"; null means auto.
 *
 * # Safety
 * `cell` must be a live handle, `precision` null or NUL-terminated, `out`
 * valid for one pointer write.
 */
enum LbStatus lb_solve_floquet(const struct LbCell *cell,
                               double k1_star,
                               double omega_star,
                               const char *precision,
                               uint64_t seed,
                               struct LbSolution **out);

/**
 * Number of multipliers (8), or 0 for a null handle.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
uintptr_t lb_solution_len(const struct LbSolution *sol);

/**
 * Significand bits the solution was computed with, or 0 for a null handle.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
uint32_t lb_solution_precision_bits(const struct LbSolution *sol);

/**
 * log2 |det T − 1| of the solved cell transfer matrix.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
double lb_solution_log2_det_residual(const struct LbSolution *sol);

/**
 * Multiplier `index` with the default band threshold (|k2i*| < 1e-6).
 *
 * # Safety
 * `sol` must be a live handle; `out` valid for one write.
 */
enum LbStatus lb_solution_multiplier(const struct LbSolution *sol,
                                     uintptr_t index,
                                     struct LbMultiplier *out);

/**
 * # Safety
 * `sol` must be null or a handle not yet freed.
 */
void lb_solution_free(struct LbSolution *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LAMINATE_BLOCH_H */
