#ifndef MACROBELL_H
#define MACROBELL_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum MbStatus {
  MB_STATUS_OK = 0,
  MB_STATUS_NULL_POINTER = 1,
  MB_STATUS_INVALID_UTF8 = 2,
  // Input rejected by validation (bad POVM, unnormalized state, ...).
  MB_STATUS_INVALID_INPUT = 3,
  // Numeric failure during computation.
  MB_STATUS_NUMERICAL = 4,
  // A size cap was exceeded.
  MB_STATUS_CAP_EXCEEDED = 5,
  // Internal panic caught at the boundary.
  MB_STATUS_PANIC = 6,
} MbStatus;

// Probability mass function of the collective variable.
typedef struct MbPmf MbPmf;

// Validated single-qubit POVM.
typedef struct MbPovm MbPovm;

// Centering and normalization of the collective variable.
typedef struct MbParams {
  double mu;
  double tau;
  double sigma2;
  double phi;
  // Squared width of the limit Gaussian smearing.
  double s2;
} MbParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *mb_last_error_message(void);

// Parses and validates a POVM from its JSON form. `json` may also be
// `builtin:sx`, `builtin:sy` or `builtin:sz`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum MbStatus mb_povm_from_json(const char *json, struct MbPovm **out);

// # Safety
// `povm` must come from [`mb_povm_from_json`] and not be freed twice.
void mb_povm_free(struct MbPovm *povm);

// Number of outcomes of a POVM, or 0 for a null handle.
//
// # Safety
// `povm` must be null or a live handle.
size_t mb_povm_len(const struct MbPovm *povm);

// Derived parameters; `alpha_one` nonzero selects the centered (`α = 1`)
// convention.
//
// # Safety
// `povm` must be a live handle and `out` writable.
enum MbStatus mb_derive_params(const struct MbPovm *povm, int32_t alpha_one, struct MbParams *out);

// Sign-overlap matrix element `⟨k|sgn(x)|l⟩` between oscillator number states.
//
// # Safety
// `out` must be writable.
enum MbStatus mb_sign_overlap(size_t k, size_t l, double *out);

// CHSH value for Schmidt coefficients `c_k`, settings
// `[φ_A, φ_A′, φ_B, φ_B′]` and optional smearing widths `[s_A, s_B]`
// (null for sharp measurements).
//
// # Safety
// `coeffs_re` (and `coeffs_im` unless null) must hold `len` values,
// `angles` four, `widths` two or null; `out` must be writable.
enum MbStatus mb_chsh_value(const double *coeffs_re,
                            const double *coeffs_im,
                            size_t len,
                            const double *angles,
                            const double *widths,
                            double *out);

// Maximizes the sharp-measurement CHSH value over the settings.
//
// # Safety
// Coefficient arrays as in [`mb_chsh_value`]; `angles_out` must have room
// for four values and `value_out` must be writable.
enum MbStatus mb_optimize_chsh(const double *coeffs_re,
                               const double *coeffs_im,
                               size_t len,
                               double *angles_out,
                               double *value_out);

// Exact PMF of `X = Σ(a_i - μ)/(τ N^α)` for `Σ_k c_k |N, first + k⟩`,
// with the parameters derived from the POVM in the `α = 1/2` convention.
//
// # Safety
// `povm` must be a live handle, coefficient arrays as in
// [`mb_chsh_value`], and `out` writable.
enum MbStatus mb_pmf_finite(const struct MbPovm *povm,
                            size_t n_particles,
                            size_t first,
                            const double *coeffs_re,
                            const double *coeffs_im,
                            size_t len,
                            double alpha,
                            struct MbPmf **out);

// # Safety
// `pmf` must be null or a live handle.
size_t mb_pmf_len(const struct MbPmf *pmf);

// Support points, increasing. Valid while the handle lives.
//
// # Safety
// `pmf` must be null or a live handle.
const double *mb_pmf_values(const struct MbPmf *pmf);

// Probabilities matching [`mb_pmf_values`].
//
// # Safety
// `pmf` must be null or a live handle.
const double *mb_pmf_probs(const struct MbPmf *pmf);

// # Safety
// `pmf` must come from [`mb_pmf_finite`] and not be freed twice.
void mb_pmf_free(struct MbPmf *pmf);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MACROBELL_H */
