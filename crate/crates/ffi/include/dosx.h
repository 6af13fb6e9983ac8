#ifndef DOSX_H
#define DOSX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DosxDistribution {
  DOSX_DISTRIBUTION_CONSTANT = 0,
  DOSX_DISTRIBUTION_UNIFORM_ZERO_ONE = 1,
  DOSX_DISTRIBUTION_RADEMACHER = 2,
} DosxDistribution;

/*
 Status codes; `DOSX_STATUS_OK` is zero.
 */
typedef enum DosxStatus {
  DOSX_STATUS_OK = 0,
  DOSX_STATUS_NULL_POINTER = 1,
  DOSX_STATUS_INVALID_ARGUMENT = 2,
  DOSX_STATUS_DOMAIN = 3,
  DOSX_STATUS_SIZE_LIMIT = 4,
  DOSX_STATUS_OUTSIDE_BASIS = 5,
  DOSX_STATUS_NUMERICAL = 6,
  DOSX_STATUS_UNSUPPORTED = 7,
  DOSX_STATUS_PANIC = 8,
} DosxStatus;

/*
 Box, profile and weight law.
 */
typedef struct DosxModel DosxModel;

/*
 One plane-wave component `c φ_p` with `p = idx / L`; unused axes are zero.
 */
typedef struct DosxTerm {
  int32_t idx[3];
  double re;
  double im;
} DosxTerm;

/*
 A value with its standard error (zero for exact evaluations) and its
 numerical error budget.
 */
typedef struct DosxValue {
  double re;
  double im;
  double stderr;
  double numerical_error;
} DosxValue;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *dosx_version(void);

/*
 Message of the last failed call on this thread, or null. Valid until the
 next failing call on the same thread.
 */
const char *dosx_last_error_message(void);

/*
 Creates a model. `param` is the value of the constant law and is ignored
 otherwise. On success `*out` owns a handle to release with
 [`dosx_model_free`].

 # Safety
 `out` must be valid for writes.
 */
enum DosxStatus dosx_model_new(double side,
                               uint32_t dim,
                               double p_max,
                               double width,
                               enum DosxDistribution distribution,
                               double param,
                               struct DosxModel **out);

/*
 Releases a model; null is ignored.

 # Safety
 `model` must come from [`dosx_model_new`] and not be used afterwards.
 */
void dosx_model_free(struct DosxModel *model);

/*
 Number of plane waves in the model's truncated basis.

 # Safety
 `model` must be a live handle or null.
 */
size_t dosx_model_basis_len(const struct DosxModel *model);

/*
 Exact `T_n(z)[ψ_1, ψ_2]`.

 # Safety
 `model` must be live; `psi1`/`psi2` must point to `len1`/`len2` terms;
 `out` must be valid for writes.
 */
enum DosxStatus dosx_t_coeff_det(const struct DosxModel *model,
                                 uint32_t n,
                                 double z_re,
                                 double z_im,
                                 const struct DosxTerm *psi1,
                                 size_t len1,
                                 const struct DosxTerm *psi2,
                                 size_t len2,
                                 struct DosxValue *out);

/*
 Smoothed coefficient `S_n` at `E + iη` with accuracy parameter `ε`, by the
 deterministic partition sum.

 # Safety
 As for [`dosx_t_coeff_det`].
 */
enum DosxStatus dosx_s_coeff(const struct DosxModel *model,
                             uint32_t n,
                             double e,
                             double eta,
                             double epsilon,
                             const struct DosxTerm *psi1,
                             size_t len1,
                             const struct DosxTerm *psi2,
                             size_t len2,
                             struct DosxValue *out);

/*
 Monte Carlo `E⟨ψ_1, (H_λ - z)^{-1} ψ_2⟩` from the dense oracle.

 # Safety
 As for [`dosx_t_coeff_det`].
 */
enum DosxStatus dosx_expect_resolvent(const struct DosxModel *model,
                                      double lambda,
                                      double z_re,
                                      double z_im,
                                      const struct DosxTerm *psi1,
                                      size_t len1,
                                      const struct DosxTerm *psi2,
                                      size_t len2,
                                      uint64_t samples,
                                      uint64_t seed,
                                      struct DosxValue *out);

/*
 Monte Carlo `L^{-d} E Tr f_{E,η}(H_λ)`; the result is in `re`.

 # Safety
 `model` must be live and `out` valid for writes.
 */
enum DosxStatus dosx_dos_direct(const struct DosxModel *model,
                                double e,
                                double eta,
                                double lambda,
                                uint64_t samples,
                                uint64_t seed,
                                struct DosxValue *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DOSX_H */
