#ifndef DIOVQA_H
#define DIOVQA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DiovqaStatus {
  DIOVQA_STATUS_OK = 0,
  DIOVQA_STATUS_NULL_POINTER = 1,
  DIOVQA_STATUS_INVALID_ARGUMENT = 2,
  DIOVQA_STATUS_BUDGET_EXCEEDED = 3,
  DIOVQA_STATUS_NUMERIC_FAILURE = 4,
  DIOVQA_STATUS_PARSE = 5,
  DIOVQA_STATUS_PANIC = 6,
} DiovqaStatus;

typedef enum DiovqaClassification {
  DIOVQA_CLASSIFICATION_CONVERGES = 0,
  DIOVQA_CLASSIFICATION_DIVERGES = 1,
  DIOVQA_CLASSIFICATION_UNDECIDED = 2,
} DiovqaClassification;

/**
 * Square complex matrix.
 */
typedef struct DiovqaMatrix DiovqaMatrix;

/**
 * Ordered set of equally sized matrices.
 */
typedef struct DiovqaVocabulary DiovqaVocabulary;

typedef struct DiovqaJsrBounds {
  double lower;
  double upper;
  uint64_t products;
  enum DiovqaClassification classification;
} DiovqaJsrBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *diovqa_last_error(void);

/**
 * Builds a `dim`×`dim` matrix from row-major real and imaginary parts.
 * `im` may be null for a real matrix.
 *
 * # Safety
 * `re` (and `im` if non-null) must point to `dim*dim` doubles; `out` must be writable.
 */
enum DiovqaStatus diovqa_matrix_new(size_t dim,
                                    const double *re,
                                    const double *im,
                                    struct DiovqaMatrix **out);

/**
 * # Safety
 * `m` must come from this library and not be freed twice. Null is ignored.
 */
void diovqa_matrix_free(struct DiovqaMatrix *m);

/**
 * Dimension of `m`, or 0 for null.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t diovqa_matrix_dim(const struct DiovqaMatrix *m);

/**
 * Copies the entries row-major into `re` and `im` (each `dim*dim` long).
 *
 * # Safety
 * `m` must be a live handle; `re` and `im` must be writable for `dim*dim` doubles.
 */
enum DiovqaStatus diovqa_matrix_entries(const struct DiovqaMatrix *m, double *re, double *im);

/**
 * `out = exp(k·A)` for complex `k = k_re + i·k_im`.
 *
 * # Safety
 * `a` must be a live handle and `out` writable.
 */
enum DiovqaStatus diovqa_matrix_exp(const struct DiovqaMatrix *a,
                                    double k_re,
                                    double k_im,
                                    struct DiovqaMatrix **out);

/**
 * Largest singular value.
 *
 * # Safety
 * `a` must be a live handle and `out` writable.
 */
enum DiovqaStatus diovqa_operator_norm(const struct DiovqaMatrix *a, double *out);

/**
 * Largest eigenvalue modulus.
 *
 * # Safety
 * `a` must be a live handle and `out` writable.
 */
enum DiovqaStatus diovqa_spectral_radius(const struct DiovqaMatrix *a, double *out);

/**
 * Empty vocabulary.
 */
struct DiovqaVocabulary *diovqa_vocabulary_new(void);

/**
 * Appends a copy of `m`.
 *
 * # Safety
 * Both handles must be live.
 */
enum DiovqaStatus diovqa_vocabulary_push(struct DiovqaVocabulary *v, const struct DiovqaMatrix *m);

/**
 * # Safety
 * `v` must be null or a live handle, freed once.
 */
void diovqa_vocabulary_free(struct DiovqaVocabulary *v);

/**
 * Joint spectral radius bounds from products up to `depth` factors.
 * A nonzero `reduce` first replaces the vocabulary by its block reduction.
 *
 * # Safety
 * `v` must be a live handle and `out` writable.
 */
enum DiovqaStatus diovqa_jsr_bounds(const struct DiovqaVocabulary *v,
                                    size_t depth,
                                    uint64_t cap,
                                    double margin,
                                    int32_t reduce,
                                    struct DiovqaJsrBounds *out);

/**
 * Real degrees of freedom for `layers` generators in dimension `n`:
 * `out[0..4]` = state, observable, one generator, all generators.
 *
 * # Safety
 * `out` must be writable for four values.
 */
enum DiovqaStatus diovqa_dof(uint64_t layers, uint64_t n, uint64_t *out);

/**
 * Number of monomials of total degree ≤ `degree` in `num_vars` variables.
 * Fails with `InvalidArgument` if the count does not fit in 64 bits.
 *
 * # Safety
 * `out` must be writable.
 */
enum DiovqaStatus diovqa_count_monomials(uint64_t num_vars, uint64_t degree, uint64_t *out);

/**
 * `⟨Ψ(φ)|O|Ψ(φ)⟩` for an instance given as JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string, `phi` must hold `len` doubles
 * (may be null when `len` is 0), `out` writable.
 */
enum DiovqaStatus diovqa_vqa_objective_json(const char *json,
                                            const double *phi,
                                            size_t len,
                                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIOVQA_H */
