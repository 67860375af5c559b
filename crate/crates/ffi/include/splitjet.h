#ifndef SPLITJET_H
#define SPLITJET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SjStatus {
  SJ_STATUS_OK = 0,
  SJ_STATUS_NULL_POINTER = 1,
  SJ_STATUS_INVALID_UTF8 = 2,
  SJ_STATUS_INVALID_FIELD = 3,
  SJ_STATUS_PARSE_ERROR = 4,
  SJ_STATUS_COMPUTATION_ERROR = 5,
  /**
   * The search bound was reached without a certificate.
   */
  SJ_STATUS_NOT_CERTIFIED = 6,
  SJ_STATUS_PANIC = 7,
} SjStatus;

typedef struct SjField SjField;

typedef struct SjJet SjJet;

typedef struct SjSplit SjSplit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *sj_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void sj_string_free(char *s);

/**
 * Parses `q`, `fp:7`, `f2k:4` or `f2k:4:modulus=t4+t+1`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` writable.
 */
enum SjStatus sj_field_parse(const char *spec, struct SjField **out);

/**
 * # Safety
 * `field` must be null or a handle from [`sj_field_parse`].
 */
void sj_field_free(struct SjField *field);

/**
 * Parses `text` over `field` in the comma-separated variables `vars`.
 *
 * # Safety
 * Pointers must be valid; `out` receives a new handle.
 */
enum SjStatus sj_jet_parse(const struct SjField *field,
                           const char *text,
                           const char *vars,
                           uint32_t precision,
                           struct SjJet **out);

/**
 * # Safety
 * `jet` must be null or a handle from this library.
 */
void sj_jet_free(struct SjJet *jet);

/**
 * Canonical text, with `O(deg N+1)` when `annotated` is nonzero.
 *
 * # Safety
 * `jet` must be valid; `out` receives a string for [`sj_string_free`].
 */
enum SjStatus sj_jet_to_string(const struct SjJet *jet, int32_t annotated, char **out);

/**
 * # Safety
 * `jet` must be valid and `out` writable.
 */
enum SjStatus sj_jet_hessian_rank(const struct SjJet *jet, size_t *out);

/**
 * Milnor number of `jet` read as a polynomial; [`SjStatus::NotCertified`]
 * when no certificate exists up to `max_degree`.
 *
 * # Safety
 * `jet` must be valid and `out` writable.
 */
enum SjStatus sj_milnor_number(const struct SjJet *jet, uint32_t max_degree, uint64_t *out);

/**
 * # Safety
 * `jet` must be valid and `out` writable.
 */
enum SjStatus sj_determinacy_bound(const struct SjJet *jet, uint32_t max_degree, uint64_t *out);

/**
 * Splits `jet` at `precision` and checks the result by substitution.
 *
 * # Safety
 * `jet` must be valid; `out` receives a handle for [`sj_split_free`].
 */
enum SjStatus sj_split(const struct SjJet *jet, uint32_t precision, struct SjSplit **out);

/**
 * # Safety
 * `split` must be null or a handle from [`sj_split`].
 */
void sj_split_free(struct SjSplit *split);

/**
 * # Safety
 * `split` must be valid and `out` writable.
 */
enum SjStatus sj_split_rank(const struct SjSplit *split, size_t *out);

/**
 * # Safety
 * `split` must be valid and `out` writable.
 */
enum SjStatus sj_split_verified(const struct SjSplit *split, bool *out);

/**
 * Residual part as a new jet handle in the tail variables.
 *
 * # Safety
 * `split` must be valid; `out` receives a handle for [`sj_jet_free`].
 */
enum SjStatus sj_split_residual(const struct SjSplit *split, struct SjJet **out);

/**
 * Component `index` of the splitting change as a string.
 *
 * # Safety
 * `split` must be valid; `out` receives a string for [`sj_string_free`].
 */
enum SjStatus sj_split_change_component(const struct SjSplit *split, size_t index, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPLITJET_H */
