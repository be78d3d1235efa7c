#ifndef SOCINT_H
#define SOCINT_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum SocintStatus {
  SOCINT_STATUS_OK = 0,
  SOCINT_STATUS_NULL_POINTER = 1,
  SOCINT_STATUS_INVALID_ARGUMENT = 2,
  SOCINT_STATUS_CAP_EXCEEDED = 3,
  SOCINT_STATUS_PARSE_ERROR = 4,
  SOCINT_STATUS_PANIC = 5,
} SocintStatus;

// A finite probability distribution.
typedef struct SocintDistribution SocintDistribution;

// The type-class table of an i.i.d. source at one block length.
typedef struct SocintTable SocintTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread. The pointer stays valid
// until the next failing call on the same thread.
const char *socint_last_error(void);

// Library version as a static NUL-terminated string.
const char *socint_version(void);

// Builds a distribution from `len` probabilities (labels `0..len`).
//
// # Safety
// `probs` must point to `len` readable doubles; `out` must be writable.
enum SocintStatus socint_distribution_new(const double *probs,
                                          uintptr_t len,
                                          struct SocintDistribution **out);

// Parses `label:prob,...` or a bare probability list.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum SocintStatus socint_distribution_parse(const char *text, struct SocintDistribution **out);

// # Safety
// `d` must be null or a handle from this library not yet freed.
void socint_distribution_free(struct SocintDistribution *d);

// Shannon entropy in nats.
//
// # Safety
// `d` must be a live handle; `out` must be writable.
enum SocintStatus socint_distribution_entropy(const struct SocintDistribution *d, double *out);

// Varentropy in nats².
//
// # Safety
// `d` must be a live handle; `out` must be writable.
enum SocintStatus socint_distribution_varentropy(const struct SocintDistribution *d, double *out);

// Type-class table of the `n`-fold product of `d`.
//
// # Safety
// `d` must be a live handle; `out` must be writable.
enum SocintStatus socint_table_new(const struct SocintDistribution *d,
                                   uint64_t n,
                                   struct SocintTable **out);

// # Safety
// `t` must be null or a handle from this library not yet freed.
void socint_table_free(struct SocintTable *t);

// Number of type classes in the table.
//
// # Safety
// `t` must be a live handle; `out` must be writable.
enum SocintStatus socint_table_class_count(const struct SocintTable *t, uintptr_t *out);

// `ln` of the smallest code size with error at most `eps`.
//
// # Safety
// `t` must be a live handle; `out` must be writable.
enum SocintStatus socint_min_log_code_size(const struct SocintTable *t, double eps, double *out);

// `ln` of the largest greedy-extractor size with distance at most `eps`,
// and that extractor's distance.
//
// # Safety
// `t` must be a live handle; both out-pointers must be writable.
enum SocintStatus socint_max_log_extractor_size(const struct SocintTable *t,
                                                double eps,
                                                double *out_log_size,
                                                double *out_distance);

// Distance to uniform of the greedy extractor onto `floor(e^{log_m})` bins.
//
// # Safety
// `t` must be a live handle; `out` must be writable.
enum SocintStatus socint_extractor_distance(const struct SocintTable *t, double log_m, double *out);

// Distance from the table's law to the nearest flat distribution on a subset.
//
// # Safety
// `t` must be a live handle; `out` must be writable.
enum SocintStatus socint_delta_gap(const struct SocintTable *t, double *out);

// Builds the joint code/extractor pair at `(a, b)` and reports its decoding
// error, output distance and the gap they must jointly cover.
//
// # Safety
// `t` must be a live handle; all out-pointers must be writable.
enum SocintStatus socint_joint_pair(const struct SocintTable *t,
                                    double a,
                                    double b,
                                    double *out_code_error,
                                    double *out_extractor_distance,
                                    double *out_delta);

// `√V Φ⁻¹(eps)`.
//
// # Safety
// `out` must be writable.
enum SocintStatus socint_gaussian_second_order(double v, double eps, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOCINT_H */
