#ifndef GZSL_AGE_H
#define GZSL_AGE_H

/* This file is generated by cbindgen from gzsl-age-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code of every fallible call.
enum GaStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  GA_STATUS_OK = 0,
  // A required pointer argument was null.
  GA_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  GA_STATUS_INVALID_UTF8 = 2,
  // The input document could not be parsed.
  GA_STATUS_PARSE_FAILED = 3,
  // A numeric or structural argument was out of range.
  GA_STATUS_INVALID_ARGUMENT = 4,
  // The operation itself failed; see `ga_last_error`.
  GA_STATUS_OPERATION_FAILED = 5,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum GaStatus GaStatus;
#else
typedef int32_t GaStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Opaque handle to a parsed annotation manifest.
typedef struct GaManifest GaManifest;

// Opaque handle to a constructed split.
typedef struct GaSplit GaSplit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *ga_last_error(void);

// Release a string returned by this library.
//
// # Safety
// `s` must be a pointer previously returned through an out-parameter of
// this library, not yet freed, or null.
void ga_string_free(char *s);

// Parse an annotation manifest from an in-memory CSV document.
//
// # Safety
// `data` must point to `len` readable bytes; `dataset_name` must be a valid
// NUL-terminated string; `out` must be a valid pointer. On `GA_STATUS_OK`
// the caller owns the handle and must release it with `ga_manifest_free`.
GaStatus ga_manifest_parse(const uint8_t *data,
                           size_t len,
                           const char *dataset_name,
                           struct GaManifest **out);

// Release a manifest handle.
//
// # Safety
// `manifest` must come from this library and not be freed twice; null is a
// no-op.
void ga_manifest_free(struct GaManifest *manifest);

// Number of records in the manifest; 0 for a null handle.
//
// # Safety
// `manifest` must be a live handle or null.
size_t ga_manifest_record_count(const struct GaManifest *manifest);

// Whether every record carries a subject id; false for a null handle.
//
// # Safety
// `manifest` must be a live handle or null.
bool ga_manifest_has_subject_ids(const struct GaManifest *manifest);

// Drop records whose face detection failed, producing a new manifest
// handle. `removed_out` (nullable) receives the number of dropped records.
//
// # Safety
// `manifest` must be a live handle; `out` must be valid; `removed_out` may
// be null. The new handle must be released with `ga_manifest_free`.
GaStatus ga_manifest_filter_faces(const struct GaManifest *manifest,
                                  struct GaManifest **out,
                                  size_t *removed_out);

// Build a split. Manifests with subject ids use the deterministic greedy
// path; manifests without them require `has_seed` and use the seeded
// age-only path.
//
// # Safety
// `manifest` must be a live handle; `out` must be valid. On `GA_STATUS_OK`
// the caller owns the split handle and must release it with
// `ga_split_free`.
GaStatus ga_split_build(const struct GaManifest *manifest,
                        uint32_t a_min,
                        uint32_t a_max,
                        double alpha,
                        double beta,
                        bool has_seed,
                        uint64_t seed,
                        struct GaSplit **out);

// Release a split handle.
//
// # Safety
// `split` must come from this library and not be freed twice; null is a
// no-op.
void ga_split_free(struct GaSplit *split);

// Number of assigned samples; 0 for a null handle.
//
// # Safety
// `split` must be a live handle or null.
size_t ga_split_assigned_count(const struct GaSplit *split);

// Number of discarded samples; 0 for a null handle.
//
// # Safety
// `split` must be a live handle or null.
size_t ga_split_discarded_count(const struct GaSplit *split);

// Per-folder assigned counts, written to `counts_out[0..5]` in folder order
// (seen train, seen val, seen test, unseen val, unseen test).
//
// # Safety
// `split` must be a live handle; `counts_out` must point to at least five
// writable `size_t` slots.
GaStatus ga_split_folder_counts(const struct GaSplit *split, size_t *counts_out);

// Serialize the split as the `sample_id,folder,status,reason` table.
//
// # Safety
// `split` must be a live handle; `csv_out` must be valid. The returned
// string must be released with `ga_string_free`.
GaStatus ga_split_to_csv(const struct GaSplit *split, char **csv_out);

// Summary (targets, achieved counts, deficits, provenance) as JSON.
// `manifest` must be the face-filtered manifest the split was built from.
//
// # Safety
// Both handles must be live; `json_out` must be valid. The returned string
// must be released with `ga_string_free`.
GaStatus ga_split_summary_json(const struct GaSplit *split,
                               const struct GaManifest *manifest,
                               char **json_out);

// Per-folder stats (counts, rounded percentages) as JSON.
//
// # Safety
// `split` must be a live handle; `json_out` must be valid. The returned
// string must be released with `ga_string_free`.
GaStatus ga_split_stats_json(const struct GaSplit *split, char **json_out);

// Verify a split against its source manifest. `count_out` receives the
// violation count; `violations_json_out` (nullable) receives the violation
// list as JSON.
//
// # Safety
// Both handles must be live; `count_out` must be valid;
// `violations_json_out` may be null. Any returned string must be released
// with `ga_string_free`.
GaStatus ga_split_verify(const struct GaSplit *split,
                         const struct GaManifest *manifest,
                         char **violations_json_out,
                         size_t *count_out);

// Harmonic mean of two nonnegative errors.
//
// # Safety
// `out` must be a valid pointer.
GaStatus ga_harmonic_mean(double seen, double unseen, double *out);

// Expectation of the age under a distribution over the 0..len-1 grid.
//
// # Safety
// `probs` must point to `len` readable doubles; `out` must be valid.
GaStatus ga_expected_age(const double *probs, size_t len, double *out);

// Median age (smallest grid age whose cumulative probability reaches 0.5)
// over the 0..len-1 grid.
//
// # Safety
// `probs` must point to `len` readable doubles; `out` must be valid.
GaStatus ga_median_age(const double *probs, size_t len, uint32_t *out);

// Rank decode: the predicted age is the count of per-threshold
// probabilities strictly above `threshold`, over the 0..len grid.
//
// # Safety
// `probs` must point to `len` readable doubles; `out` must be valid.
GaStatus ga_rank_decode(const double *probs, size_t len, double threshold, uint32_t *out);

// Chained conditional decode: conditionals are multiplied into cumulative
// probabilities before thresholding, over the 0..len grid.
//
// # Safety
// `conditionals` must point to `len` readable doubles; `out` must be valid.
GaStatus ga_corn_decode(const double *conditionals, size_t len, double threshold, uint32_t *out);

// Run the kernel self-test battery. `failures_out` receives the number of
// failed checks; the rendered report is stored as the last error whenever
// any check fails.
//
// # Safety
// `failures_out` must be a valid pointer.
GaStatus ga_kernel_self_test(size_t *failures_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GZSL_AGE_H */
