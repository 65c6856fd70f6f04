#ifndef DENSMETRIC_H
#define DENSMETRIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Bumped on any incompatible change to the functions or types below.
 */
#define DM_ABI_VERSION 1

typedef enum DmStatus {
  DM_STATUS_OK = 0,
  DM_STATUS_NULL_POINTER = 1,
  DM_STATUS_INVALID_UTF8 = 2,
  DM_STATUS_PARSE = 3,
  DM_STATUS_BUDGET = 4,
  DM_STATUS_RANGE = 5,
  DM_STATUS_INDEX_BEYOND = 6,
  DM_STATUS_INVALID_ARGUMENT = 7,
  DM_STATUS_BUFFER_TOO_SMALL = 8,
  DM_STATUS_PANIC = 9,
} DmStatus;

/**
 * Opaque handle to a sequence.
 */
typedef struct DmSequence DmSequence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

uint32_t dm_abi_version(void);

/**
 * Copies the last error message of this thread into `buf`. Returns the
 * message length without the terminator, even when `buf` is too small.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t dm_last_error(char *buf, size_t len);

/**
 * Parses a set expression such as `symdiff(cr:1/2, not(evens))`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum DmStatus dm_sequence_parse(const char *spec, struct DmSequence **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `seq` must come from [`dm_sequence_parse`] and not be used afterwards.
 */
void dm_sequence_free(struct DmSequence *seq);

/**
 * Bit at a decimal index of any size.
 *
 * # Safety
 * `seq` must be a live handle, `index_decimal` NUL-terminated, `out` writable.
 */
enum DmStatus dm_sequence_bit(const struct DmSequence *seq,
                              const char *index_decimal,
                              uint8_t *out);

/**
 * Writes bits `0..n` as bytes 0/1 into `buf`, which holds `len` bytes.
 *
 * # Safety
 * `seq` must be a live handle and `buf` point to `len` writable bytes.
 */
enum DmStatus dm_sequence_prefix(const struct DmSequence *seq,
                                 uint64_t n,
                                 uint8_t *buf,
                                 size_t len);

/**
 * `ρ_n` as an exact `p/q` string.
 *
 * # Safety
 * `seq` must be a live handle, `n_decimal` NUL-terminated, `buf` hold `len` bytes.
 */
enum DmStatus dm_sequence_rho(const struct DmSequence *seq,
                              const char *n_decimal,
                              char *buf,
                              size_t len);

/**
 * The δ surrogate between `a` and `b`: the largest `ρ_n(a △ b)` over
 * checkpoints `n ∈ [warmup, limit]` of the geometric grid with ratio 5/4.
 * Writes it exactly into `buf` and approximately into `approx` (may be null).
 *
 * # Safety
 * Handles must be live, `buf` hold `len` bytes, `approx` be null or writable.
 */
enum DmStatus dm_delta(const struct DmSequence *a,
                       const struct DmSequence *b,
                       uint64_t warmup,
                       uint64_t limit,
                       char *buf,
                       size_t len,
                       double *approx);

/**
 * Bit of the balanced-tree string selected by `directions` (a string of
 * `0`/`1`) at a decimal index below `l_{|directions|}`.
 *
 * # Safety
 * Strings must be NUL-terminated and `out` writable.
 */
enum DmStatus dm_tree_bit(const char *directions, const char *index_decimal, uint8_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DENSMETRIC_H */
