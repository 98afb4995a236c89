#ifndef PARTDIST_H
#define PARTDIST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PdStatus {
  PD_STATUS_OK = 0,
  PD_STATUS_INVALID_INPUT = 1,
  PD_STATUS_DIMENSION_MISMATCH = 2,
  PD_STATUS_NOT_PSD = 3,
  PD_STATUS_NOT_HERMITIAN = 4,
  PD_STATUS_NORMALIZATION = 5,
  PD_STATUS_INTERNAL = 6,
  PD_STATUS_PARSE = 7,
  PD_STATUS_IO = 8,
  PD_STATUS_NULL_POINTER = 9,
  PD_STATUS_PANIC = 10,
} PdStatus;

typedef enum PdFamily {
  // Element traces at most one, at most `d^2` outcomes.
  PD_FAMILY_A = 0,
  // Element traces at least one.
  PD_FAMILY_B = 1,
} PdFamily;

// Opaque density matrix.
typedef struct PdDensity PdDensity;

// Opaque POVM.
typedef struct PdPovm PdPovm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *pd_last_error(void);

// Library version as a static NUL-terminated string.
const char *pd_version(void);

// Validates and copies a `dim x dim` density matrix.
//
// # Safety
// `re` (and `im` unless null) must point to `dim * dim` doubles; `out`
// must be writable.
enum PdStatus pd_density_new(const double *re,
                             const double *im,
                             size_t dim,
                             struct PdDensity **out);

// Haar-random pure state.
//
// # Safety
// `out` must be writable.
enum PdStatus pd_density_random_pure(size_t dim, uint64_t seed, struct PdDensity **out);

// Random mixed state of the given rank.
//
// # Safety
// `out` must be writable.
enum PdStatus pd_density_random_mixed(size_t dim,
                                      size_t rank,
                                      uint64_t seed,
                                      struct PdDensity **out);

// # Safety
// `rho` must be null or a handle from this library not yet freed.
void pd_density_free(struct PdDensity *rho);

// Dimension of a density matrix, 0 for a null handle.
//
// # Safety
// `rho` must be null or a live handle.
size_t pd_density_dim(const struct PdDensity *rho);

// Copies the entries into caller buffers of `dim * dim` doubles each.
//
// # Safety
// `rho` must be a live handle; `re` and `im` must be writable for
// `dim * dim` doubles.
enum PdStatus pd_density_entries(const struct PdDensity *rho, double *re, double *im);

// Validates `count` elements of size `dim x dim`, stored one after another.
//
// # Safety
// `re` (and `im` unless null) must point to `count * dim * dim` doubles;
// `out` must be writable.
enum PdStatus pd_povm_new(const double *re,
                          const double *im,
                          size_t dim,
                          size_t count,
                          struct PdPovm **out);

// Random rank-one POVM with `m` outcomes.
//
// # Safety
// `out` must be writable.
enum PdStatus pd_povm_random_rank_one(size_t dim, size_t m, uint64_t seed, struct PdPovm **out);

// # Safety
// `povm` must be null or a handle from this library not yet freed.
void pd_povm_free(struct PdPovm *povm);

// Outcome count, 0 for a null handle.
//
// # Safety
// `povm` must be null or a live handle.
size_t pd_povm_len(const struct PdPovm *povm);

// Ky Fan `k`-norm of a `rows x cols` matrix.
//
// # Safety
// `re` (and `im` unless null) must point to `rows * cols` doubles; `out`
// must be writable.
enum PdStatus pd_ky_fan_norm(const double *re,
                             const double *im,
                             size_t rows,
                             size_t cols,
                             size_t k,
                             double *out);

// `D_k = ||rho0 - rho1||_(k) / 2`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum PdStatus pd_partitioned_trace_distance(const struct PdDensity *rho0,
                                            const struct PdDensity *rho1,
                                            size_t k,
                                            double *out);

// Uhlmann fidelity `F_0`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum PdStatus pd_fidelity(const struct PdDensity *rho0, const struct PdDensity *rho1, double *out);

// Partial fidelity `F_k`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum PdStatus pd_partial_fidelity(const struct PdDensity *rho0,
                                  const struct PdDensity *rho1,
                                  size_t k,
                                  double *out);

// Minimal error probability `(1 - D_tr) / 2`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum PdStatus pd_pe_quantum(const struct PdDensity *rho0,
                            const struct PdDensity *rho1,
                            double *out);

// `SD_k` of the statistics induced by `povm`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum PdStatus pd_sd_k_povm(const struct PdDensity *rho0,
                           const struct PdDensity *rho1,
                           const struct PdPovm *povm,
                           size_t k,
                           double *out);

// Multi-start estimate of `SD_k` over a POVM family. The best POVM is
// returned through `best_povm` unless it is null.
//
// # Safety
// Handles must be live; `value` must be writable; `best_povm` must be null
// or writable.
enum PdStatus pd_estimate_sd_k(const struct PdDensity *rho0,
                               const struct PdDensity *rho1,
                               size_t k,
                               enum PdFamily family,
                               size_t budget,
                               uint64_t seed,
                               double *value,
                               struct PdPovm **best_povm);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARTDIST_H */
