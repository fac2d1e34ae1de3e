#ifndef SCARLAB_H
#define SCARLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ScarlabStatus {
  SCARLAB_STATUS_OK = 0,
  SCARLAB_STATUS_IO = 1,
  SCARLAB_STATUS_INVALID_ARGUMENT = 2,
  SCARLAB_STATUS_CAPACITY = 3,
  SCARLAB_STATUS_CONSISTENCY = 4,
  SCARLAB_STATUS_ACCURACY = 5,
  SCARLAB_STATUS_NULL_POINTER = 6,
  SCARLAB_STATUS_PANIC = 7,
} ScarlabStatus;

/**
 * Enumerated constrained basis.
 */
typedef struct ScarlabBasis ScarlabBasis;

/**
 * Sorted eigenvalues of one block.
 */
typedef struct ScarlabSpectrum ScarlabSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next scarlab call on the same thread.
 */
const char *scarlab_last_error(void);

/**
 * Enumerates the constrained basis of `length` sites (`periodic != 0` for a
 * ring).
 */
enum ScarlabStatus scarlab_basis_new(uint32_t length, int32_t periodic, struct ScarlabBasis **out);

/**
 * Releases a basis; NULL is ignored.
 */
void scarlab_basis_free(struct ScarlabBasis *basis);

/**
 * Number of states, or 0 for NULL.
 */
size_t scarlab_basis_len(const struct ScarlabBasis *basis);

/**
 * Packed bits of state `index` (bit `i` set when site `i` is excited).
 */
enum ScarlabStatus scarlab_basis_state(const struct ScarlabBasis *basis,
                                       size_t index,
                                       uint32_t *bits);

/**
 * Ordinal of a packed state in the basis.
 */
enum ScarlabStatus scarlab_basis_index_of(const struct ScarlabBasis *basis,
                                          uint32_t bits,
                                          size_t *index);

/**
 * Dense spectrum of the full basis (`momentum < 0`) or of a momentum sector;
 * `inversion` is +1, -1 or 0 for none.
 */
enum ScarlabStatus scarlab_spectrum_new(const struct ScarlabBasis *basis,
                                        int32_t momentum,
                                        int32_t inversion,
                                        struct ScarlabSpectrum **out);

void scarlab_spectrum_free(struct ScarlabSpectrum *spectrum);

size_t scarlab_spectrum_len(const struct ScarlabSpectrum *spectrum);

/**
 * Copies the ascending eigenvalues into `out`, which must hold
 * `scarlab_spectrum_len` entries.
 */
enum ScarlabStatus scarlab_spectrum_eigenvalues(const struct ScarlabSpectrum *spectrum,
                                                double *out,
                                                size_t len);

/**
 * Runs the forward scattering approximation; `energies` must hold
 * `length + 1` entries.
 */
enum ScarlabStatus scarlab_fsa(uint32_t length,
                               int32_t periodic,
                               double *energies,
                               size_t energies_len,
                               double *mean_err);

/**
 * Number of exact zero modes of `H + stagger * sum_i (-1)^i Z_i`, counted in
 * exact arithmetic when `exact != 0`.
 */
enum ScarlabStatus scarlab_zero_modes(uint32_t length,
                                      int32_t periodic,
                                      double stagger,
                                      int32_t exact,
                                      uint64_t *count);

/**
 * Quenches the product state `initial_bits` and writes fidelity, correlator
 * and half-chain entropy at `t = i * dt`, `i < len`. `method` is 0 for the
 * spectral propagator and 1 for Krylov.
 */
enum ScarlabStatus scarlab_quench(const struct ScarlabBasis *basis,
                                  uint32_t initial_bits,
                                  double dt,
                                  int32_t method,
                                  double *fidelity,
                                  double *correlator,
                                  double *entropy,
                                  size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCARLAB_H */
