#ifndef FLUXCELL_H
#define FLUXCELL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FluxcellStatus {
  FLUXCELL_STATUS_OK = 0,
  FLUXCELL_STATUS_NULL_POINTER = 1,
  FLUXCELL_STATUS_INVALID_PARAMETER = 2,
  FLUXCELL_STATUS_INVALID_INPUT = 3,
  FLUXCELL_STATUS_DIMENSION_MISMATCH = 4,
  FLUXCELL_STATUS_INVALID_STATE = 5,
  FLUXCELL_STATUS_PARSE = 6,
  FLUXCELL_STATUS_SIMULATION = 7,
  FLUXCELL_STATUS_IO = 8,
  FLUXCELL_STATUS_CHECKPOINT = 9,
  FLUXCELL_STATUS_BUFFER_TOO_SMALL = 10,
  FLUXCELL_STATUS_PANIC = 11,
} FluxcellStatus;

/**
 * Crossbar array of the default device and periphery, with its own RNG.
 */
typedef struct FluxcellCrossbar FluxcellCrossbar;

/**
 * Fully connected network with its training configuration and RNGs.
 */
typedef struct FluxcellNetwork FluxcellNetwork;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *fluxcell_version(void);

/**
 * Bytes needed to hold the last error message including the NUL, or 0 if
 * the last call on this thread succeeded.
 */
size_t fluxcell_last_error_length(void);

/**
 * Copies the last error message into `buf`, truncating to fit. Returns the
 * number of bytes written excluding the NUL, or -1 if there is no error or
 * `buf` is null or empty.
 *
 * # Safety
 * `buf` must point to `len` writable bytes.
 */
ptrdiff_t fluxcell_last_error_message(char *buf, size_t len);

/**
 * # Safety
 * `out_states` must be a valid pointer.
 */
enum FluxcellStatus fluxcell_num_states(double i_sw, double l_loop, uint64_t *out_states);

/**
 * # Safety
 * `out_amps` must be a valid pointer.
 */
enum FluxcellStatus fluxcell_delta_i(double l_loop, double *out_amps);

/**
 * Kinetic inductance per square (H) from sheet resistance (Ω/□) and critical
 * temperature (K).
 *
 * # Safety
 * `out_henry` must be a valid pointer.
 */
enum FluxcellStatus fluxcell_kinetic_inductance_per_square(double r_sheet,
                                                           double t_c,
                                                           double *out_henry);

/**
 * Runs the bundled unit-cell circuit with `up` positive then `down` negative
 * programming pulses and writes the `up + down + 1` quantized levels.
 *
 * # Safety
 * `levels` must point to `capacity` writable values; `out_written` must be valid.
 */
enum FluxcellStatus fluxcell_unit_cell_staircase(size_t up,
                                                 size_t down,
                                                 int64_t *levels,
                                                 size_t capacity,
                                                 size_t *out_written);

/**
 * New `rows x cols` crossbar of `states`-state cells with the default
 * periphery, states drawn from the central half of the range.
 *
 * # Safety
 * `out_handle` must be a valid pointer.
 */
enum FluxcellStatus fluxcell_crossbar_new(size_t rows,
                                          size_t cols,
                                          uint64_t states,
                                          uint64_t seed,
                                          struct FluxcellCrossbar **out_handle);

/**
 * Loads a crossbar checkpoint file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out_handle` must be valid.
 */
enum FluxcellStatus fluxcell_crossbar_load(const char *file,
                                           uint64_t seed,
                                           struct FluxcellCrossbar **out_handle);

/**
 * # Safety
 * `handle` must come from this library and not be used afterwards. Null is ignored.
 */
void fluxcell_crossbar_free(struct FluxcellCrossbar *handle);

/**
 * # Safety
 * `handle` must be live; `path` NUL-terminated.
 */
enum FluxcellStatus fluxcell_crossbar_save(const struct FluxcellCrossbar *handle, const char *file);

/**
 * # Safety
 * `handle` must be live; output pointers valid.
 */
enum FluxcellStatus fluxcell_crossbar_shape(const struct FluxcellCrossbar *handle,
                                            size_t *out_rows,
                                            size_t *out_cols);

/**
 * Logical weights, row-major, `rows * cols` values.
 *
 * # Safety
 * `handle` must be live; `weights` must point to `len` writable values.
 */
enum FluxcellStatus fluxcell_crossbar_weights(const struct FluxcellCrossbar *handle,
                                              double *weights,
                                              size_t len);

/**
 * `y = W x` (`transpose == false`, `x` has `cols` values) or `y = W^T x`.
 * `analog` selects the periphery model over the exact product.
 *
 * # Safety
 * `handle` must be live; `x` and `y` must hold `x_len` and `y_len` values.
 */
enum FluxcellStatus fluxcell_crossbar_mvm(struct FluxcellCrossbar *handle,
                                          const double *x,
                                          size_t x_len,
                                          bool transpose,
                                          bool analog,
                                          double *y,
                                          size_t y_len);

/**
 * Stochastic coincidence update with inputs `x` (`cols`) and errors `d`
 * (`rows`); the expected weight change is `lr * d x^T`.
 *
 * # Safety
 * `handle` must be live; `x` and `d` must hold `x_len` and `d_len` values.
 */
enum FluxcellStatus fluxcell_crossbar_update(struct FluxcellCrossbar *handle,
                                             const double *x,
                                             size_t x_len,
                                             const double *d,
                                             size_t d_len,
                                             double lr);

/**
 * New network over `layers` (input size first). `states == 0` builds the
 * floating-point baseline, otherwise crossbar tiles of `states`-state cells.
 *
 * # Safety
 * `layers` must hold `n_layers` values; `out_handle` must be valid.
 */
enum FluxcellStatus fluxcell_network_new(const size_t *layers,
                                         size_t n_layers,
                                         uint64_t states,
                                         double lr,
                                         uint64_t seed,
                                         struct FluxcellNetwork **out_handle);

/**
 * # Safety
 * `handle` must come from this library and not be used afterwards. Null is ignored.
 */
void fluxcell_network_free(struct FluxcellNetwork *handle);

/**
 * One SGD step; writes the sample's loss before the update.
 *
 * # Safety
 * `handle` must be live; `input` must hold `len` values; `out_loss` valid or null.
 */
enum FluxcellStatus fluxcell_network_train_step(struct FluxcellNetwork *handle,
                                                const double *input,
                                                size_t len,
                                                size_t label,
                                                double *out_loss);

/**
 * Class probabilities of one input.
 *
 * # Safety
 * `handle` must be live; `input` and `probs` must hold `len` and `probs_len` values.
 */
enum FluxcellStatus fluxcell_network_forward(struct FluxcellNetwork *handle,
                                             const double *input,
                                             size_t len,
                                             bool analog,
                                             double *probs,
                                             size_t probs_len);

/**
 * Saves the network into directory `dir`.
 *
 * # Safety
 * `handle` must be live; `dir` NUL-terminated.
 */
enum FluxcellStatus fluxcell_network_save(const struct FluxcellNetwork *handle, const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLUXCELL_H */
