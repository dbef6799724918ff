#ifndef PDSIM_H
#define PDSIM_H

/* Generated by cbindgen from pdsim-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call outcome; negative values are errors.
 */
typedef enum {
  PDSIM_STATUS_OK = 0,
  PDSIM_STATUS_NULL_ARGUMENT = -1,
  PDSIM_STATUS_INVALID_UTF8 = -2,
  PDSIM_STATUS_INVALID_CONFIG = -3,
  PDSIM_STATUS_IO_ERROR = -4,
  PDSIM_STATUS_DOMAIN_ERROR = -5,
  PDSIM_STATUS_OUT_OF_ORDER = -6,
  /**
   * The requested value is undefined in this state (e.g. AoP of an
   * unpolarized or untouched macropixel).
   */
  PDSIM_STATUS_UNDEFINED = -7,
  PDSIM_STATUS_BAD_ARGUMENT = -8,
} PdsimStatus;

/**
 * Opaque run configuration handle.
 */
typedef struct PdsimConfig PdsimConfig;

/**
 * Opaque event buffer handle.
 */
typedef struct PdsimEventBuffer PdsimEventBuffer;

/**
 * Opaque events-method reconstruction handle.
 */
typedef struct PdsimEventsRecon PdsimEventsRecon;

/**
 * One DVS event; identical layout to a `.pdevt` file record.
 */
typedef struct {
  uint64_t t_us;
  uint16_t x;
  uint16_t y;
  /**
   * 0 = OFF, 1 = ON.
   */
  uint8_t polarity;
  uint8_t reserved[3];
} PdsimEvent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pdsim_version(void);

/**
 * Copy the calling thread's last error message into `buf` (truncated to
 * `len - 1` bytes, always NUL-terminated when `len > 0`). Returns the full
 * message length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must point to at least `len` writable bytes, or be NULL with
 * `len == 0` to query the length only.
 */
uintptr_t pdsim_last_error(char *buf, uintptr_t len);

/**
 * New configuration with every key at its default.
 */
PdsimConfig *pdsim_config_default(void);

/**
 * Parse a TOML configuration document. Returns NULL on error (see
 * [`pdsim_last_error`]).
 *
 * # Safety
 * `toml_text` must be a valid NUL-terminated string.
 */
PdsimConfig *pdsim_config_parse(const char *toml_text);

/**
 * Apply one `dotted.key = value` override, e.g. `("stimulus.rpm", "200")`.
 *
 * # Safety
 * `cfg` must be a live handle from this library; `key` and `value` must be
 * valid NUL-terminated strings.
 */
PdsimStatus pdsim_config_set(PdsimConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must be a handle from this library, not yet freed.
 */
void pdsim_config_free(PdsimConfig *cfg);

/**
 * Simulate DVS events for the configured stimulus over `[t0_us, t1_us)`,
 * honoring `sim.region` when set. On success `*out` owns the buffer.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must point to writable pointer storage.
 */
PdsimStatus pdsim_simulate_events(const PdsimConfig *cfg,
                                  uint64_t t0_us,
                                  uint64_t t1_us,
                                  PdsimEventBuffer **out);

/**
 * # Safety
 * `buf` must be a live buffer handle.
 */
uintptr_t pdsim_events_len(const PdsimEventBuffer *buf);

/**
 * Borrow the records; valid until the buffer is freed.
 *
 * # Safety
 * `buf` must be a live buffer handle.
 */
const PdsimEvent *pdsim_events_data(const PdsimEventBuffer *buf);

/**
 * Sensor width/height the buffer was generated for.
 *
 * # Safety
 * `buf` must be a live buffer handle; outputs may be NULL to skip.
 */
PdsimStatus pdsim_events_geometry(const PdsimEventBuffer *buf,
                                  uint16_t *out_width,
                                  uint16_t *out_height);

/**
 * # Safety
 * `buf` must be a handle from this library, not yet freed.
 */
void pdsim_events_free(PdsimEventBuffer *buf);

/**
 * Write a buffer to a `.pdevt` file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `buf` a live handle.
 */
PdsimStatus pdsim_events_write(const char *path, const PdsimEventBuffer *buf);

/**
 * Read a `.pdevt` file into a new buffer.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` writable.
 */
PdsimStatus pdsim_events_read(const char *path, PdsimEventBuffer **out);

/**
 * New events-method reconstruction over a `width x height` subpixel grid.
 * Returns NULL when the parameters are invalid.
 */
PdsimEventsRecon *pdsim_events_recon_new(uint16_t width,
                                         uint16_t height,
                                         double f3db_hz,
                                         double theta_on,
                                         double theta_off,
                                         bool neighbor_updates);

/**
 * Feed a batch of time-ordered events.
 *
 * # Safety
 * `recon` must be a live handle; `events` must point to `len` records.
 */
PdsimStatus pdsim_events_recon_process(PdsimEventsRecon *recon,
                                       const PdsimEvent *events,
                                       uintptr_t len);

/**
 * AoP of macropixel `(mx, my)` at `t_us`, radians in `[0, pi)`. Returns
 * `Undefined` while the macropixel has no signal.
 *
 * # Safety
 * `recon` must be a live handle; `out_aop_rad` writable.
 */
PdsimStatus pdsim_events_recon_aop(const PdsimEventsRecon *recon,
                                   uint16_t mx,
                                   uint16_t my,
                                   uint64_t t_us,
                                   double *out_aop_rad);

/**
 * # Safety
 * `recon` must be a handle from this library, not yet freed.
 */
void pdsim_events_recon_free(PdsimEventsRecon *recon);

/**
 * Flux transmitted through one mosaic filter (`filter_index` 0..3 for
 * 0/45/90/135 degrees). `extinction_ratio` may be infinity.
 *
 * # Safety
 * `out_flux` must be writable.
 */
PdsimStatus pdsim_malus_intensity(double total_flux,
                                  double dolp,
                                  double aop_rad,
                                  uint32_t filter_index,
                                  double extinction_ratio,
                                  double *out_flux);

/**
 * DoLP and AoP from the four filtered intensities. Undefined outputs are
 * written as NaN and reported via the status.
 *
 * # Safety
 * `out_dolp` and `out_aop_rad` must be writable.
 */
PdsimStatus pdsim_stokes_dolp_aop(double i0,
                                  double i45,
                                  double i90,
                                  double i135,
                                  double *out_dolp,
                                  double *out_aop_rad);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PDSIM_H */
