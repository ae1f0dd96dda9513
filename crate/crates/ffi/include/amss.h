/* C ABI for the soundscape augmentation toolkit. */

#ifndef AMSS_H
#define AMSS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum AmssStatus {
  /**
   * Success.
   */
  AMSS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  AMSS_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  AMSS_STATUS_UTF8 = 2,
  /**
   * An argument was out of range or otherwise invalid.
   */
  AMSS_STATUS_INVALID_ARGUMENT = 3,
  /**
   * A file could not be read or parsed.
   */
  AMSS_STATUS_PARSE = 4,
  /**
   * A computation failed on otherwise valid input.
   */
  AMSS_STATUS_COMPUTE = 5,
  /**
   * A panic was caught at the boundary; this is a bug.
   */
  AMSS_STATUS_INTERNAL = 6,
} AmssStatus;

/**
 * Masker sound-source category.
 */
typedef enum AmssMaskerClass {
  AMSS_MASKER_CLASS_BIRD = 0,
  AMSS_MASKER_CLASS_WATER = 1,
  AMSS_MASKER_CLASS_WIND = 2,
  AMSS_MASKER_CLASS_TRAFFIC = 3,
  AMSS_MASKER_CLASS_CONSTRUCTION = 4,
} AmssMaskerClass;

/**
 * Opaque gain ↔ SPL@1 m mapping for one masker.
 */
typedef struct AmssCalibration AmssCalibration;

/**
 * Opaque handle to the local pleasantness predictor.
 */
typedef struct AmssSurrogate AmssSurrogate;

/**
 * Summary metrics of a calibrated signal.
 */
typedef struct AmssMetrics {
  /**
   * A-weighted equivalent level, dB.
   */
  double laeq;
  /**
   * C-weighted equivalent level, dB.
   */
  double lceq;
  /**
   * Loudness exceeded 95 % of the time, sone.
   */
  double n95;
  /**
   * Signal length, seconds.
   */
  double duration_seconds;
} AmssMetrics;

/**
 * Tunable parameters of the surrogate predictor; see
 * [`amss_surrogate_config_default`] for the standard values.
 */
typedef struct AmssSurrogateConfig {
  double bias;
  double level_weight;
  double naturalness_weight;
  double smr_weight;
  double std;
  double reference_level;
} AmssSurrogateConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string. Do not free.
 */
const char *amss_version(void);

/**
 * Copies the error message of the most recent failed call on this thread
 * into `buf` (NUL-terminated, truncated to `cap` bytes) and returns the
 * full message length excluding the NUL. Returns 0 when the most recent
 * call succeeded. `buf` may be null to query the length alone.
 *
 * # Safety
 * If `buf` is non-null it must point to `cap` writable bytes.
 */
uintptr_t amss_last_error(char *buf, uintptr_t cap);

/**
 * Pleasantness coordinate in [-1, 1] from the eight PAQ ratings
 * (1–5 each) in the order pl, ev, ch, vi, un, ca, an, mo.
 *
 * # Safety
 * `ratings` must point to 8 readable bytes; `out` must be writable.
 */
enum AmssStatus amss_isopl(const uint8_t *ratings, double *out);

/**
 * Eventfulness coordinate in [-1, 1]; same contract as [`amss_isopl`].
 *
 * # Safety
 * `ratings` must point to 8 readable bytes; `out` must be writable.
 */
enum AmssStatus amss_isoev(const uint8_t *ratings, double *out);

/**
 * Computes LAeq, LCeq and N95 of `len` mono samples at `sample_rate`.
 * `calibration_db` is the SPL a full-scale sine reads.
 *
 * # Safety
 * `samples` must point to `len` readable doubles; `out` must be writable.
 */
enum AmssStatus amss_metrics(const double *samples,
                             uintptr_t len,
                             double sample_rate,
                             double calibration_db,
                             struct AmssMetrics *out);

/**
 * Builds a calibration table from `len` (gain, SPL@1 m) pairs.
 *
 * # Safety
 * `gains` and `spls` must point to `len` readable doubles; `out` must be
 * writable. The returned handle must be freed with
 * [`amss_calibration_free`].
 */
enum AmssStatus amss_calibration_new(const double *gains,
                                     const double *spls,
                                     uintptr_t len,
                                     struct AmssCalibration **out);

/**
 * Loads a calibration CSV (`digital_gain,spl_dba_1m` header row).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable. The
 * returned handle must be freed with [`amss_calibration_free`].
 */
enum AmssStatus amss_calibration_open(const char *path, struct AmssCalibration **out);

/**
 * Interpolated SPL@1 m for a digital gain (clamped to the table's range).
 *
 * # Safety
 * `table` must be a live handle from a constructor; `out` must be writable.
 */
enum AmssStatus amss_calibration_spl_of_gain(const struct AmssCalibration *table,
                                             double gain,
                                             double *out);

/**
 * Digital gain whose interpolated SPL equals `target_spl` (clamped to the
 * table's range).
 *
 * # Safety
 * `table` must be a live handle from a constructor; `out` must be writable.
 */
enum AmssStatus amss_calibration_gain_for_spl(const struct AmssCalibration *table,
                                              double target_spl,
                                              double *out);

/**
 * Releases a calibration handle. Null is a no-op.
 *
 * # Safety
 * `table` must be null or a handle not yet freed.
 */
void amss_calibration_free(struct AmssCalibration *table);

/**
 * Writes the default surrogate configuration.
 *
 * # Safety
 * `out` must be writable.
 */
enum AmssStatus amss_surrogate_config_default(struct AmssSurrogateConfig *out);

/**
 * Creates a surrogate predictor. `config` may be null for defaults.
 *
 * # Safety
 * `config` must be null or readable; `out` must be writable. The returned
 * handle must be freed with [`amss_surrogate_free`].
 */
enum AmssStatus amss_surrogate_new(const struct AmssSurrogateConfig *config,
                                   struct AmssSurrogate **out);

/**
 * Predicted pleasantness (mean, std) of leaving an ambient of the given
 * LAeq unaugmented.
 *
 * # Safety
 * `predictor` must be a live handle; `out_mean` and `out_std` must be
 * writable.
 */
enum AmssStatus amss_surrogate_baseline(const struct AmssSurrogate *predictor,
                                        double ambient_laeq,
                                        double *out_mean,
                                        double *out_std);

/**
 * Predicted pleasantness (mean, std) of one masker playing `smr_db` above
 * (+) or below (−) an ambient of the given LAeq.
 *
 * # Safety
 * `predictor` must be a live handle; `out_mean` and `out_std` must be
 * writable.
 */
enum AmssStatus amss_surrogate_score(const struct AmssSurrogate *predictor,
                                     double ambient_laeq,
                                     enum AmssMaskerClass class_,
                                     double digital_gain,
                                     double smr_db,
                                     double *out_mean,
                                     double *out_std);

/**
 * Releases a surrogate handle. Null is a no-op.
 *
 * # Safety
 * `predictor` must be null or a handle not yet freed.
 */
void amss_surrogate_free(struct AmssSurrogate *predictor);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AMSS_H */
