#ifndef AFFECTLOOP_H
#define AFFECTLOOP_H

#pragma once

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define AL_N_BANDS 3

#define AL_N_FEATURES 96

#define AL_N_COLOR_SLOTS 3

typedef enum AlStatus {
  AL_STATUS_OK = 0,
  AL_STATUS_NULL_POINTER = 1,
  AL_STATUS_INVALID_ARGUMENT = 2,
  AL_STATUS_PARSE = 3,
  AL_STATUS_MODEL = 4,
  AL_STATUS_TRANSITION = 5,
  AL_STATUS_OUT_OF_RANGE = 6,
  AL_STATUS_PANIC = 7,
} AlStatus;

/**
 * Trained arousal and valence classifiers.
 */
typedef struct AlModelPair AlModelPair;

/**
 * Session protocol state.
 */
typedef struct AlSession AlSession;

/**
 * Arousal and valence estimate. Classes are -1 (low), 0 (neutral), +1 (high);
 * scores are ordered low, neutral, high.
 */
typedef struct AlPrediction {
  int32_t arousal;
  int32_t valence;
  double arousal_scores[3];
  double valence_scores[3];
} AlPrediction;

/**
 * Component indices of one design in the built-in catalog.
 */
typedef struct AlDesign {
  uint32_t envelope;
  uint32_t layout;
  uint32_t fixture;
  uint32_t colors[AL_N_COLOR_SLOTS];
} AlDesign;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. Valid until
 * the next failing call on the same thread.
 */
const char *al_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void al_string_free(char *s);

/**
 * Parses a model pair written by `affectloop train` (model.json).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum AlStatus al_model_load_json(const char *json, struct AlModelPair **out);

/**
 * # Safety
 * `model` must come from [`al_model_load_json`] and not have been freed.
 */
void al_model_free(struct AlModelPair *model);

/**
 * Classifies one log band-power feature vector of length [`AL_N_FEATURES`].
 *
 * # Safety
 * `features` must point to `len` doubles; `out` must be writable.
 */
enum AlStatus al_model_predict(const struct AlModelPair *model,
                               const double *features,
                               size_t len,
                               struct AlPrediction *out);

/**
 * Welch band powers (theta, alpha, beta) of one preprocessed 2 s window.
 *
 * `data` is channel-major: `n_channels` rows of `n_samples` µV values,
 * with `n_samples` equal to two seconds at `sample_rate`.
 * `out` receives `n_channels * 3` powers, index `channel * 3 + band`.
 * With `log_features` set the values are the log10 features the
 * classifiers consume.
 *
 * # Safety
 * `data` must hold `n_channels * n_samples` doubles and `out` `out_len`.
 */
enum AlStatus al_band_powers(const double *data,
                             size_t n_channels,
                             size_t n_samples,
                             double sample_rate,
                             bool log_features,
                             double *out,
                             size_t out_len);

/**
 * Number of distinct designs in the built-in catalog.
 *
 * # Safety
 * `out` must be writable.
 */
enum AlStatus al_design_count(uint64_t *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum AlStatus al_design_from_index(uint64_t index, struct AlDesign *out);

/**
 * # Safety
 * `design` must be readable and `out` writable.
 */
enum AlStatus al_design_to_index(const struct AlDesign *design, uint64_t *out);

/**
 * Agree-probe question for a predicted class pair.
 *
 * # Safety
 * `out` must be writable; the string is freed with [`al_string_free`].
 */
enum AlStatus al_prompt_text(int32_t arousal, int32_t valence, char **out);

/**
 * A session in its idle state.
 */
struct AlSession *al_session_new(void);

/**
 * # Safety
 * `session` must come from [`al_session_new`] and not have been freed.
 */
void al_session_free(struct AlSession *session);

/**
 * Applies one event, e.g. `{"kind":"StartSession"}`, at stream time `t`.
 * The session is unchanged on failure.
 *
 * # Safety
 * `session` must be a live handle and `event_json` NUL-terminated.
 */
enum AlStatus al_session_advance(struct AlSession *session, const char *event_json, double t);

/**
 * Serializes the full session state as JSON.
 *
 * # Safety
 * `session` must be a live handle; `out` must be writable. The string is
 * freed with [`al_string_free`].
 */
enum AlStatus al_session_state_json(const struct AlSession *session, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AFFECTLOOP_H */
