#ifndef STEGGA_H
#define STEGGA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SteggaMode {
  STEGGA_MODE_PLAIN = 0,
  STEGGA_MODE_NEAREST = 1,
  STEGGA_MODE_GA = 2,
} SteggaMode;

typedef enum SteggaStatus {
  STEGGA_STATUS_OK = 0,
  STEGGA_STATUS_NULL_POINTER = 1,
  STEGGA_STATUS_INVALID_ARGUMENT = 2,
  STEGGA_STATUS_MALFORMED_WAV = 3,
  STEGGA_STATUS_UNSUPPORTED_WAV = 4,
  STEGGA_STATUS_TRUNCATED_WAV = 5,
  STEGGA_STATUS_INSUFFICIENT_CAPACITY = 6,
  STEGGA_STATUS_KEY_MISMATCH = 7,
  STEGGA_STATUS_MALFORMED_KEY = 8,
  STEGGA_STATUS_PANIC = 9,
} SteggaStatus;

/**
 * Decoded PCM audio.
 */
typedef struct SteggaAudio SteggaAudio;

/**
 * Extraction key.
 */
typedef struct SteggaKey SteggaKey;

typedef struct SteggaAudioInfo {
  uint16_t bit_depth;
  uint16_t channels;
  uint32_t sample_rate;
  size_t samples;
} SteggaAudioInfo;

/**
 * Library-owned bytes.
 */
typedef struct SteggaBytes {
  uint8_t *data;
  size_t len;
} SteggaBytes;

/**
 * `layer_bits` has bit `j - 1` set for each target layer `j`.
 * A negative `threshold` means unbounded.
 */
typedef struct SteggaEmbedConfig {
  uint32_t layer_bits;
  uint64_t seed;
  enum SteggaMode mode;
  int64_t threshold;
  uint32_t ga_population;
  uint32_t ga_generations;
  double ga_crossover_prob;
  double ga_mutation_prob;
} SteggaEmbedConfig;

/**
 * `snr_db` is +infinity for an unchanged cover and NaN when undefined.
 */
typedef struct SteggaEmbedReport {
  size_t samples_used;
  size_t samples_skipped;
  uint32_t max_deviation;
  double snr_db;
  uint64_t capacity_bits;
} SteggaEmbedReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *stegga_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *stegga_version(void);

/**
 * # Safety
 * `data` must point to `len` readable bytes and `out` must be writable.
 */
enum SteggaStatus stegga_audio_parse(const uint8_t *data, size_t len, struct SteggaAudio **out);

/**
 * Builds audio from interleaved samples (8-bit: 0..=255, 16-bit: signed).
 *
 * # Safety
 * `samples` must point to `count` readable values and `out` must be writable.
 */
enum SteggaStatus stegga_audio_new(const int32_t *samples,
                                   size_t count,
                                   uint16_t bit_depth,
                                   uint32_t sample_rate,
                                   uint16_t channels,
                                   struct SteggaAudio **out);

/**
 * # Safety
 * `audio` must be a live handle and `out` writable.
 */
enum SteggaStatus stegga_audio_info(const struct SteggaAudio *audio, struct SteggaAudioInfo *out);

/**
 * Copies up to `capacity` samples into `dest`; `written` receives the count.
 *
 * # Safety
 * `audio` must be a live handle, `dest` must hold `capacity` values.
 */
enum SteggaStatus stegga_audio_samples(const struct SteggaAudio *audio,
                                       int32_t *dest,
                                       size_t capacity,
                                       size_t *written);

/**
 * Encodes as a canonical WAV file.
 *
 * # Safety
 * `audio` must be a live handle and `out` writable.
 */
enum SteggaStatus stegga_audio_write(const struct SteggaAudio *audio, struct SteggaBytes *out);

/**
 * # Safety
 * `audio` must be null or a handle not yet freed.
 */
void stegga_audio_free(struct SteggaAudio *audio);

/**
 * # Safety
 * `bytes` must be null or a buffer returned by this library, freed once.
 */
void stegga_bytes_free(struct SteggaBytes bytes);

/**
 * Layer 1, GA mode, unbounded threshold, default GA parameters.
 */
struct SteggaEmbedConfig stegga_embed_config_default(uint64_t seed);

/**
 * Hides `message` in `cover`. On success `stego_out` and `key_out` receive
 * new handles; `report_out` may be null.
 *
 * # Safety
 * Pointers must be valid for their stated use; `config.mode` must be a
 * declared `SteggaMode` value.
 */
enum SteggaStatus stegga_embed(const struct SteggaAudio *cover,
                               const uint8_t *message,
                               size_t message_len,
                               const struct SteggaEmbedConfig *config,
                               struct SteggaAudio **stego_out,
                               struct SteggaKey **key_out,
                               struct SteggaEmbedReport *report_out);

/**
 * Recovers the message; release `out` with [`stegga_bytes_free`].
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum SteggaStatus stegga_extract(const struct SteggaAudio *stego,
                                 const struct SteggaKey *key,
                                 struct SteggaBytes *out);

/**
 * Parses the text key format.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` writable.
 */
enum SteggaStatus stegga_key_parse(const char *text, struct SteggaKey **out);

/**
 * Renders the key in its text format (not NUL-terminated).
 *
 * # Safety
 * `key` must be a live handle and `out` writable.
 */
enum SteggaStatus stegga_key_to_string(const struct SteggaKey *key, struct SteggaBytes *out);

/**
 * # Safety
 * `key` must be null or a handle not yet freed.
 */
void stegga_key_free(struct SteggaKey *key);

/**
 * Closest in-range value carrying `pattern` (lowest layer in bit 0).
 *
 * # Safety
 * `out` must be writable.
 */
enum SteggaStatus stegga_adjust_nearest(int32_t sample,
                                        uint16_t bit_depth,
                                        uint32_t layer_bits,
                                        uint32_t pattern,
                                        int32_t *out);

/**
 * `sample` with only the target layers overwritten.
 *
 * # Safety
 * `out` must be writable.
 */
enum SteggaStatus stegga_alter(int32_t sample,
                               uint16_t bit_depth,
                               uint32_t layer_bits,
                               uint32_t pattern,
                               int32_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEGGA_H */
