/*
 * capgen C API.
 *
 * Every call returns a capgen_status; on failure capgen_last_error() holds a
 * message for the calling thread until its next failing call. Handles are
 * opaque and released with the matching *_free function.
 */
#ifndef CAPGEN_CAPGEN_H
#define CAPGEN_CAPGEN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CAPGEN_BUILDING)
#    define CAPGEN_API __declspec(dllexport)
#  else
#    define CAPGEN_API __declspec(dllimport)
#  endif
#else
#  define CAPGEN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as the command-line exit codes. */
typedef enum capgen_status {
  CAPGEN_OK = 0,
  CAPGEN_SELFTEST_FAILED = 1,
  CAPGEN_INPUT_ERROR = 2,
  CAPGEN_NUMERIC_ERROR = 3
} capgen_status;

typedef struct capgen_config capgen_config;
typedef struct capgen_vocab capgen_vocab;
typedef struct capgen_model capgen_model;

CAPGEN_API const char* capgen_last_error(void);
CAPGEN_API const char* capgen_version(void);

/* Receives non-fatal warnings (rejected captions, dropped images). */
typedef void (*capgen_log_fn)(const char* message, void* user);
CAPGEN_API void capgen_set_log_handler(capgen_log_fn fn, void* user);

/* ---- run configuration: flat key = value settings ---- */
CAPGEN_API capgen_config* capgen_config_new(void);
CAPGEN_API void capgen_config_free(capgen_config* config);
CAPGEN_API capgen_status capgen_config_load_file(capgen_config* config, const char* path);
CAPGEN_API capgen_status capgen_config_set(capgen_config* config, const char* key, const char* value);

/* ---- vocabulary ---- */
typedef struct capgen_vocab_stats {
  uint32_t token_count; /* entries written, specials included */
  double coverage;      /* fraction of corpus tokens in-vocab */
  uint32_t caption_count;
} capgen_vocab_stats;

/* config may be NULL; it supplies caption_format / min_tokens / max_tokens. */
CAPGEN_API capgen_status capgen_build_vocab(const char* captions_path, const char* out_path, uint32_t max_size,
                                            const capgen_config* config, capgen_vocab_stats* stats);
CAPGEN_API capgen_status capgen_vocab_load(const char* path, capgen_vocab** out);
CAPGEN_API void capgen_vocab_free(capgen_vocab* vocab);
CAPGEN_API uint32_t capgen_vocab_size(const capgen_vocab* vocab);

/* ---- training ---- */
typedef struct capgen_epoch_row {
  uint32_t epoch;
  double train_loss;
  double val_loss;
  double val_bleu4;
  double wall_seconds;
} capgen_epoch_row;

typedef void (*capgen_epoch_fn)(const capgen_epoch_row* row, void* user);

typedef struct capgen_train_summary {
  uint32_t epochs_run;
  uint32_t best_epoch;
  int early_stopped; /* 1 when stopped by patience, 0 at max_epochs */
  uint32_t train_images, val_images, test_images;
} capgen_train_summary;

/* Requires captions, features, vocab and out in config. */
CAPGEN_API capgen_status capgen_train(const capgen_config* config, capgen_epoch_fn on_epoch, void* user,
                                      capgen_train_summary* summary);

/* ---- inference ---- */
CAPGEN_API capgen_status capgen_model_load(const char* checkpoint_path, capgen_model** out);
CAPGEN_API void capgen_model_free(capgen_model* model);
CAPGEN_API uint32_t capgen_model_vocab_size(const capgen_model* model);

/* Writes the caption for one CAPF1 file into buf (NUL-terminated, truncated
 * to cap). *needed, when non-NULL, receives the full length plus one. */
CAPGEN_API capgen_status capgen_caption(const capgen_model* model, const capgen_vocab* vocab, const char* feature_path,
                                        char* buf, size_t cap, size_t* needed);

/* Greedy-decodes every image in captions_path, writes the CSV report, and
 * stores corpus BLEU-1..4 in bleu[0..3]. config may be NULL. */
CAPGEN_API capgen_status capgen_evaluate(const capgen_model* model, const capgen_vocab* vocab,
                                         const char* captions_path, const char* features_dir,
                                         const char* report_path, const capgen_config* config, double bleu[4],
                                         uint32_t* images);

/* ---- self-verification ---- */
typedef void (*capgen_suite_fn)(const char* suite, int passed, const char* detail, void* user);

/* Returns CAPGEN_OK when every suite passes, CAPGEN_SELFTEST_FAILED otherwise. */
CAPGEN_API capgen_status capgen_selftest(capgen_suite_fn on_suite, void* user);

#ifdef __cplusplus
}
#endif

#endif /* CAPGEN_CAPGEN_H */
