/*
 * seqcast C API: daily-temperature forecasting behind opaque handles and
 * status codes. All functions are synchronous and thread-compatible; error
 * messages are per-thread (see seqcast_last_error).
 */
#ifndef SEQCAST_H
#define SEQCAST_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef SEQCAST_API
#if defined(_WIN32)
#define SEQCAST_API __declspec(dllexport)
#else
#define SEQCAST_API __attribute__((visibility("default")))
#endif
#endif

/* Status codes double as the CLI's process exit codes. */
typedef enum seqcast_status {
    SEQCAST_OK = 0,
    SEQCAST_ERROR = 1,            /* unexpected internal failure */
    SEQCAST_USAGE_ERROR = 2,      /* bad option key or value */
    SEQCAST_DATA_ERROR = 3,       /* unusable data, file, or checkpoint */
    SEQCAST_DIVERGENCE_ERROR = 4, /* non-finite numbers during training */
    SEQCAST_GRADCHECK_FAILED = 5  /* a gradient block exceeded tolerance */
} seqcast_status;

/* Message for the most recent failing call on this thread. The pointer
 * stays valid until the next seqcast call from the same thread. Never
 * NULL; empty string when no error has occurred. */
SEQCAST_API const char* seqcast_last_error(void);

SEQCAST_API const char* seqcast_version(void);

/* ------------------------------------------------------------------ */
/* Run configuration                                                   */
/* ------------------------------------------------------------------ */

/* Opaque bag of options with the same defaults as the CLI. */
typedef struct seqcast_options seqcast_options;

SEQCAST_API seqcast_options* seqcast_options_new(void);
SEQCAST_API void seqcast_options_free(seqcast_options* opts);

/* Sets one option by name. Keys (values are strings):
 *   data, out_dir, checkpoint            paths
 *   date_column, temp_column             CSV schema (defaults date/meantemp)
 *   extra_columns                        comma list of extra feature columns
 *   date_format                          iso | dmy
 *   resample_daily, enforce_band,
 *   calendar                             0 | 1
 *   temp_min, temp_max                   sanity band, degrees C
 *   split_ratio, val_fraction            fractions
 *   window, kernel, lstm_units,
 *   lstm_depth, bilstm_units,
 *   dense_units, features                model extents
 *   conv_filters                         comma list, e.g. "256,128"
 *   dropout_rate                         [0, 1)
 *   max_epochs, patience, batch_size     training bounds
 *   lr, beta1, beta2, eps, decay         optimizer
 *   monitor                              auto | train_loss | val_loss
 *   seed                                 64-bit unsigned
 *   steps                                predict roll-forward count
 * Unknown keys and unparsable values return SEQCAST_USAGE_ERROR. */
SEQCAST_API seqcast_status seqcast_options_set(seqcast_options* opts, const char* key,
                                               const char* value);

/* Per-epoch progress lines during training ("epoch=1 train_mse=... ..."). */
typedef void (*seqcast_progress_fn)(const char* line, void* user);
SEQCAST_API seqcast_status seqcast_options_set_progress(seqcast_options* opts,
                                                        seqcast_progress_fn fn, void* user);

/* ------------------------------------------------------------------ */
/* Batch runs                                                          */
/* ------------------------------------------------------------------ */

typedef struct seqcast_train_summary {
    double train_mse;  /* original units, training windows */
    double train_rmse;
    double val_mse;  /* NaN when has_val is 0 */
    double val_rmse; /* NaN when has_val is 0 */
    int has_val;
    uint64_t epochs_run;
    uint64_t best_epoch; /* 1-based */
    int stopped_early;
    double best_loss; /* monitored loss, normalized units */
    uint64_t train_windows;
    uint64_t val_windows;
} seqcast_train_summary;

/* Requires "data"; writes model.bin, trainlog.txt, and train_manifest.json
 * into out_dir. */
SEQCAST_API seqcast_status seqcast_train(const seqcast_options* opts,
                                         seqcast_train_summary* summary);

typedef struct seqcast_eval_summary {
    double mse; /* original units */
    double rmse;
    uint64_t windows;
} seqcast_eval_summary;

/* Requires "data" and "checkpoint"; writes predictions.csv and
 * evaluate_manifest.json into out_dir. */
SEQCAST_API seqcast_status seqcast_evaluate(const seqcast_options* opts,
                                            seqcast_eval_summary* summary);

typedef struct seqcast_prediction {
    char date[16]; /* ISO YYYY-MM-DD */
    double value;  /* original units */
} seqcast_prediction;

/* Requires "data" and "checkpoint". Fills up to capacity predictions and
 * sets *count to the number produced ("steps" option, default 1). */
SEQCAST_API seqcast_status seqcast_predict(const seqcast_options* opts, seqcast_prediction* out,
                                           size_t capacity, size_t* count);

/* ------------------------------------------------------------------ */
/* Gradient checking                                                   */
/* ------------------------------------------------------------------ */

typedef struct seqcast_gradcheck_block {
    char name[48];
    double max_abs_diff;
    double max_rel_err;
    int pass;
} seqcast_gradcheck_block;

/* Compares analytic gradients with central finite differences on the
 * built-in down-scaled architecture. Only the "seed" option is consulted.
 * Call with blocks == NULL to query the block count. Returns SEQCAST_OK
 * when every block passes, SEQCAST_GRADCHECK_FAILED otherwise (blocks and
 * *all_pass are still filled). */
SEQCAST_API seqcast_status seqcast_gradient_check(const seqcast_options* opts, double tolerance,
                                                  seqcast_gradcheck_block* blocks, size_t capacity,
                                                  size_t* count, int* all_pass);

/* ------------------------------------------------------------------ */
/* Loaded models                                                       */
/* ------------------------------------------------------------------ */

typedef struct seqcast_model seqcast_model;

SEQCAST_API seqcast_status seqcast_model_open(const char* checkpoint_path, seqcast_model** out);
SEQCAST_API void seqcast_model_close(seqcast_model* model);

SEQCAST_API uint64_t seqcast_model_window(const seqcast_model* model);
SEQCAST_API uint64_t seqcast_model_features(const seqcast_model* model);
SEQCAST_API uint64_t seqcast_model_param_count(const seqcast_model* model);

/* One next-step forecast. `window` is row-major [window x features] in
 * original units (temperature first per row); len must equal
 * window * features. The result is in original units. Safe to call
 * concurrently on one model from several threads. */
SEQCAST_API seqcast_status seqcast_model_predict(const seqcast_model* model, const double* window,
                                                 size_t len, double* prediction);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SEQCAST_H */
