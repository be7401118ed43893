/* fsgn — lightweight spatio-temporal encoder-decoder for forecasting human
 * skeleton motion.
 *
 * C API over the core library: opaque handles, integer status codes, and a
 * thread-local error message. All heavyweight entry points take a JSON run
 * configuration (see the README for the schema) so language bindings and the
 * bundled CLI share one surface.
 */
#ifndef FSGN_H
#define FSGN_H

#include <stdint.h>

#if defined(_WIN32)
#  ifdef FSGN_BUILD
#    define FSGN_API __declspec(dllexport)
#  else
#    define FSGN_API __declspec(dllimport)
#  endif
#else
#  define FSGN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. CONFIG/DATA/NUMERIC match the CLI exit codes (2/3/4). */
typedef enum fsgn_status {
  FSGN_OK = 0,
  FSGN_ERROR_INVALID_ARGUMENT = 1,
  FSGN_ERROR_CONFIG = 2,
  FSGN_ERROR_DATA = 3,
  FSGN_ERROR_NUMERIC = 4
} fsgn_status;

typedef struct fsgn_sequence fsgn_sequence; /* skeleton sequence */
typedef struct fsgn_model fsgn_model;       /* trained model (config + weights) */

FSGN_API const char* fsgn_version(void);

/* Message for the last failing call on this thread; empty string if none. */
FSGN_API const char* fsgn_last_error(void);
FSGN_API const char* fsgn_status_name(fsgn_status status);

/* Worker threads for batch gradient evaluation; 0 = hardware default.
 * Results are bit-identical for every setting. */
FSGN_API void fsgn_set_threads(int32_t n);

/* --- sequences ---------------------------------------------------------- */

FSGN_API fsgn_status fsgn_sequence_load(const char* path, fsgn_sequence** out);
FSGN_API fsgn_status fsgn_sequence_save(const fsgn_sequence* seq, const char* path);
FSGN_API void fsgn_sequence_free(fsgn_sequence* seq);

FSGN_API int64_t fsgn_sequence_frames(const fsgn_sequence* seq);
FSGN_API int32_t fsgn_sequence_joints(const fsgn_sequence* seq);
FSGN_API int32_t fsgn_sequence_fps(const fsgn_sequence* seq);

/* Copies the frames row-major (frame-major, 3 values per joint) into buffer;
 * capacity is the buffer length in doubles and must be at least
 * frames * joints * 3. */
FSGN_API fsgn_status fsgn_sequence_values(const fsgn_sequence* seq, double* buffer,
                                          int64_t capacity);

/* --- models ------------------------------------------------------------- */

/* Loads a model.json/model.bin pair; bin path is json path with the
 * extension replaced. Fails with FSGN_ERROR_DATA when the binary size does
 * not match the declared tensor order. */
FSGN_API fsgn_status fsgn_model_load(const char* model_json_path, fsgn_model** out);
FSGN_API void fsgn_model_free(fsgn_model* model);
FSGN_API uint64_t fsgn_model_param_count(const fsgn_model* model);

/* Forecasts horizon_frames frames past the end of history via iterative
 * regression. horizon_frames == 0 yields an empty sequence. */
FSGN_API fsgn_status fsgn_model_predict(const fsgn_model* model, const fsgn_sequence* history,
                                        int32_t horizon_frames, fsgn_sequence** out);

/* --- whole-run entry points (JSON run configuration) -------------------- */

/* Learnable-parameter count for the configured model. config_json may be
 * NULL or empty for the documented defaults. */
FSGN_API fsgn_status fsgn_param_count(const char* config_json, uint64_t* out);

/* Trains and writes <out_dir>/model.json, model.bin, loss_curve.csv. */
FSGN_API fsgn_status fsgn_train_run(const char* config_json, const char* out_dir);

/* Evaluates a checkpoint plus the zero-velocity and constant-velocity
 * baselines; writes the CSV (unless csv_path is NULL) and returns the
 * rendered comparison table via table_out (free with fsgn_string_free). */
FSGN_API fsgn_status fsgn_eval_run(const char* config_json, const char* checkpoint_json_path,
                                   const char* csv_path, char** table_out);

/* Trains and evaluates every grid point of one ablation axis. axis may be
 * NULL when the config carries ablate.axis. */
FSGN_API fsgn_status fsgn_ablate_run(const char* config_json, const char* axis,
                                     const char* csv_path, char** table_out);

/* Writes the configured synthetic corpus as sequence files under out_dir. */
FSGN_API fsgn_status fsgn_synth_run(const char* config_json, const char* out_dir);

FSGN_API void fsgn_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* FSGN_H */
