/* C interface of the wgviton try-on library. Every call returns a status;
 * on failure wgv_last_error() holds the message for the calling thread. */
#ifndef WGVITON_H
#define WGVITON_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define WGV_API __attribute__((visibility("default")))
#else
#define WGV_API
#endif

typedef enum wgv_status {
  WGV_OK = 0,
  WGV_ERR_IO = 1,
  WGV_ERR_INVALID_RESOLUTION = 2,
  WGV_ERR_INVALID_ARGUMENT = 3,
  WGV_ERR_SHAPE_MISMATCH = 4,
  WGV_ERR_KEYPOINT_OUT_OF_BOUNDS = 5,
  WGV_ERR_TOO_FEW_SAMPLES = 6,
  WGV_ERR_UNKNOWN_ID = 7,
  WGV_ERR_CORRUPT_FILE = 8,
  WGV_ERR_SCHEMA_MISMATCH = 9,
  WGV_ERR_MISSING_TORSO = 10,
  WGV_ERR_DIMENSION = 11,
  WGV_ERR_NON_BINARY = 12,
  WGV_ERR_UNINITIALIZED_MODEL = 13,
  WGV_ERR_ODD_HEIGHT = 14,
  WGV_ERR_EMPTY_SCORES = 15,
  WGV_ERR_LAYER_COUNT_MISMATCH = 16,
  WGV_ERR_NEGATIVE_WEIGHT = 17,
  WGV_ERR_EMPTY_DATASET = 18,
  WGV_ERR_DIVERGED_LOSS = 19,
  WGV_ERR_SINGULAR_SYSTEM = 20,
  WGV_ERR_CHANNEL_MISMATCH = 21,
  WGV_ERR_EMPTY_TARGET_REGION = 22,
  WGV_ERR_TOO_SMALL = 23,
  WGV_ERR_DIMENSION_MISMATCH = 24,
  WGV_ERR_INVALID_CONFIG = 25,
  WGV_ERR_LOCKED = 26,
  WGV_ERR_INTERNAL = 100
} wgv_status;

typedef struct wgv_config wgv_config;
typedef struct wgv_pipeline wgv_pipeline;
typedef struct wgv_server wgv_server;

/* Progress callback for training; `losses_json` is a JSON object. */
typedef void (*wgv_progress_fn)(int64_t step, int64_t total, const char* losses_json, void* user);

WGV_API const char* wgv_version(void);
/* Error code name, e.g. "DimensionError". */
WGV_API const char* wgv_status_name(wgv_status status);
/* Message of the last failed call on this thread ("" after success). */
WGV_API const char* wgv_last_error(void);

/* Configuration (flat key=value). */
WGV_API wgv_status wgv_config_new(wgv_config** out);
WGV_API wgv_status wgv_config_load(const char* path, wgv_config** out);
WGV_API wgv_status wgv_config_set(wgv_config* config, const char* key, const char* value);
/* Copies the value with its terminator; `*needed` receives the full size. */
WGV_API wgv_status wgv_config_get(const wgv_config* config, const char* key, char* buf, size_t cap, size_t* needed);
WGV_API wgv_status wgv_config_save(const wgv_config* config, const char* path);
WGV_API void wgv_config_free(wgv_config* config);

/* Datasets. `split` is "train", "test_pair" or "test_unpair". */
WGV_API wgv_status wgv_generate_dataset(int count, const char* resolution, uint64_t seed, const char* split,
                                        const char* out_dir);
/* Writes `<pair_dir>/manifest_unpair.json` (it shares the paired rasters);
 * the path is copied into out_path. */
WGV_API wgv_status wgv_make_unpaired(const char* pair_dir, uint64_t seed, char* out_path, size_t cap);

/* Trains "wgpgm", "scwm" or "tom" on `<data_dir>` into the config's out_dir.
 * `resume` may be NULL. The checkpoint path is copied into out_path. */
WGV_API wgv_status wgv_train(const char* component, const char* data_dir, const wgv_config* config,
                             const char* resume, wgv_progress_fn progress, void* user, char* out_path, size_t cap);

/* Hem wire-format mask of a sample's own top, moved by `shift_rows`. */
WGV_API wgv_status wgv_default_mask(const char* data_dir, const char* sample_id, int shift_rows, char* buf,
                                    size_t cap, size_t* needed);

/* Inference with three checkpoints; a loaded pipeline is safe to share. */
WGV_API wgv_status wgv_pipeline_load(const char* wgpgm_ckpt, const char* scwm_ckpt, const char* tom_ckpt,
                                     wgv_pipeline** out);
WGV_API void wgv_pipeline_free(wgv_pipeline* pipeline);
/* Runs one dataset sample. `mask_json` is a wire-format mask or NULL for the
 * sample's own hem. Writes `<out_dir>/<sample_id>.json` and its PNGs. */
WGV_API wgv_status wgv_pipeline_infer(const wgv_pipeline* pipeline, const char* data_dir, const char* sample_id,
                                      const char* mask_json, const char* out_dir);

/* Writes the report JSON (and optionally per-sample CSV). `pipeline` may be
 * NULL when `identity` is nonzero. */
WGV_API wgv_status wgv_evaluate(const wgv_pipeline* pipeline, const char* pair_dir, const char* unpair_dir,
                                uint64_t embedder_seed, int threads, int identity, const char* report_path,
                                const char* csv_path);

/* HTTP service over a catalog dataset. The pipeline must outlive it. */
WGV_API wgv_status wgv_server_new(const wgv_pipeline* pipeline, const char* catalog_dir, wgv_server** out);
/* Binds; port 0 picks a free port, reported through bound_port. */
WGV_API wgv_status wgv_server_bind(wgv_server* server, const char* host, int port, int* bound_port);
/* Blocks until wgv_server_stop. */
WGV_API wgv_status wgv_server_run(wgv_server* server);
WGV_API void wgv_server_stop(wgv_server* server);
WGV_API void wgv_server_free(wgv_server* server);

#ifdef __cplusplus
}
#endif

#endif
