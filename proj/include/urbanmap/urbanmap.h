/* C interface to liburbanmap. All functions return a um_status; on failure
 * um_last_error() describes the problem (per calling thread). Handles are
 * owned by the caller and released with the matching *_free function.
 *
 * Masks travel as single-channel rasters. Inputs treat any nonzero byte as
 * urban; outputs use bytes 0 and 255 so they can be written directly. */
#ifndef URBANMAP_H
#define URBANMAP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define UM_API __attribute__((visibility("default")))
#else
#define UM_API
#endif

typedef enum um_status {
    UM_OK = 0,
    UM_ERR_IO = 1,
    UM_ERR_FORMAT = 2,
    UM_ERR_UNSUPPORTED = 3,
    UM_ERR_ARGUMENT = 4,
    UM_ERR_SHAPE = 5,
    UM_ERR_CONTRACT = 6,
    UM_ERR_ASSEMBLY = 7,
    UM_ERR_ALIGNMENT = 8,
    UM_ERR_CRS = 9,
    UM_ERR_NUMERIC = 10,
    UM_ERR_PAIRING = 11,
    UM_ERR_EMPTY_DATASET = 12,
    UM_ERR_PLACEMENT = 13,
    UM_ERR_NULL = 20,
    UM_ERR_INTERNAL = 99
} um_status;

typedef struct um_raster um_raster;
typedef struct um_model um_model;

UM_API const char* um_last_error(void);
UM_API const char* um_status_name(um_status status);
UM_API const char* um_version(void);

/* ---- rasters ---- */

/* origin_x, origin_y, pixel_w, pixel_h, rot_xy, rot_yx; the origin is the
 * center of pixel (0,0). */
typedef struct um_geo {
    double origin_x, origin_y, pixel_w, pixel_h, rot_xy, rot_yx;
} um_geo;

typedef struct um_raster_info {
    int width;
    int height;
    int channels;
    int has_geo;
    um_geo geo;
    int has_crs;
} um_raster_info;

UM_API um_status um_raster_create(int width, int height, int channels, um_raster** out);
UM_API um_status um_raster_read(const char* path, um_raster** out);
UM_API um_status um_raster_write(const um_raster* r, const char* path);
UM_API void um_raster_free(um_raster* r);
UM_API um_status um_raster_info_get(const um_raster* r, um_raster_info* out);
/* Row-major interleaved bytes, width * height * channels long. */
UM_API uint8_t* um_raster_data(um_raster* r);
UM_API um_status um_raster_set_geo(um_raster* r, const um_geo* geo);
/* Copies the CRS text into buf (NUL-terminated); *needed gets the length
 * including the terminator. An empty string means no CRS. */
UM_API um_status um_raster_crs(const um_raster* r, char* buf, size_t cap, size_t* needed);
UM_API um_status um_raster_set_crs(um_raster* r, const char* crs);
UM_API um_status um_pixel_to_world(const um_raster* r, double col, double row, double* x, double* y);

/* ---- synthetic corpus ---- */

typedef struct um_synth_options {
    int count;
    int size;
    uint64_t seed;
    int hard;
    int tiles;
    int tile_size; /* 0: three times size */
} um_synth_options;

UM_API void um_synth_options_default(um_synth_options* o);
UM_API um_status um_synth_corpus(const um_synth_options* o, const char* out_dir);

/* ---- training and inference ---- */

typedef void (*um_epoch_fn)(void* user, int pass, int epoch, double train_loss, double val_loss, double val_f1,
                            double val_oa);

typedef struct um_train_options {
    int epochs1;
    int epochs2;
    int batch;
    int target;
    int base_channels;
    int depth;
    double lr;
    double train_fraction;
    uint64_t seed;
    int threads;
    um_epoch_fn on_epoch; /* may be NULL */
    void* user;
} um_train_options;

UM_API void um_train_options_default(um_train_options* o);
/* Trains both passes on the image/mask directory pair and writes pass1/ and
 * pass2/ under out_dir. out may be NULL. */
UM_API um_status um_train(const char* image_dir, const char* mask_dir, const um_train_options* o,
                          const char* out_dir, um_model** out);
UM_API um_status um_model_load(const char* model_dir, um_model** out);
UM_API void um_model_free(um_model* m);

typedef struct um_model_info {
    int base_channels;
    int depth;
    int best_epoch1;
    int best_epoch2;
    size_t epochs1;
    size_t epochs2;
    size_t parameters; /* per pass-1 network */
} um_model_info;

UM_API um_status um_model_info_get(const um_model* m, um_model_info* out);

typedef struct um_epoch_record {
    double train_loss;
    double val_loss;
    double val_f1;
    double val_oa;
} um_epoch_record;

/* Copies up to cap records of the given pass (1 or 2); *count gets the total. */
UM_API um_status um_model_curve(const um_model* m, int pass, um_epoch_record* buf, size_t cap, size_t* count);

typedef struct um_infer_options {
    int patch;
    int zero_pad; /* 0: reflect padding */
    int overlap_margin;
    double threshold;
    int threads;
} um_infer_options;

UM_API void um_infer_options_default(um_infer_options* o);
/* Dual-pass prediction of one RGB tile. */
UM_API um_status um_infer_tile(const um_model* m, const um_raster* tile, const um_infer_options* o,
                               um_raster** out_mask);
/* Single pass (1 or 2) prediction; pass 2 expects a mask. */
UM_API um_status um_predict_pass(const um_model* m, int pass, const um_raster* input, const um_infer_options* o,
                                 um_raster** out_mask);

typedef void (*um_message_fn)(void* user, const char* message);

/* Writes <stem>_mask.pgm per tile and, when mosaic is set, mosaic.pgm.
 * Per-tile failures are reported through on_failure and counted in *failed. */
UM_API um_status um_predict_corpus(const um_model* m, const char* const* tiles, size_t n_tiles,
                                   const char* out_dir, const um_infer_options* o, int mosaic,
                                   um_message_fn on_failure, void* user, size_t* failed);

UM_API um_status um_mosaic(const um_raster* const* masks, size_t n, um_raster** out);

/* ---- evaluation and baselines ---- */

typedef struct um_confusion {
    uint64_t tp, fp, fn, tn;
} um_confusion;

typedef struct um_metrics {
    double precision, recall, f1, iou, overall_accuracy;
    um_confusion counts;
} um_metrics;

typedef struct um_corpus_report {
    um_metrics pooled;
    double macro_precision, macro_recall, macro_f1, macro_iou, macro_oa;
    size_t scenes;
} um_corpus_report;

UM_API um_status um_confuse(const um_raster* pred, const um_raster* truth, um_confusion* out);
UM_API um_status um_metrics_from(const um_confusion* c, um_metrics* out);
UM_API um_status um_aggregate(const um_metrics* scenes, size_t n, um_corpus_report* out);

UM_API um_status um_kmeans_segment(const um_raster* img, int k, int max_iters, uint64_t seed, um_raster** out);
/* cut < 0 selects Otsu's cut; otherwise a fixed luminance cut in [0, 255]. */
UM_API um_status um_threshold_segment(const um_raster* img, int cut, um_raster** out);
UM_API um_status um_otsu_cut(const um_raster* img, int* cut);

UM_API um_status um_majority_resample(const um_raster* mask, int factor, um_raster** out);

#ifdef __cplusplus
}
#endif

#endif
