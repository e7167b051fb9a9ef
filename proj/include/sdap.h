/*
 * libsdap - self-supervised image denoising via random sub-samples generation
 *
 * C interface. All objects are opaque handles; every fallible call returns an
 * sdap_status and leaves a human-readable message in sdap_last_error() when it
 * fails. Strings returned through char** are heap-allocated and must be
 * released with sdap_string_free().
 */

#ifndef SDAP_H
#define SDAP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef SDAP_API
#define SDAP_API __attribute__((visibility("default")))
#endif

typedef enum sdap_status {
    SDAP_OK = 0,
    SDAP_ERR_INVALID_ARGUMENT = 1,
    SDAP_ERR_IO = 2,
    SDAP_ERR_SHAPE = 3,
    SDAP_ERR_CONFIG = 4,
    SDAP_ERR_RUNTIME = 5
} sdap_status;

typedef struct sdap_image sdap_image;
typedef struct sdap_model sdap_model;

SDAP_API const char* sdap_version(void);

/* thread-local message describing the most recent failure in this thread */
SDAP_API const char* sdap_last_error(void);

SDAP_API void sdap_string_free(char* s);

/* ---- images: H x W x C float grids in [0,1], channel-interleaved ---- */

SDAP_API sdap_status sdap_image_load(const char* path, sdap_image** out);
SDAP_API sdap_status sdap_image_save(const sdap_image* img, const char* path);
SDAP_API sdap_status sdap_image_create(int32_t height, int32_t width, int32_t channels,
                                       const float* hwc_data /* nullable: zeros */,
                                       sdap_image** out);
SDAP_API void sdap_image_free(sdap_image* img);
SDAP_API int32_t sdap_image_height(const sdap_image* img);
SDAP_API int32_t sdap_image_width(const sdap_image* img);
SDAP_API int32_t sdap_image_channels(const sdap_image* img);
SDAP_API sdap_status sdap_image_read(const sdap_image* img, float* dst, size_t capacity);

/* noise_json: {"kind":"awgn"|"correlated","sigma":25,"seed_mode":"fixed"|
   "per_epoch_random","correlation_scale":2}; output is unclipped */
SDAP_API sdap_status sdap_image_add_noise(const sdap_image* clean, const char* noise_json,
                                          int32_t epoch, int32_t image_index, uint64_t seed,
                                          sdap_image** out);

/* ---- models ---- */

/* config_json keys: in_channels, base_channels, blocks_per_branch,
   branch_dilations, seed */
SDAP_API sdap_status sdap_model_create(const char* config_json, sdap_model** out);
SDAP_API sdap_status sdap_model_load(const char* path, sdap_model** out);
SDAP_API sdap_status sdap_model_save(const sdap_model* model, const char* path);
SDAP_API void sdap_model_free(sdap_model* model);

/* JSON summary: config, parameter count, receptive-field radius,
   minimum input size */
SDAP_API sdap_status sdap_model_describe(const sdap_model* model, char** json_out);

/* pipeline: "pd" | "pd_enhance" | "nrsg" | "nrsg_enhance" */
SDAP_API sdap_status sdap_denoise_image(const sdap_model* model, const sdap_image* input,
                                        const char* pipeline, int32_t stride, int32_t passes,
                                        uint64_t seed, sdap_image** out);

/* perturbs random pixels and asserts the output at each one is bit-for-bit
   unchanged; max observed deviation is written to max_deviation_out */
SDAP_API sdap_status sdap_blind_spot_audit(const sdap_model* model, int32_t trials, uint64_t seed,
                                           double* max_deviation_out, char** detail_out);

/* ---- metrics ---- */

SDAP_API sdap_status sdap_psnr(const sdap_image* a, const sdap_image* b, double* out);
SDAP_API sdap_status sdap_ssim(const sdap_image* a, const sdap_image* b, double* out);

/* pairs files by name across the two directories, writes a CSV with one row
   per image plus a mean row, and returns {"count","mean_psnr","mean_ssim"} */
SDAP_API sdap_status sdap_eval_dirs(const char* test_dir, const char* reference_dir,
                                    const char* csv_path, char** summary_json_out);

/* ---- sub-sampling ---- */

/* Splits into stride^2 sub-images (reflect-padding first when needed).
   use_rsg = 0 gives the fixed PD decomposition; 1 draws a fresh random plan
   from `seed`. The array and each image must be freed by the caller. */
SDAP_API sdap_status sdap_sample_split(const sdap_image* img, int32_t stride, int32_t use_rsg,
                                       uint64_t seed, sdap_image*** subs_out, int32_t* count_out);
SDAP_API void sdap_image_array_free(sdap_image** subs, int32_t count);

/* split-then-merge round trip; writes the max absolute difference (0 when the
   bijection holds) */
SDAP_API sdap_status sdap_sample_roundtrip(const sdap_image* img, int32_t stride, int32_t use_rsg,
                                           uint64_t seed, double* max_abs_diff_out);

/* ---- long-running runs; outputs land under out_dir ---- */

SDAP_API sdap_status sdap_train_run(const char* config_json, const char* out_dir,
                                    char** summary_json_out);
SDAP_API sdap_status sdap_seed_experiment_run(const char* config_json, const char* out_dir,
                                              char** summary_json_out);
SDAP_API sdap_status sdap_sweep_run(const char* config_json, const char* out_dir,
                                    char** summary_json_out);
SDAP_API sdap_status sdap_ablation_run(const char* config_json, const char* out_dir,
                                       char** summary_json_out);

#ifdef __cplusplus
}
#endif

#endif /* SDAP_H */
