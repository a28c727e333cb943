/* C interface to the GLT-T tracker library. Every function returns a
 * gltt_status; on failure gltt_last_error() holds a message for the calling
 * thread until its next call into the library. */
#ifndef GLTT_GLTT_H
#define GLTT_GLTT_H

#include <stddef.h>

#if defined(GLTT_BUILDING_LIBRARY)
#define GLTT_API __attribute__((visibility("default")))
#else
#define GLTT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gltt_status {
  GLTT_OK = 0,
  GLTT_ERR_INTERNAL = 1,
  GLTT_ERR_CONFIG = 2,
  GLTT_ERR_DATA = 3,
  GLTT_ERR_NUMERIC = 4,
  GLTT_ERR_VERSION = 5,
  GLTT_ERR_PARAMETER = 6,
  GLTT_ERR_INPUT = 7,
  GLTT_ERR_SHAPE = 8,
  GLTT_ERR_METRIC = 9,
  GLTT_ERR_USAGE = 10
} gltt_status;

typedef struct gltt_model gltt_model;

GLTT_API const char* gltt_version(void);
GLTT_API const char* gltt_last_error(void);
GLTT_API const char* gltt_status_name(int status);

/* Model handles. config_json may be NULL for defaults. */
GLTT_API int gltt_model_create(const char* config_json, gltt_model** out);
GLTT_API int gltt_model_load(const char* checkpoint_path, gltt_model** out);
GLTT_API int gltt_model_save(const gltt_model* model, const char* checkpoint_path);
GLTT_API int gltt_model_parameter_count(const gltt_model* model, size_t* out);
/* Tracks one sequence directory; writes frame,cx,cy,cz,w,h,l,yaw rows. */
GLTT_API int gltt_model_track(gltt_model* model, const char* sequence_dir, const char* out_csv);
GLTT_API void gltt_model_destroy(gltt_model* model);

/* Writes config.json, loss.csv, checkpoint.gltt and, when
 * train.checkpoint_every > 0, step_NNNNNN.gltt into out_dir. */
GLTT_API int gltt_train(const char* config_json, const char* out_dir);
GLTT_API int gltt_track(const char* checkpoint_path, const char* sequence_dir, const char* out_csv);
/* frames_csv may be NULL to skip the per-frame table. */
GLTT_API int gltt_evaluate(const char* checkpoint_path, const char* data_dir,
                           const char* report_json, const char* frames_csv);
/* axis: "m", "n" or "components"; values comma separated. config_json may be NULL. */
GLTT_API int gltt_ablate(const char* config_json, const char* axis, const char* values,
                         const char* out_csv);
/* Writes spec.sequences synthetic sequences to out_dir. */
GLTT_API int gltt_generate(const char* spec_json, const char* out_dir);

GLTT_API int gltt_success_auc(const double* overlaps, size_t count, double* out);
GLTT_API int gltt_precision_auc(const double* errors, size_t count, double* out);
/* Boxes as {cx, cy, cz, w, h, l, yaw}. */
GLTT_API int gltt_box_iou(const double* a, const double* b, double* out);

#ifdef __cplusplus
}
#endif

#endif
