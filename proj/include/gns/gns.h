/*
 * Copyright 2026 The gns-desk Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the learned particle simulator.
 *
 * Every function returns a gns_status. On failure, gns_last_error() holds a
 * message for the calling thread until its next failing call. Objects are
 * opaque handles released with the matching *_free function; passing NULL
 * to a free function is a no-op.
 */
#ifndef GNS_GNS_H_
#define GNS_GNS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(GNS_BUILDING_LIBRARY)
#define GNS_API __attribute__((visibility("default")))
#else
#define GNS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as process exit codes in the command-line tool. */
typedef enum gns_status {
  GNS_OK = 0,
  GNS_ERROR_USAGE = 1,   /* bad arguments or configuration */
  GNS_ERROR_DATA = 2,    /* missing, malformed or mismatched files */
  GNS_ERROR_NUMERIC = 3  /* non-finite loss, rollout blow-up */
} gns_status;

GNS_API const char* gns_version(void);
GNS_API const char* gns_last_error(void);
GNS_API void gns_string_free(char* s);

/* ---- configuration ---------------------------------------------------- */

typedef struct gns_config gns_config;

GNS_API gns_status gns_config_new(gns_config** out);
/* Loads a JSON file; unknown keys are rejected. */
GNS_API gns_status gns_config_load(const char* path, gns_config** out);
/* Sets a dotted key such as "train.noise.sigma_v" to a JSON literal. */
GNS_API gns_status gns_config_set_json(gns_config* config, const char* key, const char* json_value);
GNS_API gns_status gns_config_set_string(gns_config* config, const char* key, const char* value);
/* Fully resolved configuration as JSON text; release with gns_string_free. */
GNS_API gns_status gns_config_resolved(const gns_config* config, char** out_json);
GNS_API void gns_config_free(gns_config* config);

/* ---- commands --------------------------------------------------------- */

/* Receives human-readable progress lines; may be NULL. */
typedef void (*gns_progress_fn)(const char* message, void* user);

/* Writes a dataset directory (trajectory files, manifest.json, config.json). */
GNS_API gns_status gns_gen(const gns_config* config, const char* out_dir);

/* Trains on <dataset>/train, validating on <dataset>/valid. Writes
 * config.json, train_log.csv, best.ckpt and last.ckpt. resume may be NULL. */
GNS_API gns_status gns_train(const gns_config* config, const char* dataset, const char* out_dir,
                             const char* resume, gns_progress_fn progress, void* user);

/* Rolls a checkpoint out from the first C+1 frames of one trajectory.
 * steps = 0 runs to the end of the source. Writes <out> and <out>.json;
 * timings_csv may be NULL. A blow-up still writes the partial rollout and
 * returns GNS_ERROR_NUMERIC. */
GNS_API gns_status gns_rollout(const char* checkpoint, const char* dataset, const char* split,
                               size_t traj_index, size_t steps, const char* out,
                               const char* timings_csv);

/* Writes report.json, curves.csv and config.json. checkpoint = NULL
 * evaluates the ground-truth oracle. metrics is a comma list of mse,ot,mmd. */
GNS_API gns_status gns_eval(const gns_config* config, const char* checkpoint, const char* dataset,
                            const char* split, const char* metrics, const char* out_dir);

/* axis is one of M, radius, noise, shared, encoder; values is a comma list.
 * Writes ablation.csv and config.json. */
GNS_API gns_status gns_ablate(const gns_config* config, const char* dataset, const char* axis,
                              const char* values, size_t seeds, const char* out_dir,
                              gns_progress_fn progress, void* user);

/* Renders a curves or ablation CSV as SVG (out ending in .svg) or copies
 * the table and writes the SVG alongside (out ending in .csv). */
GNS_API gns_status gns_plot(const char* in_csv, const char* out);

/* ---- trajectories ----------------------------------------------------- */

typedef struct gns_trajectory gns_trajectory;

GNS_API gns_status gns_trajectory_read(const char* path, gns_trajectory** out);
GNS_API gns_status gns_trajectory_shape(const gns_trajectory* t, size_t* num_steps,
                                        size_t* num_particles, size_t* dim, size_t* num_globals);
/* Copies frame positions (N*D values, row-major) into out. */
GNS_API gns_status gns_trajectory_frame(const gns_trajectory* t, size_t frame, double* out,
                                        size_t out_len);
GNS_API gns_status gns_trajectory_materials(const gns_trajectory* t, uint8_t* out, size_t out_len);
GNS_API void gns_trajectory_free(gns_trajectory* t);

/* ---- models ----------------------------------------------------------- */

typedef struct gns_model gns_model;

GNS_API gns_status gns_model_load(const char* checkpoint, gns_model** out);
GNS_API gns_status gns_model_info(const gns_model* m, size_t* dim, size_t* history,
                                  size_t* num_globals, size_t* num_parameters);
/* One acceleration prediction.
 *   positions: (history+1) frames of N*D values, oldest first
 *   material:  N ids; globals: num_globals values (may be NULL if 0)
 *   box_lower, box_upper: D values each
 *   accel_out: N*D values */
GNS_API gns_status gns_model_predict(const gns_model* m, const double* positions,
                                     size_t num_particles, const uint8_t* material,
                                     const double* globals, const double* box_lower,
                                     const double* box_upper, double* accel_out);
GNS_API void gns_model_free(gns_model* m);

#ifdef __cplusplus
}
#endif

#endif /* GNS_GNS_H_ */
