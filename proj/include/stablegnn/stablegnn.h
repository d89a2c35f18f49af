// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#ifndef STABLEGNN_STABLEGNN_H
#define STABLEGNN_STABLEGNN_H

#include <stddef.h>
#include <stdint.h>

#if defined(STABLEGNN_BUILDING_LIBRARY)
#define SGNN_API __attribute__((visibility("default")))
#else
#define SGNN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgnn_status {
    SGNN_OK = 0,
    SGNN_ERR_ARGUMENT = 1, /* null pointer or bad enum string */
    SGNN_ERR_SHAPE = 2,
    SGNN_ERR_PARAMETER = 3,
    SGNN_ERR_NUMERIC = 4,
    SGNN_ERR_IO = 5,
    SGNN_ERR_PARSE = 6,
    SGNN_ERR_INTERNAL = 7
} sgnn_status;

typedef struct sgnn_dataset sgnn_dataset;
typedef struct sgnn_config sgnn_config;
typedef struct sgnn_model sgnn_model;

typedef struct sgnn_dataset_stats {
    size_t graphs;
    size_t positives;
    size_t positives_with_star;
    double star_rate; /* among positives */
    double mean_nodes;
    double mu;
    uint64_t seed;
} sgnn_dataset_stats;

typedef struct sgnn_metrics {
    double accuracy;
    double f1;
    double auc;  /* valid only when has_auc != 0 */
    int has_auc; /* 0 when the data holds a single class */
} sgnn_metrics;

typedef struct sgnn_experiment_options {
    const sgnn_config* config;
    const char* train_path;
    const char* val_path;
    const char* test_path; /* may be NULL */
    const char* out_dir;
    size_t runs; /* run k uses seed + k */
    size_t jobs;
} sgnn_experiment_options;

SGNN_API const char* sgnn_version(void);
/* Message of the last failed call on this thread; "" after success. */
SGNN_API const char* sgnn_last_error(void);
SGNN_API const char* sgnn_status_name(sgnn_status status);
/* Strings returned through char** outputs are released with this. */
SGNN_API void sgnn_string_free(char* s);

/* split is "train", "val" or "test". */
SGNN_API sgnn_status sgnn_dataset_generate(double mu, size_t n, uint64_t seed,
                                           const char* split, sgnn_dataset** out);
SGNN_API sgnn_status sgnn_dataset_load(const char* path, sgnn_dataset** out);
SGNN_API sgnn_status sgnn_dataset_save(const sgnn_dataset* d, const char* path);
SGNN_API sgnn_status sgnn_dataset_stats_get(const sgnn_dataset* d,
                                            sgnn_dataset_stats* out);
SGNN_API void sgnn_dataset_free(sgnn_dataset* d);

SGNN_API sgnn_status sgnn_config_default(sgnn_config** out);
SGNN_API sgnn_status sgnn_config_parse(const char* text, sgnn_config** out);
SGNN_API sgnn_status sgnn_config_load(const char* path, sgnn_config** out);
/* Errors name the key. */
SGNN_API sgnn_status sgnn_config_set(sgnn_config* c, const char* key,
                                     const char* value);
SGNN_API sgnn_status sgnn_config_validate(const sgnn_config* c);
SGNN_API sgnn_status sgnn_config_to_string(const sgnn_config* c, char** out);
SGNN_API void sgnn_config_free(sgnn_config* c);

/* Trains one model with the config's seed. history_csv may be NULL. */
SGNN_API sgnn_status sgnn_train(const sgnn_config* c, const sgnn_dataset* train,
                                const sgnn_dataset* val, sgnn_model** model,
                                char** history_csv);
SGNN_API sgnn_status sgnn_model_save(const sgnn_model* m, const char* path);
SGNN_API sgnn_status sgnn_model_load(const char* path, sgnn_model** out);
SGNN_API sgnn_status sgnn_model_evaluate(sgnn_model* m, const sgnn_dataset* d,
                                         sgnn_metrics* out);
SGNN_API void sgnn_model_free(sgnn_model* m);

/* Multi-seed training with artifacts under out_dir; manifest_json may be NULL. */
SGNN_API sgnn_status sgnn_experiment_run(const sgnn_experiment_options* options,
                                         char** manifest_json);
/* Comparison table over run manifests given as JSON texts. */
SGNN_API sgnn_status sgnn_report(const char* const* manifests, size_t count,
                                 char** csv, char** text);

#ifdef __cplusplus
}
#endif

#endif
