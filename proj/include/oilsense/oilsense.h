/* Copyright 2026 The OilSense Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef OILSENSE_OILSENSE_H_
#define OILSENSE_OILSENSE_H_

#include <stddef.h>

#if defined(OILSENSE_BUILDING_LIBRARY)
#define OS_API __attribute__((visibility("default")))
#else
#define OS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

// Status codes match the command-line exit codes.
typedef enum {
  OS_OK = 0,
  OS_ERR_USAGE = 1,
  OS_ERR_DATA = 2,
  OS_ERR_NUMERIC = 3,
  OS_ERR_INTERNAL = 4,
} os_status;

typedef struct os_scene os_scene;
typedef struct os_relnet os_relnet;
typedef struct os_ruleset os_ruleset;
typedef struct os_pipeline os_pipeline;

// Message of the last failed call on this thread; never NULL.
OS_API const char* os_last_error(void);
OS_API const char* os_version(void);
// Frees strings returned through char** out-parameters.
OS_API void os_string_free(char* s);

// Scenes.
OS_API os_status os_scene_parse(const char* json, os_scene** out);
OS_API os_status os_scene_load(const char* path, os_scene** out);
OS_API os_status os_scene_to_json(const os_scene* scene, char** out);
OS_API size_t os_scene_object_count(const os_scene* scene);
OS_API void os_scene_free(os_scene* scene);

// Relation network.
OS_API os_status os_relnet_load(const char* path, os_relnet** out);
// label: 0 above, 1 nearby, 2 other; probs receives 3 values (may be NULL).
OS_API os_status os_relnet_predict(const os_relnet* net, const os_scene* scene, int subject_id, int reference_id,
                                   int* label, double* probs);
OS_API void os_relnet_free(os_relnet* net);

// Rules. Parameters come from inline "@ [...]" annotations or a later
// os_ruleset_set_params call.
OS_API os_status os_ruleset_parse(const char* text, os_ruleset** out);
OS_API os_status os_ruleset_set_params(os_ruleset* rules, const char* params_json);
OS_API size_t os_ruleset_size(const os_ruleset* rules);
OS_API os_status os_ruleset_to_text(const os_ruleset* rules, char** out);
// fired_rule is -1 when no rule has a binding.
OS_API os_status os_ruleset_evaluate(const os_ruleset* rules, const os_scene* scene, const os_relnet* net,
                                     double* score, int* fired_rule);
OS_API void os_ruleset_free(os_ruleset* rules);

// End-to-end pipeline.
OS_API os_status os_pipeline_load(const char* config_path, os_pipeline** out);
OS_API os_status os_pipeline_infer(const os_pipeline* p, const os_scene* scene, char** report_json);
// tables_text may be NULL.
OS_API os_status os_pipeline_eval_dir(const os_pipeline* p, const char* scenes_dir, int ablations,
                                      char** report_json, char** tables_text);
OS_API void os_pipeline_free(os_pipeline* p);

// File-level commands. report/summary out-parameters may be NULL.
OS_API os_status os_enhance_file(const char* in_path, const char* out_path, double wb, double wo, double wd,
                                 char** report_json);
// count < 0 reads n_scenes / n_pairs from the config.
OS_API os_status os_generate_scenes(const char* config_json, long count, const char* out_dir, size_t* written);
OS_API os_status os_generate_pairs(const char* config_json, long count, const char* out_dir, size_t* written);
OS_API os_status os_train_relnet(const char* pairs_path, const char* config_json, const char* out_path,
                                 char** loss_csv);
// config_json may be NULL for defaults.
OS_API os_status os_train_rules(const char* rules_path, const char* scenes_dir, const char* relnet_path,
                                const char* config_json, const char* out_path, char** summary_json);

#ifdef __cplusplus
}  // extern "C"
#endif

#endif  // OILSENSE_OILSENSE_H_
