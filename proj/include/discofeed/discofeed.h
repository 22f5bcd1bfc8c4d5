/* C interface to the discofeed engine. All strings are UTF-8. Functions that
 * produce text hand back a heap string the caller releases with
 * df_string_free. On failure df_last_error() describes the error of the
 * calling thread. */
#ifndef DISCOFEED_H
#define DISCOFEED_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define DF_API __declspec(dllexport)
#else
#define DF_API __attribute__((visibility("default")))
#endif

typedef struct df_engine df_engine;

typedef enum df_status {
  DF_OK = 0,
  DF_ERR_INVALID_ARGUMENT = 1,
  DF_ERR_IO = 2,
  DF_ERR_PARSE = 3,
  DF_ERR_NOT_FOUND = 4,
  DF_ERR_NOT_READY = 5,
  DF_ERR_EMPTY_INPUT = 6,
  DF_ERR_DIMENSION_MISMATCH = 7,
  DF_ERR_INTERNAL = 8
} df_status;

/* config_path may be NULL: then $DISCOFEED_CONFIG is used if set, else
 * built-in defaults. */
DF_API df_status df_engine_create(const char* config_path, df_engine** out);
DF_API void df_engine_destroy(df_engine* engine);

DF_API const char* df_last_error(void);
DF_API const char* df_status_string(df_status status);
DF_API void df_string_free(char* s);

/* Effective configuration as JSON. */
DF_API df_status df_config(df_engine* engine, char** out_json);

/* Overrides one configuration key; value_json is a JSON literal such as
 * "\"data/corpus.tsv\"" or "0.2". Relative paths resolve against the
 * working directory. Drops any loaded inference state. */
DF_API df_status df_config_set(df_engine* engine, const char* key, const char* value_json);

/* Pipeline stages. report_json may be NULL; otherwise it receives
 * {"warnings": [...], "summary": {...}}. */
DF_API df_status df_ingest(df_engine* engine, char** report_json);
DF_API df_status df_build_graphs(df_engine* engine, char** report_json);
DF_API df_status df_generate_triplets(df_engine* engine, char** report_json);
DF_API df_status df_train(df_engine* engine, char** report_json);

/* Loads the built artifacts for inference. Called implicitly by the
 * inference functions below; DF_ERR_NOT_READY if a stage is missing. */
DF_API df_status df_load(df_engine* engine);

/* mode: "minimal", "cluster" or "full". */
DF_API df_status df_feedback(df_engine* engine, const char* exercise_id, const char* text,
                             const char* mode, char** out_json);
DF_API df_status df_evaluate(df_engine* engine, const char* eval_path, char** out_json);
DF_API df_status df_segment(df_engine* engine, const char* text, char** out_json);

DF_API df_status df_list_exercises(df_engine* engine, char** out_json);
DF_API df_status df_get_exercise(df_engine* engine, const char* exercise_id, char** out_json);

DF_API df_status df_session_create(df_engine* engine, const char* exercise_id, const char* mode,
                                   char** out_json);
DF_API df_status df_session_attempt(df_engine* engine, const char* session_id, const char* text,
                                    char** out_json);
DF_API df_status df_session_get(df_engine* engine, const char* session_id, char** out_json);

#ifdef __cplusplus
}
#endif

#endif
