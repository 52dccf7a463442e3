#ifndef OHIO_H
#define OHIO_H

/* C interface to the ohio library. Every function returns an ohio_status;
 * on failure ohio_last_error() describes the problem for the calling thread.
 * Strings returned by the library stay valid until the owning handle is
 * freed (or, for ohio_last_error, until the next failing call). */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#  ifdef OHIO_BUILDING_LIBRARY
#    define OHIO_API __declspec(dllexport)
#  else
#    define OHIO_API __declspec(dllimport)
#  endif
#else
#  define OHIO_API __attribute__((visibility("default")))
#endif

/* Values double as process exit codes. */
typedef enum ohio_status {
  OHIO_OK = 0,
  OHIO_ERR_USAGE = 1,
  OHIO_ERR_DATA = 2,
  OHIO_ERR_NUMERIC = 3
} ohio_status;

typedef struct ohio_config ohio_config;
typedef struct ohio_env ohio_env;
typedef struct ohio_policy ohio_policy;

OHIO_API const char* ohio_version(void);
OHIO_API const char* ohio_last_error(void);
/* Error kind of the last failure, e.g. "ParseError"; empty after success. */
OHIO_API const char* ohio_last_error_kind(void);

/* Warnings go to stderr unless a callback is installed; NULL restores stderr. */
typedef void (*ohio_warning_fn)(const char* message);
OHIO_API void ohio_set_warning_callback(ohio_warning_fn fn);

/* ---- configuration ---------------------------------------------------- */

/* path may be NULL for defaults. With use_env_seed != 0, OHIO_SEED replaces
 * the seed from the file; later ohio_config_set calls still win. */
OHIO_API ohio_status ohio_config_new(const char* path, int use_env_seed, ohio_config** out);
OHIO_API void ohio_config_free(ohio_config* cfg);
/* Dotted key such as "env.kind"; the value is parsed as JSON, else taken as a string. */
OHIO_API ohio_status ohio_config_set(ohio_config* cfg, const char* key, const char* value);
OHIO_API ohio_status ohio_config_seed(const ohio_config* cfg, uint64_t* seed);
OHIO_API const char* ohio_config_hash(ohio_config* cfg);
OHIO_API const char* ohio_config_json(ohio_config* cfg);

/* ---- pipeline ---------------------------------------------------------- */

OHIO_API ohio_status ohio_collect(const ohio_config* cfg, const char* out_path, size_t* records);

typedef struct ohio_relabel_summary {
  size_t windows;
  size_t retained;
  double mean_inv_loss;
  double max_inv_loss;
} ohio_relabel_summary;

OHIO_API ohio_status ohio_relabel(const ohio_config* cfg, const char* in_path, const char* out_path,
                                  ohio_relabel_summary* summary);
OHIO_API ohio_status ohio_train(const ohio_config* cfg, const char* dataset_path, const char* model_path,
                                double* final_loss);

typedef struct ohio_eval_summary {
  double mean;
  double stddev;
  double normalized;
  double reference;
  int episodes;
} ohio_eval_summary;

/* model_path NULL or "" evaluates the reference policy; results_path,
 * table_path and label may be NULL. */
OHIO_API ohio_status ohio_eval(const ohio_config* cfg, const char* model_path, const char* results_path,
                               const char* table_path, const char* label, ohio_eval_summary* summary);

/* ---- acceptance suite -------------------------------------------------- */

typedef void (*ohio_check_fn)(int criterion, int passed, const char* line, void* user);

/* criteria == NULL or count == 0 runs all of them. artifacts may be NULL. */
OHIO_API ohio_status ohio_check(uint64_t seed, const int* criteria, size_t count, const char* artifacts,
                                ohio_check_fn on_result, void* user, int* failed);

/* ---- environments ------------------------------------------------------ */

OHIO_API ohio_status ohio_env_new(const ohio_config* cfg, ohio_env** out);
OHIO_API void ohio_env_free(ohio_env* env);
OHIO_API size_t ohio_env_observation_dim(const ohio_env* env);
OHIO_API size_t ohio_env_action_dim(const ohio_env* env);
/* obs must hold ohio_env_observation_dim doubles. */
OHIO_API ohio_status ohio_env_reset(ohio_env* env, uint64_t seed, double* obs);
OHIO_API ohio_status ohio_env_step(ohio_env* env, const double* action, size_t action_len, double* obs,
                                   double* reward, int* done);

/* ---- trained policies -------------------------------------------------- */

OHIO_API ohio_status ohio_policy_load(const char* path, ohio_policy** out);
OHIO_API void ohio_policy_free(ohio_policy* policy);
OHIO_API size_t ohio_policy_input_dim(const ohio_policy* policy);
OHIO_API size_t ohio_policy_output_dim(const ohio_policy* policy);
/* out must hold ohio_policy_output_dim doubles. */
OHIO_API ohio_status ohio_policy_act(const ohio_policy* policy, const double* obs, size_t obs_len, double* out);

#ifdef __cplusplus
}
#endif

#endif /* OHIO_H */
