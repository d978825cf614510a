/* C interface to the antilimit toolkit. All structured data crosses the
 * boundary as JSON text; strings returned through char** are owned by the
 * caller and released with al_free_string. */
#ifndef ANTILIMIT_H
#define ANTILIMIT_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define AL_API __declspec(dllexport)
#else
#define AL_API __attribute__((visibility("default")))
#endif

typedef enum al_status {
  AL_OK = 0,
  AL_ERR_INTERNAL = 1,
  AL_ERR_CONFIG = 2,
  AL_ERR_HYPOTHESIS = 3, /* standing conditions fail, orbit escapes I, degenerate V */
  AL_ERR_RESOLUTION = 4, /* scan cannot resolve a tangency; refine the grid */
  AL_ERR_CONVERGENCE = 5,
  AL_ERR_CONTRACT = 6 /* argument outside an operation's domain */
} al_status;

typedef struct al_model al_model;

AL_API const char* al_version(void);

/* Builds a model from a JSON model block. */
AL_API al_status al_model_create(const char* model_json, al_model** out);
AL_API void al_model_destroy(al_model* model);

/* Model summary: name, mode, epsilon, epsilon0, base, warnings. */
AL_API al_status al_model_info(const al_model* model, char** json_out);

/* f_theta(args) with args = (x_{k+1}, x_k[, x_{k-1}]); nargs must match the mode. */
AL_API al_status al_model_eval_f(const al_model* model, const double* theta, int theta_dim,
                                 const double* args, int nargs, double* out);

/* Runs one operation (any subcommand name) on a model without writing files.
 * The result is {"result": ..., "metrics": ..., "warnings": [...], "files": {name: text}}.
 * workers <= 0 means all hardware threads. */
AL_API al_status al_call(const al_model* model, const char* op, const char* params_json, int workers,
                         char** result_json);

/* Executes a full run configuration, writing outputs and manifest.json.
 * subcommand may be NULL when the config names it; out_dir NULL uses the
 * config's output.dir; workers < 0 uses the config's value. */
AL_API al_status al_run(const char* subcommand, const char* config_json, const char* out_dir, int workers,
                        char** manifest_json);

/* Last error of the calling thread: plain message, and
 * {"status", "kind", "message", "details"} as JSON. Empty when none. */
AL_API const char* al_last_error(void);
AL_API const char* al_last_error_json(void);

/* Process exit code for a status: 0 ok, 2 config/contract, 3 hypothesis,
 * resolution or convergence, 1 internal. */
AL_API int al_exit_code(al_status status);

AL_API void al_free_string(char* s);

#ifdef __cplusplus
}
#endif

#endif
