/* C interface to the local-regret library. All functions return an lr_status;
 * on failure lr_last_error() describes the problem (thread-local). */
#ifndef LOCALREGRET_H
#define LOCALREGRET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define LR_API __declspec(dllexport)
#else
#define LR_API __attribute__((visibility("default")))
#endif

typedef enum lr_status {
  LR_OK = 0,
  LR_ERR_ARGUMENT = 1,
  LR_ERR_PRECONDITION = 2,
  LR_ERR_SAFETY_CAP = 3,
  LR_ERR_CONFIG = 4,
  LR_ERR_IO = 5,
  LR_ERR_INTERNAL = 6
} lr_status;

typedef struct lr_body lr_body;
typedef struct lr_loss lr_loss;
typedef struct lr_report lr_report;

typedef struct lr_loss_constants {
  double bound;
  double lipschitz;
  double smoothness;
  double hessian_lipschitz; /* negative when unknown */
  double domain_radius;     /* INFINITY when global */
} lr_loss_constants;

typedef struct lr_run_options {
  const char* out_dir;            /* NULL: "out" */
  const uint64_t* seed_override;  /* NULL: use the config's seeds */
  size_t seed_override_count;
  int parallelism;                /* < 1 treated as 1 */
} lr_run_options;

LR_API const char* lr_last_error(void);
LR_API const char* lr_version(void);

/* Convex bodies. */
LR_API lr_status lr_body_unconstrained(int dim, lr_body** out);
LR_API lr_status lr_body_box(int dim, const double* lower, const double* upper, lr_body** out);
LR_API lr_status lr_body_ball(int dim, const double* center, double radius, lr_body** out);
LR_API void lr_body_destroy(lr_body* body);
LR_API int lr_body_dim(const lr_body* body);
LR_API lr_status lr_body_project(const lr_body* body, const double* x, double* out);
LR_API lr_status lr_projected_gradient(const lr_body* body, double eta, const double* grad,
                                       const double* x, double* out, double* norm);

/* Built-in losses. */
LR_API lr_status lr_loss_builtin(const char* name, const double* params, size_t n_params, int dim,
                                 double radius, lr_loss** out);
LR_API void lr_loss_destroy(lr_loss* loss);
LR_API int lr_loss_dim(const lr_loss* loss);
LR_API lr_status lr_loss_value(const lr_loss* loss, const double* x, double* out);
LR_API lr_status lr_loss_gradient(const lr_loss* loss, const double* x, double* out);
LR_API lr_status lr_loss_constants_get(const lr_loss* loss, lr_loss_constants* out);

LR_API double lr_expected_lower_bound(long horizon, int window);

/* Harness. Reports own their text; free with lr_report_destroy. */
LR_API lr_status lr_run_config(const char* config_path, const lr_run_options* options,
                               lr_report** out);
LR_API lr_status lr_verify(const char* const* summary_paths, size_t count, lr_report** out);
LR_API lr_status lr_list_builtins(lr_report** out);
LR_API const char* lr_report_text(const lr_report* report);
LR_API int lr_report_exit_code(const lr_report* report);
LR_API void lr_report_destroy(lr_report* report);

#ifdef __cplusplus
}
#endif

#endif
