/*
 * C interface to the nested/non-nested adaptive minimax library.
 *
 * Every object is an opaque handle owned by the caller and released with its
 * matching *_free function. Fallible functions return a neada_status; on
 * failure neada_last_error() describes the problem (thread-local, valid until
 * the next failing call on the same thread). Output pointers are only written
 * on success.
 */
#ifndef NEADA_NEADA_H
#define NEADA_NEADA_H

#include <stddef.h>
#include <stdint.h>

#if defined(NEADA_BUILDING_LIBRARY)
#define NEADA_API __attribute__((visibility("default")))
#else
#define NEADA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum neada_status {
  NEADA_OK = 0,
  NEADA_ERR_INVALID_ARGUMENT = 1,
  NEADA_ERR_SHAPE = 2,
  NEADA_ERR_STATIONARITY_UNAVAILABLE = 3,
  NEADA_ERR_INNER_NONCONVERGENT = 4,
  NEADA_ERR_COMPACT_DOMAIN_REQUIRED = 5,
  NEADA_ERR_LOG_DOMAIN = 6,
  NEADA_ERR_IO = 7,
  NEADA_ERR_INTERNAL = 8
} neada_status;

NEADA_API const char* neada_status_string(neada_status status);
NEADA_API const char* neada_last_error(void);
NEADA_API const char* neada_version(void);
/* Identifier of the pinned random stream, e.g. for run metadata. */
NEADA_API const char* neada_rng_id(void);

typedef struct neada_problem neada_problem;
typedef struct neada_oracle neada_oracle;
typedef struct neada_trajectory neada_trajectory;
typedef struct neada_dataset neada_dataset;
typedef struct neada_genadagrad neada_genadagrad;
typedef struct neada_dro_result neada_dro_result;

/* ---- problems ------------------------------------------------------------ */

NEADA_API neada_status neada_problem_quadratic(double L, neada_problem** out);
NEADA_API neada_status neada_problem_mccormick(neada_problem** out);
/* Copies the dataset. layer_sizes runs from the input (2) to the output (1). */
NEADA_API neada_status neada_problem_dro(const neada_dataset* data, double gamma,
                                         const size_t* layer_sizes, size_t n_layers,
                                         neada_problem** out);
NEADA_API void neada_problem_free(neada_problem* problem);

NEADA_API size_t neada_problem_dim_x(const neada_problem* problem);
NEADA_API size_t neada_problem_dim_y(const neada_problem* problem);
NEADA_API neada_status neada_problem_value(const neada_problem* problem, const double* x,
                                           const double* y, double* out);
NEADA_API neada_status neada_problem_grad_x(const neada_problem* problem, const double* x,
                                            const double* y, double* out);
NEADA_API neada_status neada_problem_grad_y(const neada_problem* problem, const double* x,
                                            const double* y, double* out);
/* NEADA_ERR_STATIONARITY_UNAVAILABLE when y* has no closed form. */
NEADA_API neada_status neada_problem_y_star(const neada_problem* problem, const double* x,
                                            double* out);
NEADA_API neada_status neada_problem_gradient_mapping(const neada_problem* problem,
                                                      const double* x, const double* y,
                                                      double* out);
/* approx_tol > 0 lets problems without closed-form y* fall back on the
 * metrics-only maximiser; 0 disables it. */
NEADA_API neada_status neada_problem_stationarity(const neada_problem* problem, const double* x,
                                                  const double* y, double approx_tol,
                                                  double* grad_x_norm, double* dist_y);
NEADA_API neada_status neada_approx_y_star(const neada_problem* problem, const double* x,
                                           double tol, double* out);

/* ---- gradient oracles ---------------------------------------------------- */

/* The problem must outlive the oracle. */
NEADA_API neada_status neada_oracle_noisy(const neada_problem* problem, double sigma,
                                          uint64_t seed, neada_oracle** out);
/* Minibatch oracle for a DRO problem (uniform index draws with replacement). */
NEADA_API neada_status neada_oracle_dro_minibatch(const neada_problem* problem, size_t batch,
                                                  uint64_t seed, neada_oracle** out);
NEADA_API void neada_oracle_free(neada_oracle* oracle);
NEADA_API neada_status neada_oracle_sample_grads(neada_oracle* oracle, const double* x,
                                                 const double* y, double* gx, double* gy);
NEADA_API neada_status neada_oracle_sample_grad_x(neada_oracle* oracle, const double* x,
                                                  const double* y, size_t batch, double* gx);
NEADA_API uint64_t neada_oracle_calls_x(const neada_oracle* oracle);
NEADA_API uint64_t neada_oracle_calls_y(const neada_oracle* oracle);

/* ---- configurations ------------------------------------------------------ */

typedef enum neada_psi {
  NEADA_PSI_GDA = 0,
  NEADA_PSI_ADAGRAD = 1,
  NEADA_PSI_ADAM = 2,
  NEADA_PSI_AMSGRAD = 3
} neada_psi;

typedef struct neada_psi_spec {
  neada_psi kind;
  double gamma; /* Adam / AMSGrad second-moment decay in (0, 1) */
} neada_psi_spec;

typedef enum neada_criterion_kind {
  NEADA_CRITERION_I = 0,          /* squared gradient mapping <= 1/(t+1) */
  NEADA_CRITERION_II = 1,         /* exactly t+1 inner iterations */
  NEADA_CRITERION_GRAD_OR_CAP = 2,/* mapping <= 1/(t+1) or t+1 iterations */
  NEADA_CRITERION_FIXED_CAP = 3   /* exactly `cap` inner iterations */
} neada_criterion_kind;

typedef struct neada_criterion {
  neada_criterion_kind kind;
  int64_t cap;
} neada_criterion;

typedef struct neada_nonnested_config {
  double eta_x, eta_y;
  double beta_x, beta_y;
  neada_psi_spec psi_x, psi_y;
  double v0_x, v0_y;
  int64_t steps;
  int64_t record_every;
  double approx_tol;
} neada_nonnested_config;

typedef enum neada_inner_kind {
  NEADA_INNER_GEN_ADAGRAD = 0, /* eta / v^alpha, v accumulating ||g||^2 */
  NEADA_INNER_AVERAGED = 1     /* per-coordinate psi averager */
} neada_inner_kind;

typedef struct neada_inner_config {
  neada_inner_kind kind;
  double eta;
  double alpha;  /* generalized AdaGrad */
  double v0;
  double radius; /* generalized AdaGrad domain ball */
  neada_psi_spec psi;
  double beta;
  int cold_start;
} neada_inner_config;

typedef enum neada_outer_kind {
  NEADA_OUTER_SCALAR_ADAGRAD = 0,
  NEADA_OUTER_AVERAGED = 1
} neada_outer_kind;

typedef struct neada_neada_config {
  neada_outer_kind outer;
  double eta;
  double v0; /* scalar AdaGrad accumulator init, > 0 */
  neada_psi_spec psi_x;
  double beta_x;
  double v0_x;
  int64_t batch;
  neada_criterion criterion;
  neada_inner_config inner;
  int64_t outer_steps;
  uint64_t max_oracle_calls; /* 0 = unlimited */
  int64_t record_every;
  double approx_tol;
} neada_neada_config;

NEADA_API void neada_nonnested_config_default(neada_nonnested_config* config);
NEADA_API void neada_neada_config_default(neada_neada_config* config);

/* ---- runs and trajectories ---------------------------------------------- */

typedef enum neada_run_status {
  NEADA_RUN_OK = 0,
  NEADA_RUN_INNER_CAP_EXCEEDED = 1,
  NEADA_RUN_DIVERGED_NONFINITE = 2
} neada_run_status;

typedef struct neada_row {
  int64_t outer_t;
  int64_t inner_iters;
  uint64_t oracle_calls_x;
  uint64_t oracle_calls_y;
  double grad_x_norm;
  double grad_map_y;
  double dist_y_star;
  double stationarity;
  double value;
  double v_outer;
  double wall_ms;
} neada_row;

NEADA_API neada_status neada_run_nonnested(neada_oracle* oracle,
                                           const neada_nonnested_config* config,
                                           const double* x0, const double* y0,
                                           neada_trajectory** out);
NEADA_API neada_status neada_run_neada(neada_oracle* oracle, const neada_neada_config* config,
                                       const double* x0, const double* y_init,
                                       neada_trajectory** out);
NEADA_API void neada_trajectory_free(neada_trajectory* trajectory);
NEADA_API size_t neada_trajectory_size(const neada_trajectory* trajectory);
NEADA_API neada_run_status neada_trajectory_status(const neada_trajectory* trajectory);
NEADA_API uint64_t neada_trajectory_inner_cap_hits(const neada_trajectory* trajectory);
NEADA_API neada_status neada_trajectory_row(const neada_trajectory* trajectory, size_t index,
                                            neada_row* out);
/* Copies the iterate of row `index` into a buffer of exactly `len` doubles. */
NEADA_API neada_status neada_trajectory_x(const neada_trajectory* trajectory, size_t index,
                                          double* out, size_t len);
NEADA_API neada_status neada_trajectory_y(const neada_trajectory* trajectory, size_t index,
                                          double* out, size_t len);

/* ---- analysis ------------------------------------------------------------ */

typedef struct neada_slope_fit {
  double slope;
  double intercept;
  double residual;
  size_t points;
} neada_slope_fit;

NEADA_API neada_status neada_lemma1_gda_predict(double L, double r, double eta_x, double grad0,
                                                int64_t T, double* out);
NEADA_API neada_status neada_lemma1_adaptive_bound(double L, double r, double eta_x,
                                                   double beta, const double* v_trace,
                                                   size_t trace_len, double grad0, int64_t T,
                                                   double* out);
/* burn_in: leading fraction of points dropped before fitting. */
NEADA_API neada_status neada_fit_loglog_slope(const double* xs, const double* ys, size_t n,
                                              double burn_in, neada_slope_fit* out);

/* ---- generalized AdaGrad and regret -------------------------------------- */

typedef struct neada_domain {
  int is_box;    /* nonzero: [lo, hi]^d, otherwise ball of `radius` */
  double lo, hi;
  double radius; /* INFINITY for the whole space */
} neada_domain;

NEADA_API neada_status neada_genadagrad_create(const double* x0, size_t dim, double eta,
                                               double alpha, double v0,
                                               const neada_domain* domain,
                                               neada_genadagrad** out);
NEADA_API void neada_genadagrad_free(neada_genadagrad* state);
/* Descent step on the loss gradient g. */
NEADA_API neada_status neada_genadagrad_step(neada_genadagrad* state, const double* g);
NEADA_API neada_status neada_genadagrad_x(const neada_genadagrad* state, double* out);
NEADA_API double neada_genadagrad_v(const neada_genadagrad* state);

/* Regret of iterates[t] against f_t(x) = 1/2 ||x - centers[t]||^2; both arrays
 * are T x dim row-major. */
NEADA_API neada_status neada_quadratic_stream_regret(const double* centers,
                                                     const double* iterates, size_t T,
                                                     size_t dim, const neada_domain* domain,
                                                     double* out);

/* ---- datasets, network and DRO training ----------------------------------- */

NEADA_API neada_status neada_dataset_synthetic(size_t n_raw, uint64_t seed, neada_dataset** out);
NEADA_API neada_status neada_dataset_synthetic_kept(size_t n_kept, uint64_t seed,
                                                    neada_dataset** out);
NEADA_API neada_status neada_dataset_load_csv(const char* path, neada_dataset** out);
NEADA_API neada_status neada_dataset_save_csv(const neada_dataset* data, const char* path);
NEADA_API void neada_dataset_free(neada_dataset* data);
NEADA_API size_t neada_dataset_size(const neada_dataset* data);
NEADA_API neada_status neada_dataset_point(const neada_dataset* data, size_t index,
                                           double* v1, double* v2, double* label);

NEADA_API neada_status neada_mlp_param_count(const size_t* layer_sizes, size_t n_layers,
                                             size_t* out);
NEADA_API neada_status neada_mlp_init(const size_t* layer_sizes, size_t n_layers, uint64_t seed,
                                      double* params);
/* grad_params / grad_input may be NULL. */
NEADA_API neada_status neada_mlp_forward_backward(const size_t* layer_sizes, size_t n_layers,
                                                  const double* params, const double* input,
                                                  double label, double* loss,
                                                  double* grad_params, double* grad_input);
NEADA_API neada_status neada_fgsm_eval(const size_t* layer_sizes, size_t n_layers,
                                       const double* params, const neada_dataset* test,
                                       double epsilon, double* accuracy);

typedef struct neada_dro_config {
  const size_t* layer_sizes;
  size_t n_layers;
  double gamma;
  size_t batch;
  int64_t epochs;
  neada_neada_config neada; /* outer_steps / record_every / batch are derived */
  const double* fgsm_eps;
  size_t n_fgsm_eps;
  uint64_t seed;
} neada_dro_config;

typedef struct neada_dro_epoch {
  int64_t epoch;
  double robust_loss;
  double clean_loss;
  double clean_accuracy;
} neada_dro_epoch;

NEADA_API neada_status neada_dro_train(const neada_dataset* train, const neada_dataset* test,
                                       const neada_dro_config* config, neada_dro_result** out);
NEADA_API void neada_dro_result_free(neada_dro_result* result);
NEADA_API size_t neada_dro_result_epochs(const neada_dro_result* result);
/* fgsm_out receives n_fgsm_eps accuracies (may be NULL). */
NEADA_API neada_status neada_dro_result_epoch(const neada_dro_result* result, size_t index,
                                              neada_dro_epoch* out, double* fgsm_out);
/* Borrowed; valid while the result lives. */
NEADA_API const neada_trajectory* neada_dro_result_trajectory(const neada_dro_result* result);

#ifdef __cplusplus
}
#endif

#endif /* NEADA_NEADA_H */
