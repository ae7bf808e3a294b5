#ifndef TESO_H
#define TESO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TesoStatus {
  TESO_STATUS_OK = 0,
  TESO_STATUS_NULL_POINTER = 1,
  TESO_STATUS_INVALID_ARGUMENT = 2,
  TESO_STATUS_UNSTABLE = 3,
  TESO_STATUS_OUT_OF_BOUNDS = 4,
  TESO_STATUS_IO = 5,
  TESO_STATUS_CONFIG = 6,
  TESO_STATUS_INTERNAL = 7,
} TesoStatus;

typedef enum TesoWaitMode {
  TESO_WAIT_MODE_QUEUE = 0,
  TESO_WAIT_MODE_SOJOURN = 1,
} TesoWaitMode;

typedef enum TesoVariant {
  TESO_VARIANT_PRS = 0,
  TESO_VARIANT_NO_ELITE = 1,
  TESO_VARIANT_NO_TABU = 2,
  TESO_VARIANT_FULL = 3,
} TesoVariant;

// Opaque M/M/k queue model.
typedef struct TesoQueueModel TesoQueueModel;

// Opaque optimization result.
typedef struct TesoResult TesoResult;

// Opaque benchmark-suite summary.
typedef struct TesoSuite TesoSuite;

// Optimizer parameters. Obtain defaults from `teso_params_default`.
typedef struct TesoParams {
  size_t trials;
  size_t n_init;
  size_t n_rep;
  double eta_init;
  double eta_final;
  size_t tabu_capacity;
  size_t elite_capacity;
  double p_div;
  size_t dt_max;
  // Non-zero to maximize.
  bool maximize;
  double bin_width;
  size_t pilot_reps;
  bool disable_tabu;
  bool disable_elite;
  bool reuse_pilot;
  uint64_t seed;
} TesoParams;

// One row of an optimization trace. Absent `mean`/`std` are NaN.
typedef struct TesoTraceRow {
  size_t t;
  // 0 = diversify, 1 = intensify.
  uint32_t mode;
  // 0 = evaluated, 1 = skipped (tabu), 2 = accepted by aspiration.
  uint32_t status;
  double x;
  double mean;
  double std;
  double best_so_far;
  double eta;
} TesoTraceRow;

// Aggregate of one algorithm in a suite. Undefined statistics are NaN.
typedef struct TesoSuiteEntry {
  enum TesoVariant variant;
  size_t n_macro;
  size_t failures;
  double final_best_mean;
  double final_best_std;
  double avg_last_mean;
  double avg_last_std;
  double mean_wall_time;
} TesoSuiteEntry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *teso_last_error_message(void);

// Probability of waiting in an M/M/k queue with offered load `a`.
enum TesoStatus teso_erlang_c(uint32_t k, double a, double *out);

// Default queue model (lambda 2.5, three servers, C = 0.5, mu in [1, 4]).
struct TesoQueueModel *teso_queue_model_default(void);

enum TesoStatus teso_queue_model_new(double lambda,
                                     uint32_t servers,
                                     double cost,
                                     double mu_lower,
                                     double mu_upper,
                                     size_t customers_per_rep,
                                     size_t warmup_customers,
                                     enum TesoWaitMode wait_mode,
                                     struct TesoQueueModel **out);

void teso_queue_model_free(struct TesoQueueModel *model);

// Closed-form objective at `mu`.
enum TesoStatus teso_analytic_objective(const struct TesoQueueModel *model, double mu, double *out);

// One simulated replication of the mean delay at `mu`.
enum TesoStatus teso_simulate_wait(const struct TesoQueueModel *model,
                                   double mu,
                                   uint64_t seed,
                                   double *out);

// One noisy objective sample (simulated delay plus cost) at `mu`.
enum TesoStatus teso_objective_sample(const struct TesoQueueModel *model,
                                      double mu,
                                      uint64_t seed,
                                      double *out);

struct TesoParams teso_params_default(void);

// Optimizes the queue objective. With `analytic` set the closed form is used
// as a zero-noise objective instead of the simulation.
enum TesoStatus teso_optimize_queue(const struct TesoQueueModel *model,
                                    const struct TesoParams *params,
                                    bool analytic,
                                    struct TesoResult **out);

void teso_result_free(struct TesoResult *result);

// Best candidate (first coordinate); NaN for a NULL handle.
double teso_result_x_best(const struct TesoResult *result);

double teso_result_f_best(const struct TesoResult *result);

size_t teso_result_trials_used(const struct TesoResult *result);

size_t teso_result_evaluations_used(const struct TesoResult *result);

bool teso_result_terminated_early(const struct TesoResult *result);

size_t teso_result_trace_len(const struct TesoResult *result);

enum TesoStatus teso_result_trace_row(const struct TesoResult *result,
                                      size_t index,
                                      struct TesoTraceRow *out);

// Writes the trace CSV (`t,mode,status,x,mean,std,best_so_far,eta`).
enum TesoStatus teso_result_write_trace(const struct TesoResult *result, const char *path);

// Runs `n_variants` algorithms for `n_macro` macro-replications each on the
// simulated queue objective. `jobs = 0` uses the default thread count.
enum TesoStatus teso_suite_run(const struct TesoQueueModel *model,
                               const struct TesoParams *params,
                               const enum TesoVariant *variants,
                               size_t n_variants,
                               size_t n_macro,
                               size_t jobs,
                               struct TesoSuite **out);

void teso_suite_free(struct TesoSuite *suite);

size_t teso_suite_len(const struct TesoSuite *suite);

enum TesoStatus teso_suite_entry(const struct TesoSuite *suite,
                                 size_t index,
                                 struct TesoSuiteEntry *out);

// Writes `summary.toml` and the convergence CSVs into `dir`, creating it.
enum TesoStatus teso_suite_write(const struct TesoSuite *suite, const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TESO_H */
