#ifndef MSGAIN_H
#define MSGAIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum MsgainStatus {
  MSGAIN_STATUS_OK = 0,
  MSGAIN_STATUS_NULL_POINTER = 1,
  MSGAIN_STATUS_INVALID_ARGUMENT = 2,
  MSGAIN_STATUS_UNSTABLE = 3,
  MSGAIN_STATUS_SINGULAR = 4,
  MSGAIN_STATUS_NOT_CONVERGED = 5,
  MSGAIN_STATUS_DIMENSION = 6,
  MSGAIN_STATUS_INTERNAL = 7,
} MsgainStatus;

typedef enum MsgainMethod {
  MSGAIN_METHOD_KRON_VEC = 0,
  MSGAIN_METHOD_POWER_ITER = 1,
  MSGAIN_METHOD_CLOSED_FORM = 2,
} MsgainMethod;

typedef enum MsgainCondition {
  MSGAIN_CONDITION_CASE_ONE = 0,
  MSGAIN_CONDITION_CASE_TWO = 1,
  MSGAIN_CONDITION_CONSENSUS = 2,
} MsgainCondition;

typedef enum MsgainClassification {
  MSGAIN_CLASSIFICATION_BOUNDED = 0,
  MSGAIN_CLASSIFICATION_DIVERGENT = 1,
  MSGAIN_CLASSIFICATION_INCONCLUSIVE = 2,
} MsgainClassification;

/**
 * Opaque uncertainty covariance.
 */
typedef struct MsgainCovariance MsgainCovariance;

/**
 * Opaque SISO transfer function.
 */
typedef struct MsgainTransferFunction MsgainTransferFunction;

/**
 * Opaque transfer matrix.
 */
typedef struct MsgainTransferMatrix MsgainTransferMatrix;

typedef struct MsgainVerdict {
  double rho;
  bool stable;
  double margin;
  enum MsgainMethod method;
  size_t grid_points;
  bool marginal;
} MsgainVerdict;

typedef struct MsgainStabVerdict {
  double lhs;
  bool feasible;
  enum MsgainCondition condition;
  bool sufficient_only;
} MsgainStabVerdict;

typedef struct MsgainSimSummary {
  enum MsgainClassification classification;
  double growth_rate;
  /**
   * NaN when no ratio could be formed.
   */
  double step_ratio;
  size_t steps_completed;
} MsgainSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next msgain call on this thread.
 */
const char *msgain_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *msgain_version(void);

/**
 * Create `num(z)/den(z)` from descending-power coefficient arrays.
 *
 * # Safety
 * `num` and `den` must point to `num_len` and `den_len` doubles; `out` must
 * be writable.
 */
enum MsgainStatus msgain_tf_new(const double *num,
                                size_t num_len,
                                const double *den,
                                size_t den_len,
                                struct MsgainTransferFunction **out);

/**
 * # Safety
 * `tf` must be null or a handle from [`msgain_tf_new`] not yet freed.
 */
void msgain_tf_free(struct MsgainTransferFunction *tf);

/**
 * Frequency response at `e^{j omega}`.
 *
 * # Safety
 * `tf` must be a live handle; `re` and `im` must be writable.
 */
enum MsgainStatus msgain_tf_evaluate(const struct MsgainTransferFunction *tf,
                                     double omega,
                                     double *re,
                                     double *im);

/**
 * # Safety
 * `tf` must be a live handle; `out` must be writable.
 */
enum MsgainStatus msgain_tf_is_schur_stable(const struct MsgainTransferFunction *tf,
                                            double tol,
                                            bool *out);

/**
 * Squared H2 norm; `use_quadrature` selects trapezoid quadrature on
 * `grid_points` nodes instead of the Lyapunov route.
 *
 * # Safety
 * `tf` must be a live handle; `out` must be writable.
 */
enum MsgainStatus msgain_tf_h2_norm_sq(const struct MsgainTransferFunction *tf,
                                       bool use_quadrature,
                                       size_t grid_points,
                                       double *out);

/**
 * Covariance from a row-major `m x m` array.
 *
 * # Safety
 * `data` must point to `m * m` doubles; `out` must be writable.
 */
enum MsgainStatus msgain_cov_new(size_t m, const double *data, struct MsgainCovariance **out);

/**
 * Two-channel covariance `[[s1sq, s12], [s12, s2sq]]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MsgainStatus msgain_cov_two_channel(double s1sq,
                                         double s2sq,
                                         double s12,
                                         struct MsgainCovariance **out);

/**
 * # Safety
 * `cov` must be null or a live handle.
 */
void msgain_cov_free(struct MsgainCovariance *cov);

/**
 * 2x2 closed-loop block seen by the input/output uncertainty pair when the
 * constant gain `k` closes the loop around `plant`.
 *
 * # Safety
 * `plant` must be a live handle; `out` must be writable.
 */
enum MsgainStatus msgain_closed_loop_block(const struct MsgainTransferFunction *plant,
                                           double k,
                                           struct MsgainTransferMatrix **out);

/**
 * 1x1 transfer matrix wrapping a copy of `tf`.
 *
 * # Safety
 * `tf` must be a live handle; `out` must be writable.
 */
enum MsgainStatus msgain_tm_from_tf(const struct MsgainTransferFunction *tf,
                                    struct MsgainTransferMatrix **out);

/**
 * # Safety
 * `tm` must be null or a live handle.
 */
void msgain_tm_free(struct MsgainTransferMatrix *tm);

/**
 * Mean-square small-gain test, Kronecker form.
 *
 * # Safety
 * `g` and `cov` must be live handles; `out` must be writable.
 */
enum MsgainStatus msgain_is_ms_stable(const struct MsgainTransferMatrix *g,
                                      const struct MsgainCovariance *cov,
                                      size_t grid_points,
                                      struct MsgainVerdict *out);

/**
 * Spectral radius of the cone operator by power iteration.
 *
 * # Safety
 * `g` and `cov` must be live handles; `out` must be writable.
 */
enum MsgainStatus msgain_ms_operator_radius(const struct MsgainTransferMatrix *g,
                                            const struct MsgainCovariance *cov,
                                            size_t grid_points,
                                            size_t max_iters,
                                            double tol,
                                            double *out);

/**
 * # Safety
 * `cov` must be a live handle; `out` must be writable.
 */
enum MsgainStatus msgain_condition_case1(double p1,
                                         const struct MsgainCovariance *cov,
                                         struct MsgainStabVerdict *out);

/**
 * # Safety
 * `cov` must be a live handle; `out` must be writable.
 */
enum MsgainStatus msgain_condition_case2(double p1,
                                         double s1,
                                         const struct MsgainCovariance *cov,
                                         struct MsgainStabVerdict *out);

/**
 * # Safety
 * `cov` must be a live handle; `out` must be writable.
 */
enum MsgainStatus msgain_condition_consensus(double p1,
                                             const struct MsgainCovariance *cov,
                                             struct MsgainStabVerdict *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum MsgainStatus msgain_optimal_gain_case1(double p1, double *out);

/**
 * # Safety
 * `kmin` and `kmax` must be writable.
 */
enum MsgainStatus msgain_jury_gain_interval(double p1, double s1, double *kmin, double *kmax);

/**
 * Monte Carlo run of the two-agent error recursion from `e(0) = 1`.
 *
 * # Safety
 * `cov` must be a live handle; `out` must be writable.
 */
enum MsgainStatus msgain_simulate_two_agent(double p1,
                                            double k,
                                            const struct MsgainCovariance *cov,
                                            size_t horizon,
                                            size_t trials,
                                            uint64_t seed,
                                            struct MsgainSimSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSGAIN_H */
