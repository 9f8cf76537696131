#ifndef REPARAM_OMD_H
#define REPARAM_OMD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a call.
typedef enum RomdStatus {
  ROMD_STATUS_OK = 0,
  ROMD_STATUS_INVALID_INPUT = 1,
  ROMD_STATUS_CONFIG = 2,
  ROMD_STATUS_NUMERICAL = 3,
  ROMD_STATUS_CHECK_FAILED = 4,
  ROMD_STATUS_NULL_POINTER = 5,
  ROMD_STATUS_PANIC = 6,
} RomdStatus;

// Learner selected by [`romd_learner_new`].
typedef enum RomdLearnerKind {
  // Mirror descent on `x`.
  ROMD_LEARNER_KIND_OMD = 0,
  // Projected gradient descent on `u`, played at `x = q(u)`.
  ROMD_LEARNER_KIND_OGD = 1,
  // Closed-form exponentiated gradient (entropy pairs only).
  ROMD_LEARNER_KIND_EG = 2,
} RomdLearnerKind;

// An online learner holding its own copy of a pair.
typedef struct RomdLearner RomdLearner;

// A regularizer, its reparameterization map and the primal domain.
typedef struct RomdPair RomdPair;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string.
//
// The pointer stays valid until the next call into this library on the same thread.
const char *romd_last_error(void);

// Library version as a static NUL-terminated string.
const char *romd_version(void);

// Entropy on the clipped simplex with the quarter-square map.
//
// # Safety
// `out` must be null or valid for a pointer write.
enum RomdStatus romd_pair_eg(size_t dim, double eps_min, struct RomdPair **out);

// Log-barrier on the box `[eps, 1]^dim` with the exponential map.
//
// # Safety
// `out` must be null or valid for a pointer write.
enum RomdStatus romd_pair_log_barrier(size_t dim, double eps, struct RomdPair **out);

// Tempered regularizer on the nonnegative unit `p`-ball with the power map.
//
// # Safety
// `out` must be null or valid for a pointer write.
enum RomdStatus romd_pair_tempered(size_t dim, double tau, double p, struct RomdPair **out);

// Squared Euclidean norm on the box `[lo, hi]^dim` with the identity map.
//
// # Safety
// `out` must be null or valid for a pointer write.
enum RomdStatus romd_pair_euclidean_box(size_t dim, double lo, double hi, struct RomdPair **out);

// Release a pair. Null is ignored.
//
// # Safety
// `pair` must be null or a handle from a `romd_pair_*` constructor not yet freed.
void romd_pair_free(struct RomdPair *pair);

// Dimension of a pair, or 0 for null.
//
// # Safety
// `pair` must be null or a live handle.
size_t romd_pair_dim(const struct RomdPair *pair);

// Center point of the primal domain.
//
// # Safety
// `pair` must be a live handle and `out_x` valid for `len` writes.
enum RomdStatus romd_pair_center(const struct RomdPair *pair, double *out_x, size_t len);

// `x = q(u)`.
//
// # Safety
// `pair` must be a live handle, `u` valid for `len` reads and `out_x` for `len` writes.
enum RomdStatus romd_pair_to_primal(const struct RomdPair *pair,
                                    const double *u,
                                    size_t len,
                                    double *out_x);

// `u = q⁻¹(x)`.
//
// # Safety
// `pair` must be a live handle, `x` valid for `len` reads and `out_u` for `len` writes.
enum RomdStatus romd_pair_to_reparam(const struct RomdPair *pair,
                                     const double *x,
                                     size_t len,
                                     double *out_u);

// Largest entrywise gap between `[∇²R(q(u))]⁻¹` and `J_q(u) J_q(u)ᵀ`.
//
// # Safety
// `pair` must be a live handle, `u` valid for `len` reads and `out` for one write.
enum RomdStatus romd_pair_identity_deviation(const struct RomdPair *pair,
                                             const double *u,
                                             size_t len,
                                             double *out);

// One mirror descent step from `x` with primal gradient `grad`.
//
// # Safety
// `pair` must be a live handle, `x` and `grad` valid for `len` reads and `out_x` for `len` writes.
enum RomdStatus romd_omd_step(const struct RomdPair *pair,
                              const double *x,
                              const double *grad,
                              size_t len,
                              double eta,
                              double *out_x);

// One projected gradient step on `u`, where `grad` is the primal gradient at `q(u)`.
//
// # Safety
// `pair` must be a live handle, `u` and `grad` valid for `len` reads and `out_u` for `len` writes.
enum RomdStatus romd_ogd_step(const struct RomdPair *pair,
                              const double *u,
                              const double *grad,
                              size_t len,
                              double eta,
                              double *out_u);

// Create a learner with step size `eta`, starting at `x0` or at the domain center when `x0` is null.
//
// # Safety
// `pair` must be a live handle, `x0` null or valid for `len` reads, and `out` valid for a pointer write.
enum RomdStatus romd_learner_new(const struct RomdPair *pair,
                                 enum RomdLearnerKind kind,
                                 double eta,
                                 const double *x0,
                                 size_t len,
                                 struct RomdLearner **out);

// Release a learner. Null is ignored.
//
// # Safety
// `learner` must be null or a handle from [`romd_learner_new`] not yet freed.
void romd_learner_free(struct RomdLearner *learner);

// Round index of the point the learner will play next, starting at 1. Returns 0 for null.
//
// # Safety
// `learner` must be null or a live handle.
size_t romd_learner_round(const struct RomdLearner *learner);

// Primal point the learner plays this round.
//
// # Safety
// `learner` must be a live handle and `out_x` valid for `len` writes.
enum RomdStatus romd_learner_point(const struct RomdLearner *learner, double *out_x, size_t len);

// Feed the loss gradient at the played point and advance one round.
//
// On failure the learner keeps its current point.
//
// # Safety
// `learner` must be a live handle and `grad` valid for `len` reads.
enum RomdStatus romd_learner_update(struct RomdLearner *learner, const double *grad, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REPARAM_OMD_H */
