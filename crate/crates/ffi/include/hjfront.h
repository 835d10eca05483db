#ifndef HJFRONT_H
#define HJFRONT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum HjStatus {
  HJ_STATUS_OK = 0,
  HJ_STATUS_NULL_POINTER = 1,
  HJ_STATUS_INVALID_ARGUMENT = 2,
  HJ_STATUS_INVALID_PL = 3,
  HJ_STATUS_NOT_CONVEX = 4,
  HJ_STATUS_TIME_OUT_OF_RANGE = 5,
  // Fiber box too small, collision budget exceeded, stale event.
  HJ_STATUS_NUMERICAL = 6,
  HJ_STATUS_PANIC = 7,
} HjStatus;

// Continuous piecewise-linear function with affine tails.
typedef struct HjPl HjPl;

// Front-tracking solution on `[0, horizon]`.
typedef struct HjTrace HjTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `cap`). Returns the full message length, 0 if none.
//
// # Safety
// `buf` must be valid for `cap` bytes or null.
size_t hj_last_error(char *buf, size_t cap);

// Library version, static NUL-terminated string.
const char *hj_version(void);

// Builds a PL function from `n >= 1` strictly increasing breakpoints, their
// values and the two tail slopes.
//
// # Safety
// `xs` and `ys` must be valid for `n` reads; `out` for one write.
enum HjStatus hj_pl_new(const double *xs,
                        const double *ys,
                        size_t n,
                        double left_slope,
                        double right_slope,
                        struct HjPl **out);

// # Safety
// `f` must come from this library and not be used afterwards; null is a no-op.
void hj_pl_free(struct HjPl *f);

// # Safety
// `f` must be a live handle; `out` valid for one write.
enum HjStatus hj_pl_eval(const struct HjPl *f, double x, double *out);

// Number of breakpoints, 0 for a null handle.
//
// # Safety
// `f` must be a live handle or null.
size_t hj_pl_len(const struct HjPl *f);

// Copies up to `cap` breakpoints and values; `written` receives the count.
//
// # Safety
// `xs`, `ys` valid for `cap` writes; `written` for one write.
enum HjStatus hj_pl_data(const struct HjPl *f, double *xs, double *ys, size_t cap, size_t *written);

// Tail slopes of `f`.
//
// # Safety
// `f` live; `left`, `right` valid for one write each.
enum HjStatus hj_pl_tails(const struct HjPl *f, double *left, double *right);

// Front tracking for `u_t + H(u_x) = 0`, `u(0) = v`, up to `horizon`.
//
// # Safety
// `v`, `h` live handles; `out` valid for one write.
enum HjStatus hj_front_evolve(const struct HjPl *v,
                              const struct HjPl *h,
                              double horizon,
                              struct HjTrace **out);

// # Safety
// `tr` must come from this library and not be used afterwards; null is a no-op.
void hj_front_free(struct HjTrace *tr);

// # Safety
// `tr` live; `out` valid for one write.
enum HjStatus hj_front_eval(const struct HjTrace *tr, double t, double x, double *out);

// Profile at time `t` as a new PL handle.
//
// # Safety
// `tr` live; `out` valid for one write.
enum HjStatus hj_front_profile(const struct HjTrace *tr, double t, struct HjPl **out);

// Number of collision events, 0 for a null handle.
//
// # Safety
// `tr` live or null.
size_t hj_front_event_count(const struct HjTrace *tr);

// Time and place of event `i`.
//
// # Safety
// `tr` live; `t`, `x` valid for one write each.
enum HjStatus hj_front_event(const struct HjTrace *tr, size_t i, double *t, double *x);

// Exact minmax `R^t v(x)`.
//
// # Safety
// `v`, `h` live; `out` valid for one write.
enum HjStatus hj_minmax(const struct HjPl *v,
                        const struct HjPl *h,
                        double t,
                        double x,
                        double *out);

// Grid minmax and maxmin on an automatic `nx` by `ny` fiber box.
//
// # Safety
// `v`, `h` live; output pointers valid for one write each.
enum HjStatus hj_minmax_grid(const struct HjPl *v,
                             const struct HjPl *h,
                             double t,
                             double x,
                             size_t nx,
                             size_t ny,
                             double *minmax,
                             double *maxmin,
                             double *tolerance);

// One-step minmax profile `R^tau v` (exact engine).
//
// # Safety
// `v`, `h` live; `out` valid for one write.
enum HjStatus hj_minmax_step(const struct HjPl *v,
                             const struct HjPl *h,
                             double tau,
                             struct HjPl **out);

// Iterated minmax over `steps` uniform steps of `[0, horizon]`.
//
// # Safety
// `v`, `h` live; `out` valid for one write.
enum HjStatus hj_iterated_minmax(const struct HjPl *v,
                                 const struct HjPl *h,
                                 double horizon,
                                 size_t steps,
                                 struct HjPl **out);

// Hopf-Lax value for convex `H`.
//
// # Safety
// `v`, `h` live; `out` valid for one write.
enum HjStatus hj_hopf_lax(const struct HjPl *v,
                          const struct HjPl *h,
                          double t,
                          double x,
                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HJFRONT_H */
