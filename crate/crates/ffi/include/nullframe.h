#ifndef NULLFRAME_H
#define NULLFRAME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NfStatus {
  NF_STATUS_OK = 0,
  /**
   * A report was produced but at least one check exceeded its tolerance.
   */
  NF_STATUS_CHECK_FAILED = 1,
  NF_STATUS_NULL_POINTER = 2,
  /**
   * Bad UTF-8, wrong length, index out of range or an unparsable expression.
   */
  NF_STATUS_INVALID_ARGUMENT = 3,
  /**
   * A rejected spec document or run option.
   */
  NF_STATUS_SPEC = 4,
  NF_STATUS_METRIC = 5,
  NF_STATUS_FRAME = 6,
  NF_STATUS_HELIX = 7,
  /**
   * A numerical limit was exceeded before a report could be produced.
   */
  NF_STATUS_RESIDUAL = 8,
  NF_STATUS_PANIC = 9,
} NfStatus;

typedef struct NfCurve NfCurve;

typedef struct NfMetric NfMetric;

typedef struct NfTrace NfTrace;

/**
 * Frame and curvatures of a null curve at one parameter value.
 */
typedef struct NfFrame {
  double t;
  double point[3];
  double zeta[3];
  double n[3];
  double w[3];
  double h;
  double k1;
  double k2;
} NfFrame;

typedef struct NfHelixParams {
  double h;
  double k1;
  double k2;
  double initial_point[3];
  double zeta[3];
  double n[3];
  double w[3];
  double t0;
  double t1;
  double step;
  /**
   * Re-project `N`, `W` every this many steps; 0 turns projection off.
   */
  size_t project_every;
} NfHelixParams;

typedef struct NfTraceSample {
  double t;
  double point[3];
  double zeta[3];
  double n[3];
  double w[3];
  double gram_drift;
} NfTraceSample;

typedef struct NfCurvature {
  double t;
  double h;
  double k1;
  double k2;
} NfCurvature;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next call into this library.
 */
const char *nf_last_error(void);

const char *nf_version(void);

void nf_string_free(char *s);

/**
 * Constant diagonal metric `diag(signs)`.
 */
enum NfStatus nf_metric_diag(const double *signs, size_t len, struct NfMetric **out);

/**
 * Metric from the JSON accepted in spec documents, e.g.
 * `{"type":"diag","signs":[-1,-1,1]}` or `{"type":"field","entries":[[...]]}`.
 */
enum NfStatus nf_metric_from_json(const char *json, struct NfMetric **out);

/**
 * Chart dimension, or 0 for a null handle.
 */
size_t nf_metric_dim(const struct NfMetric *metric);

/**
 * `Γᵏᵢⱼ` at `point`, written to `out[(k·n + i)·n + j]`; `out_len` must be `n³`.
 */
enum NfStatus nf_metric_christoffel(const struct NfMetric *metric,
                                    const double *point,
                                    size_t len,
                                    double *out,
                                    size_t out_len);

void nf_metric_free(struct NfMetric *metric);

/**
 * Curve `γ(t)` from three component expressions in `t`. The metric is copied.
 */
enum NfStatus nf_curve_position(const struct NfMetric *metric,
                                const char *const *components_ptr,
                                size_t count,
                                double t0,
                                double t1,
                                struct NfCurve **out);

/**
 * Curve given by its tangent `ζ(t)` and `γ(t0) = initial` (three values).
 */
enum NfStatus nf_curve_tangent(const struct NfMetric *metric,
                               const char *const *components_ptr,
                               size_t count,
                               const double *initial,
                               double t0,
                               double t1,
                               double step,
                               struct NfCurve **out);

/**
 * Frame and curvatures at `t`. `seed_order` may be null for the default `e3,e1,e2`.
 */
enum NfStatus nf_curve_frame(const struct NfCurve *curve,
                             double t,
                             const char *seed_order,
                             struct NfFrame *out);

void nf_curve_free(struct NfCurve *curve);

/**
 * Integrates a helix with constant curvatures and records `samples`
 * uniformly spaced states on `[t0, t1]`.
 */
enum NfStatus nf_helix_synthesize(const struct NfMetric *metric,
                                  const struct NfHelixParams *params,
                                  size_t samples,
                                  struct NfTrace **out);

/**
 * Number of samples, or 0 for a null handle.
 */
size_t nf_trace_len(const struct NfTrace *trace);

enum NfStatus nf_trace_sample(const struct NfTrace *trace, size_t index, struct NfTraceSample *out);

/**
 * Curvatures recovered from the trace by finite differences at one sample.
 * The first call computes every sample.
 */
enum NfStatus nf_trace_curvature(const struct NfTrace *trace,
                                 size_t index,
                                 struct NfCurvature *out);

/**
 * Largest deviation between recovered and prescribed curvatures.
 */
enum NfStatus nf_trace_round_trip(const struct NfTrace *trace, double *out);

void nf_trace_free(struct NfTrace *trace);

/**
 * Runs a CLI command (`frame`, `synth`, `verify`, `submanifold`,
 * `transfer`) on an in-memory spec document with default flags. On
 * `NF_STATUS_OK` or `NF_STATUS_CHECK_FAILED` the JSON report is written to
 * `*report` and must be released with [`nf_string_free`].
 */
enum NfStatus nf_run_spec(const char *command, const char *spec_json, char **report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NULLFRAME_H */
