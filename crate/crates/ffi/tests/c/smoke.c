#include <math.h>
#include <stdio.h>
#include <string.h>

#include "nullframe.h"

#define CHECK(cond)                                                  \
  do {                                                               \
    if (!(cond)) {                                                   \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond, \
              nf_last_error());                                      \
      return 1;                                                      \
    }                                                                \
  } while (0)

int main(void) {
  NfMetric *metric = NULL;
  CHECK(nf_metric_from_json("{\"type\":\"diag\",\"signs\":[-1,-1,1]}", &metric) ==
        NF_STATUS_OK);
  CHECK(nf_metric_dim(metric) == 3);

  const char *components[3] = {"cos(t)", "sin(t)", "t"};
  NfCurve *curve = NULL;
  CHECK(nf_curve_position(metric, components, 3, 0.0, 6.0, &curve) == NF_STATUS_OK);
  NfFrame frame;
  CHECK(nf_curve_frame(curve, 1.0, NULL, &frame) == NF_STATUS_OK);
  CHECK(fabs(frame.h) < 1e-9 && fabs(frame.k1 - 1.0) < 1e-9 && fabs(frame.k2 + 0.5) < 1e-9);
  CHECK(nf_curve_frame(curve, 1.0, "e1,e1", &frame) == NF_STATUS_FRAME);
  CHECK(strstr(nf_last_error(), "seed") != NULL);
  nf_curve_free(curve);

  NfHelixParams p = {
      .h = 0.0, .k1 = 1.0, .k2 = -0.5,
      .initial_point = {1.0, 0.0, 0.0},
      .zeta = {0.0, 1.0, 1.0}, .n = {0.0, -0.5, 0.5}, .w = {-1.0, 0.0, 0.0},
      .t0 = 0.0, .t1 = 2.0, .step = 1e-3, .project_every = 0,
  };
  NfTrace *trace = NULL;
  CHECK(nf_helix_synthesize(metric, &p, 41, &trace) == NF_STATUS_OK);
  CHECK(nf_trace_len(trace) == 41);
  NfTraceSample s;
  CHECK(nf_trace_sample(trace, 40, &s) == NF_STATUS_OK);
  CHECK(fabs(s.point[0] - cos(2.0)) < 1e-9 && fabs(s.point[2] - 2.0) < 1e-9);
  double dev = 1.0;
  CHECK(nf_trace_round_trip(trace, &dev) == NF_STATUS_OK && dev < 1e-6);
  nf_trace_free(trace);

  char *report = NULL;
  CHECK(nf_run_spec("frame", "{}", &report) == NF_STATUS_SPEC && report == NULL);
  nf_metric_free(metric);
  printf("ok %s\n", nf_version());
  return 0;
}
