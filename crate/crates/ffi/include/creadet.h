#ifndef CREADET_H
#define CREADET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CreadetStatus {
  CREADET_STATUS_OK = 0,
  CREADET_STATUS_NULL_POINTER = 1,
  CREADET_STATUS_INVALID_ARGUMENT = 2,
  // An observed event has probability zero under the model.
  CREADET_STATUS_ZERO_PROBABILITY = 3,
  // A transition leaves a state whose row was never observed in fitting.
  CREADET_STATUS_UNOBSERVED_ROW = 4,
  // The alternative hypothesis gives zero probability to observed data.
  CREADET_STATUS_INFINITE_EVIDENCE = 5,
  CREADET_STATUS_NO_CONVERGENCE = 6,
  CREADET_STATUS_INVALID_JSON = 7,
  // A caller-provided buffer is too small.
  CREADET_STATUS_BUFFER_TOO_SMALL = 8,
  CREADET_STATUS_PANIC = 9,
} CreadetStatus;

typedef enum CreadetStatistic {
  CREADET_STATISTIC_CHI2 = 0,
  CREADET_STATISTIC_G = 1,
} CreadetStatistic;

typedef enum CreadetVariant {
  CREADET_VARIANT_SPLIT_VS_POOLED = 0,
  CREADET_VARIANT_SPLIT_VS_FUTURE = 1,
} CreadetVariant;

typedef enum CreadetModelClass {
  CREADET_MODEL_CLASS_MARKOV = 0,
  CREADET_MODEL_CLASS_MULTINOMIAL = 1,
} CreadetModelClass;

// Opaque fitted Markov chain.
typedef struct CreadetModel CreadetModel;

// Opaque session-split event stream.
typedef struct CreadetStream CreadetStream;

// Opaque creativity trace.
typedef struct CreadetTrace CreadetTrace;

typedef struct CreadetTestResult {
  double statistic;
  size_t df;
  double p_value;
  bool reject_null;
} CreadetTestResult;

// Scan configuration. A window of 0 means "all history" (past) or "to the
// end of the stream" (future).
typedef struct CreadetScanOptions {
  size_t kappa;
  size_t tau;
  // Evaluate only where the previous event is an off-screen state.
  bool offscreen_only;
  enum CreadetVariant variant;
  enum CreadetModelClass model_class;
  double pseudocount;
} CreadetScanOptions;

typedef struct CreadetRecord {
  size_t t;
  double c;
  size_t nu;
  double c_scaled;
} CreadetRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *creadet_last_error(void);

// Two-way log likelihood ratio L between histograms `r` and `s` of `n` bins.
//
// # Safety
// `r` and `s` must point to `n` readable doubles; `out` must be writable.
enum CreadetStatus creadet_two_way_lr(const double *r, const double *s, size_t n, double *out);

// G = 2L for two histograms.
//
// # Safety
// As [`creadet_two_way_lr`].
enum CreadetStatus creadet_g_two_way(const double *r, const double *s, size_t n, double *out);

// Pearson χ² for two histograms.
//
// # Safety
// As [`creadet_two_way_lr`].
enum CreadetStatus creadet_chi2_two_way(const double *r, const double *s, size_t n, double *out);

// Degrees of freedom: bins occupied in either histogram.
//
// # Safety
// As [`creadet_two_way_lr`].
enum CreadetStatus creadet_degrees_of_freedom(const double *r,
                                              const double *s,
                                              size_t n,
                                              size_t *out);

// Upper tail P(X ≥ x) of a χ² distribution with `df` degrees of freedom.
//
// # Safety
// `out` must be writable.
enum CreadetStatus creadet_chi2_survival(double x, size_t df, double *out);

// Applies the rejection rule for `kind` and computes the p-value.
//
// # Safety
// `out` must be writable.
enum CreadetStatus creadet_decide(double statistic,
                                  size_t df,
                                  enum CreadetStatistic kind,
                                  struct CreadetTestResult *out);

// Builds a stream from flat `events` and the offsets where sessions start
// (the first offset must be 0).
//
// # Safety
// `events` must point to `n_events` values, `session_starts` to
// `n_sessions` values; `out` must be writable.
enum CreadetStatus creadet_stream_new(size_t n_states,
                                      const size_t *events,
                                      size_t n_events,
                                      const size_t *session_starts,
                                      size_t n_sessions,
                                      struct CreadetStream **out);

// Number of events in the stream (0 for NULL).
//
// # Safety
// `stream` must be NULL or a live handle.
size_t creadet_stream_len(const struct CreadetStream *stream);

// Number of sessions in the stream (0 for NULL).
//
// # Safety
// `stream` must be NULL or a live handle.
size_t creadet_stream_n_sessions(const struct CreadetStream *stream);

// Copies the events into `buf`, which must hold `creadet_stream_len` values.
//
// # Safety
// `stream` must be a live handle and `buf` must point to `cap` writable values.
enum CreadetStatus creadet_stream_copy_events(const struct CreadetStream *stream,
                                              size_t *buf,
                                              size_t cap);

// Copies the session start offsets into `buf` (`creadet_stream_n_sessions` values).
//
// # Safety
// As [`creadet_stream_copy_events`].
enum CreadetStatus creadet_stream_copy_session_starts(const struct CreadetStream *stream,
                                                      size_t *buf,
                                                      size_t cap);

// # Safety
// `stream` must be NULL or a handle not yet freed.
void creadet_stream_free(struct CreadetStream *stream);

// Maximum-likelihood fit with additive smoothing `pseudocount` (≥ 0).
//
// # Safety
// `stream` must be a live handle; `out` must be writable.
enum CreadetStatus creadet_model_fit(const struct CreadetStream *stream,
                                     double pseudocount,
                                     struct CreadetModel **out);

// Parses a model from its JSON form.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum CreadetStatus creadet_model_from_json(const char *json, struct CreadetModel **out);

// Serializes a model to JSON; release the string with [`creadet_string_free`].
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum CreadetStatus creadet_model_to_json(const struct CreadetModel *model, char **out);

// Number of states of the model (0 for NULL).
//
// # Safety
// `model` must be NULL or a live handle.
size_t creadet_model_n_states(const struct CreadetModel *model);

// Natural-log likelihood of `stream` under `model`.
//
// # Safety
// Both handles must be live; `out` must be writable.
enum CreadetStatus creadet_model_log_likelihood(const struct CreadetModel *model,
                                                const struct CreadetStream *stream,
                                                double *out);

// Adds `epsilon` to every parameter and renormalizes, giving a new model.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum CreadetStatus creadet_model_perturb(const struct CreadetModel *model,
                                         double epsilon,
                                         struct CreadetModel **out);

// Samples one session per entry of `session_lengths`, deterministically in `seed`.
//
// # Safety
// `model` must be a live handle, `session_lengths` must point to
// `n_sessions` values and `out` must be writable.
enum CreadetStatus creadet_model_sample(const struct CreadetModel *model,
                                        const size_t *session_lengths,
                                        size_t n_sessions,
                                        uint64_t seed,
                                        struct CreadetStream **out);

// # Safety
// `model` must be NULL or a handle not yet freed.
void creadet_model_free(struct CreadetModel *model);

// # Safety
// `s` must be NULL or a string returned by this library and not yet freed.
void creadet_string_free(char *s);

// Computes the creativity trace of `stream`.
//
// # Safety
// `stream` and `options` must be valid; `out` must be writable.
enum CreadetStatus creadet_scan(const struct CreadetStream *stream,
                                const struct CreadetScanOptions *options,
                                struct CreadetTrace **out);

// Number of records in the trace (0 for NULL).
//
// # Safety
// `trace` must be NULL or a live handle.
size_t creadet_trace_len(const struct CreadetTrace *trace);

// Record `index` of the trace.
//
// # Safety
// `trace` must be a live handle; `out` must be writable.
enum CreadetStatus creadet_trace_get(const struct CreadetTrace *trace,
                                     size_t index,
                                     struct CreadetRecord *out);

// Record with the largest scaled creativity (earliest on ties).
//
// # Safety
// `trace` must be a live handle; `out` must be writable.
enum CreadetStatus creadet_trace_argmax(const struct CreadetTrace *trace,
                                        struct CreadetRecord *out);

// # Safety
// `trace` must be NULL or a handle not yet freed.
void creadet_trace_free(struct CreadetTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CREADET_H */
