#ifndef MBP_RK_H
#define MBP_RK_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum MbpStatus {
  MBP_STATUS_OK = 0,
  MBP_STATUS_NULL_POINTER = 1,
  MBP_STATUS_INVALID_ARGUMENT = 2,
  MBP_STATUS_UNKNOWN_SCHEME = 3,
  MBP_STATUS_PARSE_ERROR = 4,
  MBP_STATUS_INVALID_TABLEAU = 5,
  MBP_STATUS_NOT_CERTIFIABLE = 6,
  MBP_STATUS_NOT_MBP = 7,
  MBP_STATUS_BOUND_VIOLATION = 8,
  MBP_STATUS_CONFIG_ERROR = 9,
  MBP_STATUS_IO_ERROR = 10,
  MBP_STATUS_BUFFER_TOO_SMALL = 11,
  MBP_STATUS_OUT_OF_RANGE = 12,
  MBP_STATUS_PANIC = 99,
} MbpStatus;

typedef enum MbpBoundMode {
  // `min(h^2 / (4 eps), eps / 4)`.
  MBP_BOUND_MODE_SAFE = 0,
  // `min(4 h^2 / eps, eps / 4)`.
  MBP_BOUND_MODE_RELAXED = 1,
} MbpBoundMode;

typedef enum MbpTauMode {
  MBP_TAU_MODE_FIXED = 0,
  MBP_TAU_MODE_AUTO_MBP = 1,
  MBP_TAU_MODE_AUTO_ENERGY = 2,
} MbpTauMode;

typedef enum MbpInitialKind {
  // Uniform samples in [-1, 1]; `ic_param` is the seed.
  MBP_INITIAL_KIND_RANDOM = 0,
  // `cos(k x)`; `ic_param` is `k`.
  MBP_INITIAL_KIND_COSINE = 1,
} MbpInitialKind;

typedef struct MbpCertificate MbpCertificate;

typedef struct MbpTableau MbpTableau;

typedef struct MbpTrace MbpTrace;

typedef struct MbpCertificateSummary {
  size_t stages;
  bool mbp;
  bool energy_dissipative;
  // Both certificates hold.
  bool energy_guaranteed;
  double lambda_min;
  // NaN when the scheme is not SSP.
  double ssp_ratio;
  bool has_witness;
  size_t witness_i;
  size_t witness_k;
} MbpCertificateSummary;

// Unavailable bounds are NaN.
typedef struct MbpStepBounds {
  double epsilon;
  double h;
  double tau0_safe;
  double tau0_relaxed;
  double tau0;
  double tau_ssp;
  double tau_lambda;
  double tau_energy;
} MbpStepBounds;

typedef struct MbpSimConfig {
  double epsilon;
  size_t grid_n;
  double t_final;
  enum MbpTauMode tau_mode;
  // Used when `tau_mode` is `Fixed`.
  double tau;
  enum MbpInitialKind ic_kind;
  uint64_t ic_param;
  enum MbpBoundMode bound_mode;
} MbpSimConfig;

typedef struct MbpTraceRow {
  size_t step;
  double time;
  double max_norm;
  double energy;
  double energy_delta;
  double stage_max_norm;
} MbpTraceRow;

typedef struct MbpTraceVerdict {
  size_t rows;
  double worst_max_norm;
  size_t worst_max_norm_step;
  // NaN for a trace holding only the initial row.
  double worst_energy_delta;
  bool mbp_pass;
  bool energy_pass;
} MbpTraceVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer is
// valid until the next call into this library on the same thread.
const char *mbp_last_error(void);

// Static, NUL-terminated version string.
const char *mbp_version(void);

// # Safety
// `name` must be a NUL-terminated string and `out` a writable pointer.
enum MbpStatus mbp_tableau_from_preset(const char *name, struct MbpTableau **out);

// Parses a tableau document `{"s": .., "a": [[..]], "b": [..], "c"?: [..], "name"?: ..}`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum MbpStatus mbp_tableau_from_json(const char *json, struct MbpTableau **out);

// Number of stages, or 0 for a null handle.
//
// # Safety
// `t` must be null or a live tableau handle.
size_t mbp_tableau_stages(const struct MbpTableau *t);

// # Safety
// `t` must be null or a handle not yet freed.
void mbp_tableau_free(struct MbpTableau *t);

// # Safety
// `t` must be a live tableau handle and `out` a writable pointer.
enum MbpStatus mbp_certify(const struct MbpTableau *t, struct MbpCertificate **out);

// # Safety
// `c` must be a live certificate handle and `out` a writable pointer.
enum MbpStatus mbp_certificate_summary(const struct MbpCertificate *c,
                                       struct MbpCertificateSummary *out);

// Copies `Phi` row-major into `buf`, which must hold `stages * stages`
// values.
//
// # Safety
// `c` must be a live certificate handle and `buf` writable for `len` values.
enum MbpStatus mbp_certificate_phi(const struct MbpCertificate *c, double *buf, size_t len);

// Copies `Delta_E` row-major into `buf`, which must hold `stages * stages`
// values.
//
// # Safety
// `c` must be a live certificate handle and `buf` writable for `len` values.
enum MbpStatus mbp_certificate_delta_e(const struct MbpCertificate *c, double *buf, size_t len);

// Step-size bounds for `epsilon` on the periodic grid with `grid_n` points.
//
// # Safety
// `c` must be a live certificate handle and `out` a writable pointer.
enum MbpStatus mbp_certificate_step_bounds(const struct MbpCertificate *c,
                                           double epsilon,
                                           size_t grid_n,
                                           enum MbpBoundMode mode,
                                           struct MbpStepBounds *out);

// # Safety
// `c` must be null or a handle not yet freed.
void mbp_certificate_free(struct MbpCertificate *c);

// Runs a simulation. Under the automatic step modes a monitor breach
// returns `MBP_STATUS_BOUND_VIOLATION` and no trace.
//
// # Safety
// `t` must be a live tableau handle, `cfg` readable and `out` writable.
enum MbpStatus mbp_simulate(const struct MbpTableau *t,
                            const struct MbpSimConfig *cfg,
                            struct MbpTrace **out);

// Number of rows including the initial one, or 0 for a null handle.
//
// # Safety
// `tr` must be null or a live trace handle.
size_t mbp_trace_len(const struct MbpTrace *tr);

// Step size used by the run, or NaN for a null handle.
//
// # Safety
// `tr` must be null or a live trace handle.
double mbp_trace_tau(const struct MbpTrace *tr);

// Largest max-norm over all stages of all steps, or NaN for a null handle.
//
// # Safety
// `tr` must be null or a live trace handle.
double mbp_trace_max_stage_norm(const struct MbpTrace *tr);

// Number of soft monitor warnings recorded by the run.
//
// # Safety
// `tr` must be null or a live trace handle.
size_t mbp_trace_warning_count(const struct MbpTrace *tr);

// # Safety
// `tr` must be a live trace handle and `out` a writable pointer.
enum MbpStatus mbp_trace_row(const struct MbpTrace *tr, size_t index, struct MbpTraceRow *out);

// Copies the final state into `buf`, which must hold `grid_n` values.
//
// # Safety
// `tr` must be a live trace handle and `buf` writable for `len` values.
enum MbpStatus mbp_trace_final_state(const struct MbpTrace *tr, double *buf, size_t len);

// # Safety
// `tr` must be a live trace handle and `path` a NUL-terminated string.
enum MbpStatus mbp_trace_write_csv(const struct MbpTrace *tr, const char *path);

// # Safety
// `tr` must be null or a handle not yet freed.
void mbp_trace_free(struct MbpTrace *tr);

// Re-checks the monitors of a trace CSV file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum MbpStatus mbp_check_trace_csv(const char *path, struct MbpTraceVerdict *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MBP_RK_H */
