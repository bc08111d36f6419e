#ifndef FOXH_KIT_H
#define FOXH_KIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum FoxhStatus {
  FOXH_STATUS_OK = 0,
  FOXH_STATUS_NULL_POINTER = 1,
  FOXH_STATUS_INVALID_UTF8 = 2,
  FOXH_STATUS_INVALID_ARGUMENT = 3,
  FOXH_STATUS_STRUCTURAL = 4,
  FOXH_STATUS_ETA_EQUALS_ONE = 5,
  FOXH_STATUS_INVALID_CONSTELLATION = 6,
  FOXH_STATUS_SERIALIZATION = 7,
  FOXH_STATUS_GAMMA_POLE = 8,
  FOXH_STATUS_OVERFLOW = 9,
  FOXH_STATUS_NO_SEPARATING_STRIP = 10,
  FOXH_STATUS_NON_CONVERGENCE = 11,
  FOXH_STATUS_IMAGINARY_RESIDUE = 12,
  FOXH_STATUS_DIVERGENCE = 13,
  FOXH_STATUS_QUADRATURE = 14,
  FOXH_STATUS_PANIC = 15,
} FoxhStatus;

// Opaque bivariate H-function descriptor.
typedef struct FoxhDescriptor FoxhDescriptor;

// Opaque channel parameters.
typedef struct FoxhParams FoxhParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null after a success.
// The pointer stays valid until the next call on the same thread.
const char *foxh_last_error_message(void);

// Creates channel parameters. `format` is 1 or 2. `eta = 1` is rejected.
//
// # Safety
// `out` must be a valid pointer.
enum FoxhStatus foxh_params_new(double alpha,
                                double eta,
                                double mu,
                                double m_s,
                                uint32_t format,
                                double mean_snr,
                                struct FoxhParams **out);

// Parses parameters from JSON with the field names of the CLI params file.
// `eta = 1` maps to the limit offset.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum FoxhStatus foxh_params_from_json(const char *json, struct FoxhParams **out);

// Copy of `params` with a different average SNR (linear).
//
// # Safety
// `params` must come from this library; `out` must be valid.
enum FoxhStatus foxh_params_with_mean_snr(const struct FoxhParams *params,
                                          double mean_snr,
                                          struct FoxhParams **out);

// # Safety
// `params` must come from this library or be null; it is invalid afterwards.
void foxh_params_free(struct FoxhParams *params);

// Composite density at instantaneous SNR `gamma` (linear).
//
// # Safety
// `params` must come from this library; `out` must be valid.
enum FoxhStatus foxh_pdf(const struct FoxhParams *params, double gamma, double *out);

// Outage probability at threshold `gamma_th` (linear).
//
// # Safety
// `params` must come from this library; `out` must be valid.
enum FoxhStatus foxh_outage(const struct FoxhParams *params, double gamma_th, double *out);

// `E[γⁿ e^{−sγ}]`.
//
// # Safety
// `params` must come from this library; `out` must be valid.
enum FoxhStatus foxh_mgf(const struct FoxhParams *params, uint32_t n, double s, double *out);

// Average SEP for a modulation preset such as `bpsk`, `dbpsk` or `lmpsk8`.
//
// # Safety
// `preset` must be NUL-terminated; `params` must come from this library;
// `out` must be valid.
enum FoxhStatus foxh_sep(const struct FoxhParams *params, const char *preset, double *out);

// High-SNR outage approximation.
//
// # Safety
// `params` must come from this library; `out` must be valid.
enum FoxhStatus foxh_outage_asymptotic(const struct FoxhParams *params,
                                       double gamma_th,
                                       double *out);

// High-SNR SEP approximation for a modulation preset.
//
// # Safety
// As for [`foxh_sep`].
enum FoxhStatus foxh_sep_asymptotic(const struct FoxhParams *params,
                                    const char *preset,
                                    double *out);

// Parses and validates a descriptor JSON document.
//
// # Safety
// `json` must be NUL-terminated; `out` must be valid.
enum FoxhStatus foxh_descriptor_from_json(const char *json, struct FoxhDescriptor **out);

// Serializes a descriptor. Release the string with [`foxh_string_free`].
//
// # Safety
// `desc` must come from this library; `out` must be valid.
enum FoxhStatus foxh_descriptor_to_json(const struct FoxhDescriptor *desc, char **out);

// `H[x, y]`.
//
// # Safety
// `desc` must come from this library; `out` must be valid.
enum FoxhStatus foxh_descriptor_eval(const struct FoxhDescriptor *desc,
                                     double x,
                                     double y,
                                     double *out);

// # Safety
// `desc` must come from this library or be null; it is invalid afterwards.
void foxh_descriptor_free(struct FoxhDescriptor *desc);

// # Safety
// `s` must come from this library or be null.
void foxh_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOXH_KIT_H */
