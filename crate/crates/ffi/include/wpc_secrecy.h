#ifndef WPC_SECRECY_H
#define WPC_SECRECY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum WpcStatus {
  WpcStatus_Ok = 0,
  WpcStatus_NullArgument = 1,
  WpcStatus_InvalidConfig = 2,
  WpcStatus_InfeasibleEnergy = 3,
  WpcStatus_SolverFailure = 4,
  WpcStatus_Panic = 5,
} WpcStatus;

/**
 * Opaque evaluation context: parsed configuration plus evaluation options.
 */
typedef struct WpcContext WpcContext;

/**
 * Rates of one evaluated point, in bits per channel use. Fields the
 * requested outputs did not cover are NaN.
 */
typedef struct WpcRates {
  double c_s_upper_bits;
  double c_s_lower_bits;
  double hd_rate_bits;
  /**
   * 1 = first case, 2 = second case, 3 = zero-rate case, 0 = not computed.
   */
  int32_t case_label;
} WpcRates;

/**
 * Summary of one protocol simulation run.
 */
typedef struct WpcSimSummary {
  uint64_t n_slots;
  uint64_t n_active;
  double fraction_active;
  double empirical_rate_bits;
} WpcSimSummary;

/**
 * Create an evaluation context from config text (the same flat key/value
 * format the CLI reads). Pass NULL or an empty string for the defaults.
 * Returns NULL on parse failure.
 */
struct WpcContext *wpc_context_new(const char *config_text);

/**
 * Toggle the printed-formulas compatibility mode.
 */
enum WpcStatus wpc_context_set_printed_formulas(struct WpcContext *ctx, bool enabled);

/**
 * Adjust the upper-bound search family.
 */
enum WpcStatus wpc_context_set_search(struct WpcContext *ctx,
                                      uint32_t j_max,
                                      uint32_t amp_levels,
                                      uint32_t prob_resolution);

/**
 * Compute the secrecy bounds and the half-duplex benchmark at the
 * configured point. `want_upper` may be cleared to skip the (slower)
 * upper-bound search.
 */
enum WpcStatus wpc_compute_bounds(const struct WpcContext *ctx,
                                  bool want_upper,
                                  struct WpcRates *out);

/**
 * Simulate the transmit-when-charged protocol at the configured point with
 * the calibrated lower-bound policy.
 */
enum WpcStatus wpc_simulate(const struct WpcContext *ctx,
                            uint64_t n_slots,
                            uint32_t symbols_per_slot,
                            double initial_battery_j,
                            struct WpcSimSummary *out);

/**
 * Release a context created by `wpc_context_new`.
 */
void wpc_context_free(struct WpcContext *ctx);

#endif /* WPC_SECRECY_H */
