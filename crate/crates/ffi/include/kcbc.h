/* C interface for the k-inductive control barrier certificate toolkit. */

#ifndef KCBC_H
#define KCBC_H

/* Generated by cbindgen from the kcbc-capi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function. Aligned with the CLI
 * exit codes where the cases overlap.
 */
#define KCBC_OK 0

#define KCBC_ERR_CONFIG 1

#define KCBC_ERR_EXCITATION 2

#define KCBC_ERR_NOT_FOUND_AT_K 3

#define KCBC_ERR_CANCELLATION 4

#define KCBC_ERR_VERIFY_FAILED 5

#define KCBC_ERR_NULL_ARGUMENT 6

#define KCBC_ERR_INVALID_UTF8 7

#define KCBC_ERR_PANIC 8

/**
 * Opaque synthesis result (certificate, controller, diagnostics).
 */
typedef struct KcbcReport KcbcReport;

/**
 * Opaque scenario configuration.
 */
typedef struct KcbcScenario KcbcScenario;

/**
 * Opaque input-state trajectory.
 */
typedef struct KcbcTrajectory KcbcTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message describing the most recent error on this thread. The pointer
 * is valid until the next failing call on the same thread.
 */
const char *kcbc_last_error(void);

/**
 * Release a string returned by this library.
 */
void kcbc_string_free(char *s);

/**
 * Parse a scenario configuration from JSON text.
 */
int kcbc_scenario_parse(const char *json, KcbcScenario **out);

/**
 * Serialize a scenario back to JSON (release with `kcbc_string_free`).
 */
char *kcbc_scenario_to_json(const KcbcScenario *s);

void kcbc_scenario_free(KcbcScenario *s);

/**
 * Run the scenario's excitation experiment and collect a trajectory.
 */
int kcbc_collect(const KcbcScenario *s, uint64_t seed, KcbcTrajectory **out);

/**
 * Parse a trajectory from the CSV interchange format.
 */
int kcbc_trajectory_parse_csv(const char *csv, KcbcTrajectory **out);

/**
 * Serialize a trajectory to CSV (release with `kcbc_string_free`).
 */
char *kcbc_trajectory_to_csv(const KcbcTrajectory *t);

void kcbc_trajectory_free(KcbcTrajectory *t);

/**
 * Synthesize a certificate and controller. `k` overrides the scenario's
 * induction depth when nonzero. On `KCBC_OK` and `KCBC_ERR_NOT_FOUND_AT_K`
 * a report handle is stored in `out` (the latter carries diagnostics only).
 */
int kcbc_synthesize(const KcbcScenario *s, const KcbcTrajectory *t, uintptr_t k, KcbcReport **out);

/**
 * Serialize a synthesis report to its JSON interchange format (release
 * with `kcbc_string_free`).
 */
char *kcbc_report_to_json(const KcbcReport *r);

void kcbc_report_free(KcbcReport *r);

/**
 * Independently verify a serialized certificate report against a scenario
 * and the trajectory it was synthesized from. Returns `KCBC_OK` on PASS,
 * `KCBC_ERR_VERIFY_FAILED` on FAIL; when `out_json` is non-null it receives
 * the verification report JSON in both cases.
 */
int kcbc_verify(const KcbcScenario *s,
                const char *report_json,
                const KcbcTrajectory *t,
                uintptr_t runs,
                uintptr_t horizon,
                uint64_t seed,
                char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KCBC_H */
