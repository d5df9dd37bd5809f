#ifndef UDM_H
#define UDM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UdmStatus {
  UDM_STATUS_OK = 0,
  UDM_STATUS_NULL_POINTER = 1,
  UDM_STATUS_INVALID_UTF8 = 2,
  UDM_STATUS_INVALID_ARGUMENT = 3,
  UDM_STATUS_AUDIO = 4,
  UDM_STATUS_PIPELINE = 5,
  UDM_STATUS_JSON = 6,
  UDM_STATUS_IO = 7,
  UDM_STATUS_PANIC = 8,
} UdmStatus;

typedef struct UdmAnalyzer UdmAnalyzer;

typedef struct UdmReport UdmReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library on this thread.
 */
const char *udm_last_error(void);

/**
 * Library version as a static string.
 */
const char *udm_version(void);

/**
 * Creates an analyzer. Both JSON arguments may be null: the demo inventory
 * and the default analysis configuration are used instead.
 */
enum UdmStatus udm_analyzer_new(const char *inventory_json,
                                const char *config_json,
                                struct UdmAnalyzer **out);

void udm_analyzer_free(struct UdmAnalyzer *analyzer);

/**
 * Analyzes mono samples in `[-1, 1]`.
 */
enum UdmStatus udm_analyze_samples(const struct UdmAnalyzer *analyzer,
                                   const double *samples,
                                   size_t len,
                                   uint32_t sample_rate,
                                   const char *transcript,
                                   struct UdmReport **out);

/**
 * Analyzes a WAV file.
 */
enum UdmStatus udm_analyze_wav(const struct UdmAnalyzer *analyzer,
                               const char *path,
                               const char *transcript,
                               struct UdmReport **out);

/**
 * Parses and validates a report.
 */
enum UdmStatus udm_report_from_json(const char *json, struct UdmReport **out);

/**
 * Canonical JSON of a report; release with `udm_string_free`.
 */
enum UdmStatus udm_report_to_json(const struct UdmReport *report, char **out);

/**
 * Alignment view as SVG; release with `udm_string_free`.
 */
enum UdmStatus udm_report_svg(const struct UdmReport *report, char **out);

enum UdmStatus udm_report_event_count(const struct UdmReport *report, size_t *out);

enum UdmStatus udm_report_version(const struct UdmReport *report, uint64_t *out);

/**
 * New report version with events recomputed under `thresholds_json`.
 * The input report is left unchanged.
 */
enum UdmStatus udm_report_reanalyze(const struct UdmReport *report,
                                    const char *thresholds_json,
                                    struct UdmReport **out);

void udm_report_free(struct UdmReport *report);

void udm_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UDM_H */
