/* detfree shared-library C API.
 *
 * All functions return a detfree_status; structured results come back as
 * library-allocated UTF-8 strings (JSON or plain text) that the caller must
 * release with detfree_string_free().  Sessions are opaque and carry the
 * configuration (shape, seed, threads, degree budget, mode).
 */
#ifndef DETFREE_H
#define DETFREE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct detfree_session detfree_session;

typedef enum {
    DETFREE_OK = 0,
    DETFREE_E_INVALID = 1,  /* bad arguments or configuration */
    DETFREE_E_DOMAIN = 2,   /* domain error: duplicate factors, bad shape, ... */
    DETFREE_E_IO = 3,       /* unreadable or malformed input data */
    DETFREE_E_BUDGET = 4,   /* an explicit resource budget was exceeded */
    DETFREE_E_INTERNAL = 5
} detfree_status;

/* verdict codes used in reports and mapped to CLI exit codes */
typedef enum {
    DETFREE_VERDICT_FREE = 0,
    DETFREE_VERDICT_NOT_FREE = 10,
    DETFREE_VERDICT_UNDETERMINED = 20
} detfree_verdict;

const char *detfree_version(void);

detfree_session *detfree_session_new(void);
void detfree_session_free(detfree_session *s);

/* Configuration keys: "shape" ("3x5"), "seed", "threads", "max-degree",
 * "primes", "prime-bits", "mode" ("pit" | "exact"), "experimental"
 * ("0" | "1").  Unknown keys are rejected. */
detfree_status detfree_session_set(detfree_session *s, const char *key, const char *value);

/* Last error message for this session (empty string when none). */
const char *detfree_session_last_error(const detfree_session *s);

void detfree_string_free(char *p);

/* Labeled minors of the configured shape, one "fN = ..." line each. */
detfree_status detfree_minors_text(detfree_session *s, char **out_text);

/* Freeness analysis of the factors "1,2,3,4,5"; returns the report JSON and
 * optionally the verdict code. */
detfree_status detfree_analyze_json(detfree_session *s, const char *factors_csv, char **out_report_json,
                                    int *out_verdict);

/* Analysis that must end CertifiedFree; returns the certificate JSON. */
detfree_status detfree_certify_json(detfree_session *s, const char *factors_csv, char **out_certificate_json);

/* Re-verification of a certificate with fresh randomness. */
detfree_status detfree_verify_json(detfree_session *s, const char *certificate_json, char **out_report_json,
                                   int *out_pass);

/* Exhaustive k-subset survey; quick != 0 caps the scan at degree 2.
 * checkpoint_path may be NULL (no resumable state). */
detfree_status detfree_survey_json(detfree_session *s, int k, int quick, const char *checkpoint_path,
                                   char **out_report_json);
detfree_status detfree_survey_csv(detfree_session *s, const char *report_json, char **out_csv);

/* Full reproduction checklist; quick != 0 skips the 4-tuple sweep. */
detfree_status detfree_reproduce_json(detfree_session *s, int quick, char **out_report_json);

/* Cross-check script for an external computer algebra system. */
detfree_status detfree_crosscheck_script(detfree_session *s, const char *factors_csv, char **out_script);

#ifdef __cplusplus
}
#endif

#endif /* DETFREE_H */
