#ifndef TRUSTRAIL_H
#define TRUSTRAIL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every FFI call.
 */
typedef enum {
  TRUSTRAIL_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  TRUSTRAIL_STATUS_NULL_ARGUMENT = 1,
  /**
   * An input string was not valid UTF-8.
   */
  TRUSTRAIL_STATUS_INVALID_UTF8 = 2,
  /**
   * Configuration could not be loaded or validated.
   */
  TRUSTRAIL_STATUS_CONFIG = 3,
  /**
   * A JSON payload could not be parsed or serialized.
   */
  TRUSTRAIL_STATUS_JSON = 4,
  /**
   * The user's session is locked or terminated.
   */
  TRUSTRAIL_STATUS_SESSION_CLOSED = 5,
  /**
   * Input failed validation (empty message, bad attestation, ...).
   */
  TRUSTRAIL_STATUS_VALIDATION = 6,
  /**
   * The requested entity does not exist.
   */
  TRUSTRAIL_STATUS_NOT_FOUND = 7,
  TRUSTRAIL_STATUS_INTERNAL = 8,
} TrustrailStatus;

/**
 * Opaque engine handle: the decision engine, an attestation registry,
 * and in-memory per-user trust state. Eventing and persistence stay on
 * the Rust side of the fence (use the gateway binary for that); this
 * handle serves embedders that want decisions only.
 */
typedef struct TrustrailEngine TrustrailEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *trustrail_version(void);

/**
 * Last error message for the current thread, or null when no error has
 * occurred. Free with [`trustrail_string_free`].
 */
char *trustrail_last_error(void);

/**
 * Create an engine from a TOML config file.
 *
 * # Safety
 * `config_path` must be a valid NUL-terminated string and `out_engine` a
 * valid pointer; the returned handle must be released with
 * [`trustrail_engine_free`].
 */
TrustrailStatus trustrail_engine_new(const char *config_path, TrustrailEngine **out_engine);

/**
 * Create an engine from built-in defaults (reference providers, empty
 * knowledge base).
 *
 * # Safety
 * `out_engine` must be a valid pointer; release the handle with
 * [`trustrail_engine_free`].
 */
TrustrailStatus trustrail_engine_new_default(TrustrailEngine **out_engine);

/**
 * Release an engine handle. Null is a no-op.
 *
 * # Safety
 * `engine` must have come from an engine constructor and not have been
 * freed already.
 */
void trustrail_engine_free(TrustrailEngine *engine);

/**
 * Evaluate one message for a user. On success writes a JSON object
 * `{"decision": ..., "session_status": ...}` to `out_json`.
 *
 * # Safety
 * `engine` must be a live handle; string arguments must be valid
 * NUL-terminated strings (`group` may be null for the default group);
 * `out_json` must be valid and its result freed with
 * [`trustrail_string_free`].
 */
TrustrailStatus trustrail_evaluate(TrustrailEngine *engine,
                                   const char *user_id,
                                   const char *group,
                                   const char *message,
                                   char **out_json);

/**
 * Register a TTP attestation from its JSON document. Writes the stored
 * id to `out_id` when non-null.
 *
 * # Safety
 * `engine` must be a live handle and `attestation_json` a valid
 * NUL-terminated string.
 */
TrustrailStatus trustrail_register_attestation(TrustrailEngine *engine,
                                               const char *attestation_json,
                                               uint64_t *out_id);

/**
 * Re-validate a user against their fresh attestations; resets the
 * high-risk budget and re-opens a locked session.
 *
 * # Safety
 * `engine` must be a live handle and `user_id` a valid NUL-terminated
 * string.
 */
TrustrailStatus trustrail_revalidate(TrustrailEngine *engine, const char *user_id);

/**
 * Read a user's trust report as JSON: snapshot, session status, and
 * high-risk count.
 *
 * # Safety
 * `engine` must be a live handle, `user_id` a valid NUL-terminated
 * string, and `out_json`'s result freed with [`trustrail_string_free`].
 */
TrustrailStatus trustrail_trust_report(TrustrailEngine *engine,
                                       const char *user_id,
                                       char **out_json);

/**
 * Free a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must have been returned by a trustrail function and not freed
 * before.
 */
void trustrail_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TRUSTRAIL_H */
