#ifndef CENTREP_H
#define CENTREP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Bits of the mask written by [`centrep_certificate_verify`].
 */
#define CENTREP_CHECK_A 1

#define CENTREP_CHECK_B 2

#define CENTREP_CHECK_C 4

#define CENTREP_CHECK_D 8

/**
 * Status codes. The first four match the CLI exit codes.
 */
typedef enum CentrepStatus {
  CENTREP_STATUS_OK = 0,
  CENTREP_STATUS_CHECK_FAILED = 1,
  CENTREP_STATUS_INVALID_INPUT = 2,
  CENTREP_STATUS_HYPOTHESIS = 3,
  CENTREP_STATUS_NULL_POINTER = 4,
  CENTREP_STATUS_INTERNAL = 5,
} CentrepStatus;

/**
 * A witness certificate `(β, α, γ)` for one instance.
 */
typedef struct CentrepCertificate CentrepCertificate;

/**
 * A validated instance `(θ, ε, Ω)`.
 */
typedef struct CentrepInstance CentrepInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failed call on this thread, or NULL. The
 * pointer stays valid until the next failing call on this thread.
 */
const char *centrep_last_error(void);

/**
 * Library version as a static string.
 */
const char *centrep_version(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void centrep_string_free(char *s);

/**
 * Parses and validates an instance from its JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CentrepStatus centrep_instance_from_json(const char *json, struct CentrepInstance **out);

/**
 * A random instance with `dim_i >= 2`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CentrepStatus centrep_instance_generate(size_t dim_i,
                                             uint64_t seed,
                                             struct CentrepInstance **out);

/**
 * An instance that dispatches to the branch named `case_tag`.
 *
 * # Safety
 * `case_tag` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CentrepStatus centrep_instance_targeted(const char *case_tag,
                                             size_t dim_i,
                                             uint64_t seed,
                                             struct CentrepInstance **out);

/**
 * Ambient dimension `dim_I`, or 0 for NULL.
 *
 * # Safety
 * `inst` must be NULL or a live handle.
 */
size_t centrep_instance_dim(const struct CentrepInstance *inst);

/**
 * Serializes an instance to JSON; release with [`centrep_string_free`].
 *
 * # Safety
 * `inst` must be a live handle and `out` a valid pointer.
 */
enum CentrepStatus centrep_instance_to_json(const struct CentrepInstance *inst, char **out);

/**
 * # Safety
 * `inst` must be NULL or a handle not yet freed.
 */
void centrep_instance_free(struct CentrepInstance *inst);

/**
 * Builds the witness certificate for an instance.
 *
 * # Safety
 * `inst` must be a live handle and `out` a valid pointer.
 */
enum CentrepStatus centrep_witness_construct(const struct CentrepInstance *inst,
                                             struct CentrepCertificate **out);

/**
 * Re-checks conditions (A)-(D) of `cert` against `inst`. Writes the
 * passing checks as `CENTREP_CHECK_*` bits to `mask` (if non-NULL) and
 * returns `CheckFailed` unless all four hold.
 *
 * # Safety
 * `cert` and `inst` must be live handles; `mask` may be NULL.
 */
enum CentrepStatus centrep_certificate_verify(const struct CentrepCertificate *cert,
                                              const struct CentrepInstance *inst,
                                              uint32_t *mask);

/**
 * The branch name of a certificate as a static string, or NULL.
 *
 * # Safety
 * `cert` must be NULL or a live handle.
 */
const char *centrep_certificate_case_tag(const struct CentrepCertificate *cert);

/**
 * Serializes a certificate to JSON; release with [`centrep_string_free`].
 *
 * # Safety
 * `cert` must be a live handle and `out` a valid pointer.
 */
enum CentrepStatus centrep_certificate_to_json(const struct CentrepCertificate *cert, char **out);

/**
 * # Safety
 * `cert` must be NULL or a handle not yet freed.
 */
void centrep_certificate_free(struct CentrepCertificate *cert);

/**
 * Cohomological cross-check of `cert` on the algebra built from `inst`.
 * With `search` nonzero the full central-action search also runs.
 * Returns `CheckFailed` when any oracle check fails.
 *
 * # Safety
 * `inst` and `cert` must be live handles.
 */
enum CentrepStatus centrep_oracle_check(const struct CentrepInstance *inst,
                                        const struct CentrepCertificate *cert,
                                        int search);

/**
 * Betti numbers of the Lie algebra given as JSON. Writes up to `cap`
 * entries to `betti` and the full count `dim + 1` to `len`.
 *
 * # Safety
 * `json` must be a NUL-terminated string, `len` a valid pointer and
 * `betti` valid for `cap` writes (it may be NULL when `cap` is 0).
 */
enum CentrepStatus centrep_cohomology_betti(const char *json,
                                            size_t *betti,
                                            size_t cap,
                                            size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CENTREP_H */
