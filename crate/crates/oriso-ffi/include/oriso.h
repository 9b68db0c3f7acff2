#ifndef ORISO_H
#define ORISO_H

/* This file is generated by cbindgen from oriso-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by fallible calls.
#define ORISO_OK 0

// Internal or mathematical-precondition error; see oriso_last_error_message.
#define ORISO_ERR 1

// Negative mathematical answer (not divisible, no shift, no solution).
#define ORISO_NEGATIVE 2

// Malformed arguments (null pointers, bad UTF-8, bad JSON).
#define ORISO_INVALID_ARG 3

// An oriented supersingular curve together with its field tower. Opaque.
typedef struct OrisoOriented OrisoOriented;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string; do not free.
const char *oriso_version(void);

// The last error message raised on this thread, or null. Free the result
// with oriso_string_free.
char *oriso_last_error_message(void);

// Release a string returned by this library.
//
// # Safety
// `s` must be a pointer previously returned by an oriso function and not
// yet freed.
void oriso_string_free(char *s);

// Parse an oriented curve from its JSON encoding. Returns null on failure
// (see oriso_last_error_message). max_ext_degree 0 and prime_cap 0 select
// the defaults.
//
// # Safety
// `json` must be a valid NUL-terminated string.
struct OrisoOriented *oriso_oriented_from_json(const char *json,
                                               uint32_t max_ext_degree,
                                               uint64_t prime_cap);

// Release an oriented-curve handle.
//
// # Safety
// `h` must come from this library and not be freed twice.
void oriso_oriented_free(struct OrisoOriented *h);

// JSON encoding of the handle. Free with oriso_string_free.
//
// # Safety
// `h` must be a live handle from this library.
char *oriso_oriented_to_json(const struct OrisoOriented *h);

// Hex of the canonical class encoding. Free with oriso_string_free.
//
// # Safety
// `h` must be a live handle from this library.
char *oriso_enc_hex(const struct OrisoOriented *h);

// The O-twist of the oriented curve, as a fresh handle.
//
// # Safety
// `h` must be a live handle from this library.
struct OrisoOriented *oriso_twist(const struct OrisoOriented *h);

// Act by the ideal class of the form (a, b, c). Returns a fresh handle or
// null on failure.
//
// # Safety
// `h` must be a live handle from this library.
struct OrisoOriented *oriso_act(const struct OrisoOriented *h, int64_t a, int64_t b, int64_t c);

// Divide the chain in `chain_json` by n. On success writes a JSON result
// through `out`; returns ORISO_NEGATIVE (with null output) when the
// quotient does not exist.
//
// # Safety
// `chain_json` must be a valid NUL-terminated string and `out` a valid
// location to store a string pointer.
int oriso_divide_json(const char *chain_json, uint64_t n, char **out);

// Vectorise: find the ideal class sending x to y. Writes the JSON result
// through `out`.
//
// # Safety
// `x` and `y` must be live handles and `out` a valid output location.
int oriso_vectorise_json(const struct OrisoOriented *x,
                         const struct OrisoOriented *y,
                         double epsilon,
                         uint64_t seed,
                         char **out);

// Enumerated class group of a discriminant as JSON.
//
// # Safety
// `out` must be a valid location to store a string pointer.
int oriso_classgroup_json(int64_t disc, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORISO_H */
