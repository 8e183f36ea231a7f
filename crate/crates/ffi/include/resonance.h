#ifndef RESONANCE_H
#define RESONANCE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum ResStatus {
  RES_STATUS_OK = 0,
  RES_STATUS_INVALID_ARGUMENT = 1,
  RES_STATUS_OUT_OF_RANGE = 2,
  RES_STATUS_RESOURCE_LIMIT = 3,
  RES_STATUS_NUMERICAL_FAILURE = 4,
  RES_STATUS_NULL_POINTER = 5,
  RES_STATUS_INVALID_UTF8 = 6,
  RES_STATUS_PANIC = 7,
} ResStatus;

typedef struct ResCmf ResCmf;

typedef struct ResFactorTable ResFactorTable;

typedef struct ResResonator ResResonator;

/**
 * Plain-data view of a resonator. Optional values are NaN when absent.
 */
typedef struct ResResonatorSummary {
  double log_x;
  double lambda;
  double support_lo;
  double support_hi;
  uintptr_t prime_count;
  bool degenerate;
  double alpha_default;
  double sum_r_squared;
  double log_euler_product;
} ResResonatorSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Free it with
 * [`res_string_free`].
 */
char *res_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void res_string_free(char *s);

/**
 * Factorization table for `1..=limit`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum ResStatus res_factor_table_new(uint32_t limit, struct ResFactorTable **out);

/**
 * # Safety
 * `table` must come from [`res_factor_table_new`] or be null.
 */
void res_factor_table_free(struct ResFactorTable *table);

/**
 * `f(n) = 1`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum ResStatus res_cmf_constant_one(struct ResCmf **out);

/**
 * `f(n) = n^{i alpha}`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum ResStatus res_cmf_archimedean(double alpha, struct ResCmf **out);

/**
 * Steinhaus random multiplicative function with values fixed by `seed` on
 * primes up to `prime_limit`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum ResStatus res_cmf_steinhaus(uint64_t seed, uint64_t prime_limit, struct ResCmf **out);

/**
 * # Safety
 * `f` must come from a `res_cmf_*` constructor or be null.
 */
void res_cmf_free(struct ResCmf *f);

/**
 * `D_N(t) = N^{-1/2} sum_{n <= N} f(n) n^{it}`, written as real and imaginary parts.
 *
 * # Safety
 * Handles must be live; `re` and `im` must be valid for writes.
 */
enum ResStatus res_eval_dn(const struct ResCmf *f,
                           const struct ResFactorTable *table,
                           uint64_t n,
                           double t,
                           double *re,
                           double *im);

/**
 * Resonator for `log X = log_x`. The table must cover its prime window.
 *
 * # Safety
 * `table` must be live; `out` must be valid for writes.
 */
enum ResStatus res_resonator_new(double log_x,
                                 const struct ResFactorTable *table,
                                 struct ResResonator **out);

/**
 * # Safety
 * `res` must come from [`res_resonator_new`] or be null.
 */
void res_resonator_free(struct ResResonator *res);

/**
 * Fills `out`; `sum_r_squared` covers support integers up to `sum_cap`
 * (pass a non-positive value to skip it).
 *
 * # Safety
 * `res` must be live; `out` must be valid for writes.
 */
enum ResStatus res_resonator_summary(const struct ResResonator *res,
                                     double sum_cap,
                                     struct ResResonatorSummary *out);

/**
 * Diagonal sum `sum_{ma = nb; m, n <= N; a, b <= x} r(a) r(b)`.
 *
 * # Safety
 * `res` must be live; `out` must be valid for writes.
 */
enum ResStatus res_resonator_diagonal_sum(const struct ResResonator *res,
                                          uint64_t n,
                                          double x,
                                          double *out);

/**
 * Runs a certificate from a JSON config (the CLI's config format) and
 * returns the JSON report through `out`.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum ResStatus res_certify_json(const char *config_json, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RESONANCE_H */
