#ifndef SLS_H
#define SLS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum SlsStatus {
  SLS_STATUS_OK = 0,
  SLS_STATUS_NULL_POINTER = 1,
  SLS_STATUS_INVALID_UTF8 = 2,
  SLS_STATUS_INVALID_ARGUMENT = 3,
  SLS_STATUS_BUDGET_EXCEEDED = 4,
  SLS_STATUS_ORACLE_FAILURE = 5,
  SLS_STATUS_GAME_ERROR = 6,
  SLS_STATUS_IO = 7,
  SLS_STATUS_PANIC = 99,
} SlsStatus;

// A built game: item domain, question oracle and variant settings.
typedef struct SlsGame SlsGame;

// Result of a worst-case evaluation.
typedef struct SlsReport SlsReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread, or null after a success. The
// pointer stays valid until the next call into this library on the same thread.
const char *sls_last_error(void);

// Static, human-readable name of a status code.
const char *sls_status_name(enum SlsStatus status);

// Library version as a static string.
const char *sls_version(void);

// Builds a game.
//
// `spec_json` selects the game, for example `{"kind":"fixture","name":"example1"}` or
// `{"kind":"random-split","n":64,"r":0.25,"seed":7}`. `variant_json` may be null for the
// default settings.
//
// # Safety
// String arguments must be null or point to NUL-terminated strings; `out` must be writable.
enum SlsStatus sls_game_new(const char *spec_json, const char *variant_json, struct SlsGame **out);

// Releases a game. Null is ignored.
//
// # Safety
// `game` must be null or a handle from [`sls_game_new`] that has not been freed.
void sls_game_free(struct SlsGame *game);

// Number of items in the game.
//
// # Safety
// `game` must be a live handle and `out` writable.
enum SlsStatus sls_game_item_count(const struct SlsGame *game, size_t *out);

// Solves the full game with CFR; writes the value of the average profile and its
// exploitability. Either output pointer may be null.
//
// # Safety
// `game` must be a live handle; non-null outputs must be writable.
enum SlsStatus sls_solve_full_game(const struct SlsGame *game,
                                   size_t iterations,
                                   double *out_value,
                                   double *out_exploitability);

// Expected cost of the best response to a prior of `len` probabilities; null `prior` means
// uniform.
//
// # Safety
// `game` must be a live handle; `prior` must be null or point to `len` readable doubles; `out`
// must be writable.
enum SlsStatus sls_best_response(const struct SlsGame *game,
                                 const double *prior,
                                 size_t len,
                                 double *out);

// Plays one game against item `item` and writes the number of questions asked.
//
// `policy` is one of `got`, `uot`, `even-split`, `random` or `br`.
//
// # Safety
// `game` must be a live handle, `policy` a NUL-terminated string and `out` writable.
enum SlsStatus sls_play(const struct SlsGame *game,
                        const char *policy,
                        size_t item,
                        uint64_t seed,
                        size_t *out_questions);

// Evaluates a policy on every item `repeats` times.
//
// # Safety
// `game` must be a live handle, `policy` a NUL-terminated string and `out` writable.
enum SlsStatus sls_eval(const struct SlsGame *game,
                        const char *policy,
                        size_t repeats,
                        uint64_t seed,
                        struct SlsReport **out);

// Worst-case mean length and its weighted counterpart. Either output may be null.
//
// # Safety
// `report` must be a live handle; non-null outputs must be writable.
enum SlsStatus sls_report_worst(const struct SlsReport *report,
                                double *out_worst,
                                double *out_weighted_worst);

// Report as JSON. The string must be released with [`sls_string_free`].
//
// # Safety
// `report` must be a live handle and `out` writable.
enum SlsStatus sls_report_json(const struct SlsReport *report, char **out);

// Releases a report. Null is ignored.
//
// # Safety
// `report` must be null or a handle from [`sls_eval`] that has not been freed.
void sls_report_free(struct SlsReport *report);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string from this library that has not been freed.
void sls_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLS_H */
