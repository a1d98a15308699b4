#ifndef MCQGEN_H
#define MCQGEN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MCQ_STATUS_OK = 0,
  MCQ_STATUS_NULL_POINTER = 1,
  MCQ_STATUS_INVALID_UTF8 = 2,
  MCQ_STATUS_PARSE_ERROR = 3,
  MCQ_STATUS_DOMAIN_ERROR = 4,
  MCQ_STATUS_UNBOUND_VARIABLE = 5,
  MCQ_STATUS_UNSUPPORTED_DERIVATIVE = 6,
  MCQ_STATUS_INVALID_ARGUMENT = 7,
  MCQ_STATUS_SCHEMA_VIOLATION = 10,
  MCQ_STATUS_MISSING_FIELD = 11,
  MCQ_STATUS_AMBIGUOUS_CORRECT = 12,
  MCQ_STATUS_MATH_PARSE_ERROR = 13,
  MCQ_STATUS_TRUNCATED = 14,
  MCQ_STATUS_PANIC = 99,
} McqStatus;

typedef enum {
  MCQ_VERDICT_EQUIVALENT = 0,
  MCQ_VERDICT_DISTINCT = 1,
  MCQ_VERDICT_INCONCLUSIVE = 2,
} McqVerdict;

/**
 * Opaque parsed expression.
 */
typedef struct McqExpr McqExpr;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *mcq_last_error(void);

/**
 * Library version as a static string.
 */
const char *mcq_version(void);

void mcq_string_free(char *s);

void mcq_expr_free(McqExpr *e);

/**
 * Parses LaTeX into a new handle stored in `*out`.
 */
McqStatus mcq_expr_parse_latex(const char *latex, McqExpr **out);

/**
 * Canonical LaTeX for the expression; free with `mcq_string_free`.
 */
McqStatus mcq_expr_to_latex(const McqExpr *e, char **out);

/**
 * Semantic markup for the expression; free with `mcq_string_free`.
 */
McqStatus mcq_expr_to_markup(const McqExpr *e, char **out);

/**
 * Evaluates with `count` variable bindings given as parallel arrays.
 */
McqStatus mcq_expr_eval(const McqExpr *e,
                        const char *const *names,
                        const double *values,
                        size_t count,
                        double *out);

/**
 * Derivative with respect to `var`, as a new handle.
 */
McqStatus mcq_expr_differentiate(const McqExpr *e, const char *var, McqExpr **out);

/**
 * Equivalence under the default policy with the given sampling seed.
 */
McqStatus mcq_expr_equivalent(const McqExpr *a, const McqExpr *b, uint64_t seed, McqVerdict *out);

/**
 * Parses a model response payload; on success `*out` holds the questions as JSON.
 */
McqStatus mcq_parse_response(const char *raw, char **out);

/**
 * Validates one question (JSON) and stores the report (JSON) in `*out`.
 */
McqStatus mcq_validate_question(const char *question_json, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCQGEN_H */
