/* C interface to the causal_energy library.
 *
 * Every call returns a ce_status; on failure ce_last_error() holds a message
 * for the calling thread until its next failing call. Objects handed out
 * through pointer arguments are owned by the caller and released with the
 * matching *_free function. */
#ifndef CAUSAL_ENERGY_H
#define CAUSAL_ENERGY_H

#include <stddef.h>
#include <stdint.h>

#if defined _WIN32 || defined __CYGWIN__
#  ifdef CE_BUILDING_LIBRARY
#    define CE_API __declspec(dllexport)
#  else
#    define CE_API __declspec(dllimport)
#  endif
#elif defined(__GNUC__) && __GNUC__ >= 4
#  define CE_API __attribute__((visibility("default")))
#else
#  define CE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ce_status {
    CE_OK = 0,
    CE_PARTIAL = 1, /* stage finished but some cells or sectors failed */
    CE_ERR_INVALID_ARGUMENT = 10,
    CE_ERR_SCHEMA = 11,
    CE_ERR_PARSE = 12,
    CE_ERR_DEGENERATE_COLUMN = 13,
    CE_ERR_DEGENERATE_INPUT = 14,
    CE_ERR_EMPTY_DATASET = 15,
    CE_ERR_SAMPLE_TOO_SMALL = 16,
    CE_ERR_SINGULAR_SYSTEM = 17,
    CE_ERR_TRAINING_DIVERGED = 18,
    CE_ERR_ALIGNMENT = 19,
    CE_ERR_IO = 20,
    CE_ERR_INTERNAL = 99
} ce_status;

typedef enum ce_alternative {
    CE_ALT_LESS = 0,
    CE_ALT_GREATER = 1,
    CE_ALT_TWO_SIDED = 2
} ce_alternative;

typedef struct ce_frame ce_frame;
typedef struct ce_result ce_result;

CE_API const char* ce_version(void);
CE_API const char* ce_last_error(void);
CE_API const char* ce_status_name(ce_status status);

/* Loads a daily CSV. schema_json may be NULL for the built-in gas-demand
 * layout; derived features are appended unless already present. */
CE_API ce_status ce_frame_load(const char* csv_path, const char* schema_json, ce_frame** out);
CE_API size_t ce_frame_rows(const ce_frame* frame);
CE_API size_t ce_frame_cols(const ce_frame* frame);
/* NULL when col is out of range. Valid until the frame is freed. */
CE_API const char* ce_frame_column_name(const ce_frame* frame, size_t col);
/* Copies `len` (== rows) values; missing entries become NaN. */
CE_API ce_status ce_frame_column_values(const ce_frame* frame, size_t col, double* out, size_t len);
/* Writes YYYY-MM-DD plus terminator; buf needs at least 11 bytes. */
CE_API ce_status ce_frame_date(const ce_frame* frame, size_t row, char* buf, size_t len);
CE_API ce_status ce_frame_save_csv(const ce_frame* frame, const char* path);
CE_API void ce_frame_free(ce_frame* frame);

CE_API ce_status ce_digamma(double x, double* out);
/* KSG estimate in nats. */
CE_API ce_status ce_ksg_mi(const double* x, const double* y, size_t n, int k, uint64_t seed, double* out);
/* Signed-rank test on a - b; statistic may be NULL. */
CE_API ce_status ce_wilcoxon_signed_rank(const double* a, const double* b, size_t n, ce_alternative alternative,
                                         double* statistic, double* p_value);

/* Runs one pipeline stage ("ingest", "mi", "granger", "counterfactual",
 * "synth") with a JSON run configuration. *out is set for CE_OK and
 * CE_PARTIAL. */
CE_API ce_status ce_run_stage(const char* stage, const char* config_json, ce_result** out);
CE_API const char* ce_result_summary(const ce_result* result);
CE_API size_t ce_result_file_count(const ce_result* result);
CE_API const char* ce_result_file(const ce_result* result, size_t i);
CE_API void ce_result_free(ce_result* result);

/* Synthetic generator; metadata_json may be NULL, else free with ce_string_free. */
CE_API ce_status ce_synth(const char* spec_json, ce_frame** out, char** metadata_json);
CE_API void ce_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
