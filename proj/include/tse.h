/*
 * tse — temporal sequence engine over time-stamped clinical event records.
 *
 * C interface to the engine: opaque handles, status codes, ISO "YYYY-MM-DD"
 * dates. Every function that can fail returns a tse_status; on failure
 * tse_last_error() holds a thread-local description of what went wrong.
 * Positions are 1-based: position 1 is the sequence's reference date.
 */
#ifndef TSE_H
#define TSE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tse_status {
    TSE_OK = 0,
    TSE_ERR_RANGE = 1,     /* position or date outside coverage */
    TSE_ERR_KIND = 2,      /* wrong sequence kind for the operation */
    TSE_ERR_ALIGNMENT = 3, /* sequences cannot be aligned */
    TSE_ERR_PARAMETER = 4, /* invalid argument value */
    TSE_ERR_STRUCTURE = 5, /* invariant-violating value */
    TSE_ERR_PARSE = 6,     /* malformed input text */
    TSE_ERR_IO = 7,        /* file system failure */
    TSE_ERR_NOT_FOUND = 8, /* missing patient, record or path */
    TSE_ERR_CORRUPT = 9,   /* store checksum mismatch */
    TSE_ERR_CONFIG = 10,   /* invalid run configuration */
    TSE_ERR_USAGE = 11,    /* bad command invocation */
    TSE_ERR_INTERNAL = 12
} tse_status;

const char* tse_version(void);

/* Message for the calling thread's most recent failure. Never NULL. */
const char* tse_last_error(void);

typedef struct tse_sequence tse_sequence; /* referenced daily-state sequence */
typedef struct tse_runs tse_runs;         /* run-length form of a binary sequence */
typedef struct tse_config tse_config;     /* pipeline run configuration */

/* --- sequences ------------------------------------------------------------
 * kind: "medication-exposure" (payload of '0'/'1'), "comorbidity"
 * (filler '.' plus category symbols 1-9/A-H) or "setting" ('.', 'I', 'O').
 */
tse_status tse_sequence_create(const char* patient_id, const char* kind,
                               const char* reference_date, const char* payload,
                               tse_sequence** out);
void tse_sequence_free(tse_sequence* seq);

int64_t tse_sequence_length(const tse_sequence* seq);
const char* tse_sequence_payload(const tse_sequence* seq);    /* valid until free */
const char* tse_sequence_patient_id(const tse_sequence* seq); /* valid until free */
const char* tse_sequence_kind(const tse_sequence* seq);

tse_status tse_sequence_reference_date(const tse_sequence* seq, char* buf, size_t buf_size);

/* time function f: position -> date, and its inverse */
tse_status tse_sequence_date_at(const tse_sequence* seq, int64_t position, char* buf,
                                size_t buf_size);
tse_status tse_sequence_position_of(const tse_sequence* seq, const char* date,
                                    int64_t* out_position);

/* state function g at a date: "on-medication", a condition name, ... */
tse_status tse_sequence_state_at(const tse_sequence* seq, const char* date, char* buf,
                                 size_t buf_size);

tse_status tse_sequence_slice(const tse_sequence* seq, const char* start_date,
                              const char* end_date, tse_sequence** out);
tse_status tse_sequence_count_symbol(const tse_sequence* seq, char symbol,
                                     const char* start_date, const char* end_date,
                                     int64_t* out_count);

/* positionwise AND over the shared coverage of two binary sequences */
tse_status tse_sequence_overlap_and(const tse_sequence* a, const tse_sequence* b,
                                    tse_sequence** out);

/* best window_days-day window inside [start_date, end_date]; earliest tie wins */
tse_status tse_sequence_max_ones_in_window(const tse_sequence* seq, int64_t window_days,
                                           const char* start_date, const char* end_date,
                                           int64_t* out_count, char* best_start_buf,
                                           size_t buf_size);

/* Trailing moving average. Call with values == NULL to query the length:
 * out_count receives the number of values and first_date_buf the date of the
 * first one. With a buffer, up to capacity values are written. */
tse_status tse_sequence_moving_average(const tse_sequence* seq, int64_t window_days,
                                       double* values, int64_t capacity, int64_t* out_count,
                                       char* first_date_buf, size_t buf_size);

/* --- run-length form ------------------------------------------------------ */
tse_status tse_sequence_to_runs(const tse_sequence* seq, tse_runs** out);
tse_status tse_runs_create(const char* reference_date, int64_t length, const int64_t* starts,
                           const int64_t* lengths, int64_t run_count, tse_runs** out);
void tse_runs_free(tse_runs* runs);
int64_t tse_runs_count(const tse_runs* runs);
int64_t tse_runs_total_days(const tse_runs* runs);
tse_status tse_runs_at(const tse_runs* runs, int64_t index, int64_t* out_start,
                       int64_t* out_length);
tse_status tse_runs_to_sequence(const tse_runs* runs, const char* patient_id,
                                tse_sequence** out);

/* --- batch pipeline ---------------------------------------------------------
 * Subcommands: ingest, build, stats, eligibility, cci-trend, covariates,
 * inspect, generate. Derived tables and stores are written under the
 * configured output directory; the returned text is the human-readable
 * summary (free it with tse_string_free).
 */
tse_status tse_config_create(tse_config** out);
tse_status tse_config_load(const char* path, tse_config** out);
tse_status tse_config_set(tse_config* config, const char* key, const char* value);
void tse_config_free(tse_config* config);

tse_status tse_run(const tse_config* config, const char* subcommand, char** out_text);
void tse_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* TSE_H */
