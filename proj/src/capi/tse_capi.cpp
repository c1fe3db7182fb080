#include "tse.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/pipeline.hpp"
#include "core/sequence.hpp"

using namespace tse;

struct tse_sequence {
    RefSequence value;
};

struct tse_runs {
    RunSequence value;
};

struct tse_config {
    RunConfig value;
};

namespace {

thread_local std::string g_last_error;

tse_status status_from(ErrorCode code) {
    switch (code) {
    case ErrorCode::range: return TSE_ERR_RANGE;
    case ErrorCode::kind: return TSE_ERR_KIND;
    case ErrorCode::alignment: return TSE_ERR_ALIGNMENT;
    case ErrorCode::parameter: return TSE_ERR_PARAMETER;
    case ErrorCode::structure: return TSE_ERR_STRUCTURE;
    case ErrorCode::parse: return TSE_ERR_PARSE;
    case ErrorCode::io: return TSE_ERR_IO;
    case ErrorCode::not_found: return TSE_ERR_NOT_FOUND;
    case ErrorCode::corrupt: return TSE_ERR_CORRUPT;
    case ErrorCode::config: return TSE_ERR_CONFIG;
    case ErrorCode::usage: return TSE_ERR_USAGE;
    }
    return TSE_ERR_INTERNAL;
}

tse_status fail(tse_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

/// Runs `fn`, translating exceptions into status codes.
template <typename Fn> tse_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const TseError& e) {
        return fail(status_from(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(TSE_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(TSE_ERR_INTERNAL, e.what());
    }
}

tse_status require(bool condition, const char* what) {
    return condition ? TSE_OK : fail(TSE_ERR_PARAMETER, what);
}

tse_status copy_out(const std::string& s, char* buf, size_t buf_size) {
    if (!buf)
        return fail(TSE_ERR_PARAMETER, "null output buffer");
    if (buf_size < s.size() + 1)
        return fail(TSE_ERR_PARAMETER, "output buffer too small (need " +
                                           std::to_string(s.size() + 1) + " bytes)");
    std::memcpy(buf, s.c_str(), s.size() + 1);
    return TSE_OK;
}

Date parse_date_arg(const char* text, const char* what) {
    if (!text)
        throw TseError(ErrorCode::parameter, std::string("null ") + what);
    auto d = Date::parse(text);
    if (!d)
        throw TseError(ErrorCode::parse,
                       std::string(what) + " '" + text + "' is not a YYYY-MM-DD date");
    return *d;
}

} // namespace

extern "C" {

const char* tse_version(void) { return "0.1.0"; }

const char* tse_last_error(void) { return g_last_error.c_str(); }

tse_status tse_sequence_create(const char* patient_id, const char* kind,
                               const char* reference_date, const char* payload,
                               tse_sequence** out) {
    if (tse_status s = require(out && patient_id && kind && payload, "null argument"); s != TSE_OK)
        return s;
    return guarded([&] {
        InfoKind k = kind_from_name(kind);
        if (k == InfoKind::custom)
            throw TseError(ErrorCode::parameter, "custom kind is not available through the C API");
        Date ref = parse_date_arg(reference_date, "reference date");
        *out = new tse_sequence{RefSequence(patient_id, k, ref, payload)};
        return TSE_OK;
    });
}

void tse_sequence_free(tse_sequence* seq) { delete seq; }

int64_t tse_sequence_length(const tse_sequence* seq) { return seq ? seq->value.length() : 0; }

const char* tse_sequence_payload(const tse_sequence* seq) {
    return seq ? seq->value.payload().c_str() : "";
}

const char* tse_sequence_patient_id(const tse_sequence* seq) {
    return seq ? seq->value.patient_id().c_str() : "";
}

const char* tse_sequence_kind(const tse_sequence* seq) {
    return seq ? kind_name(seq->value.kind()) : "";
}

tse_status tse_sequence_reference_date(const tse_sequence* seq, char* buf, size_t buf_size) {
    if (tse_status s = require(seq != nullptr, "null sequence"); s != TSE_OK)
        return s;
    return guarded([&] { return copy_out(seq->value.reference_date().to_string(), buf, buf_size); });
}

tse_status tse_sequence_date_at(const tse_sequence* seq, int64_t position, char* buf,
                                size_t buf_size) {
    if (tse_status s = require(seq != nullptr, "null sequence"); s != TSE_OK)
        return s;
    return guarded(
        [&] { return copy_out(date_at(seq->value, position).to_string(), buf, buf_size); });
}

tse_status tse_sequence_position_of(const tse_sequence* seq, const char* date,
                                    int64_t* out_position) {
    if (tse_status s = require(seq && out_position, "null argument"); s != TSE_OK)
        return s;
    return guarded([&] {
        *out_position = position_of(seq->value, parse_date_arg(date, "date"));
        return TSE_OK;
    });
}

tse_status tse_sequence_state_at(const tse_sequence* seq, const char* date, char* buf,
                                 size_t buf_size) {
    if (tse_status s = require(seq != nullptr, "null sequence"); s != TSE_OK)
        return s;
    return guarded([&] {
        return copy_out(state_at(seq->value, parse_date_arg(date, "date")), buf, buf_size);
    });
}

tse_status tse_sequence_slice(const tse_sequence* seq, const char* start_date,
                              const char* end_date, tse_sequence** out) {
    if (tse_status s = require(seq && out, "null argument"); s != TSE_OK)
        return s;
    return guarded([&] {
        DateWindow w(parse_date_arg(start_date, "start date"), parse_date_arg(end_date, "end date"));
        *out = new tse_sequence{slice(seq->value, w)};
        return TSE_OK;
    });
}

tse_status tse_sequence_count_symbol(const tse_sequence* seq, char symbol,
                                     const char* start_date, const char* end_date,
                                     int64_t* out_count) {
    if (tse_status s = require(seq && out_count, "null argument"); s != TSE_OK)
        return s;
    return guarded([&] {
        DateWindow w(parse_date_arg(start_date, "start date"), parse_date_arg(end_date, "end date"));
        *out_count = count_symbol(seq->value, symbol, w);
        return TSE_OK;
    });
}

tse_status tse_sequence_overlap_and(const tse_sequence* a, const tse_sequence* b,
                                    tse_sequence** out) {
    if (tse_status s = require(a && b && out, "null argument"); s != TSE_OK)
        return s;
    return guarded([&] {
        *out = new tse_sequence{overlap_and(a->value, b->value)};
        return TSE_OK;
    });
}

tse_status tse_sequence_max_ones_in_window(const tse_sequence* seq, int64_t window_days,
                                           const char* start_date, const char* end_date,
                                           int64_t* out_count, char* best_start_buf,
                                           size_t buf_size) {
    if (tse_status s = require(seq && out_count, "null argument"); s != TSE_OK)
        return s;
    return guarded([&] {
        DateWindow w(parse_date_arg(start_date, "start date"), parse_date_arg(end_date, "end date"));
        MaxOnesResult r = max_ones_in_window(seq->value, window_days, w);
        *out_count = r.count;
        if (best_start_buf)
            return copy_out(r.window_start.to_string(), best_start_buf, buf_size);
        return TSE_OK;
    });
}

tse_status tse_sequence_moving_average(const tse_sequence* seq, int64_t window_days,
                                       double* values, int64_t capacity, int64_t* out_count,
                                       char* first_date_buf, size_t buf_size) {
    if (tse_status s = require(seq && out_count, "null argument"); s != TSE_OK)
        return s;
    return guarded([&] {
        MovingAverageSeries series = moving_average(seq->value, window_days);
        *out_count = int64_t(series.values.size());
        if (values) {
            int64_t n = std::min<int64_t>(capacity, int64_t(series.values.size()));
            std::memcpy(values, series.values.data(), size_t(n) * sizeof(double));
        }
        if (first_date_buf)
            return copy_out(series.first_date.to_string(), first_date_buf, buf_size);
        return TSE_OK;
    });
}

tse_status tse_sequence_to_runs(const tse_sequence* seq, tse_runs** out) {
    if (tse_status s = require(seq && out, "null argument"); s != TSE_OK)
        return s;
    return guarded([&] {
        *out = new tse_runs{to_runs(seq->value)};
        return TSE_OK;
    });
}

tse_status tse_runs_create(const char* reference_date, int64_t length, const int64_t* starts,
                           const int64_t* lengths, int64_t run_count, tse_runs** out) {
    if (tse_status s = require(out && (run_count == 0 || (starts && lengths)), "null argument");
        s != TSE_OK)
        return s;
    return guarded([&] {
        std::vector<Run> runs;
        runs.reserve(size_t(run_count));
        for (int64_t i = 0; i < run_count; ++i)
            runs.push_back({starts[i], lengths[i]});
        *out = new tse_runs{
            RunSequence(parse_date_arg(reference_date, "reference date"), length, std::move(runs))};
        return TSE_OK;
    });
}

void tse_runs_free(tse_runs* runs) { delete runs; }

int64_t tse_runs_count(const tse_runs* runs) {
    return runs ? int64_t(runs->value.runs().size()) : 0;
}

int64_t tse_runs_total_days(const tse_runs* runs) { return runs ? runs->value.length() : 0; }

tse_status tse_runs_at(const tse_runs* runs, int64_t index, int64_t* out_start,
                       int64_t* out_length) {
    if (tse_status s = require(runs && out_start && out_length, "null argument"); s != TSE_OK)
        return s;
    if (index < 0 || index >= int64_t(runs->value.runs().size()))
        return fail(TSE_ERR_RANGE, "run index " + std::to_string(index) + " outside [0, " +
                                       std::to_string(runs->value.runs().size()) + ")");
    const Run& r = runs->value.runs()[size_t(index)];
    *out_start = r.start;
    *out_length = r.length;
    return TSE_OK;
}

tse_status tse_runs_to_sequence(const tse_runs* runs, const char* patient_id,
                                tse_sequence** out) {
    if (tse_status s = require(runs && out, "null argument"); s != TSE_OK)
        return s;
    return guarded([&] {
        *out = new tse_sequence{from_runs(runs->value, patient_id ? patient_id : "")};
        return TSE_OK;
    });
}

tse_status tse_config_create(tse_config** out) {
    if (tse_status s = require(out != nullptr, "null argument"); s != TSE_OK)
        return s;
    return guarded([&] {
        *out = new tse_config{};
        return TSE_OK;
    });
}

tse_status tse_config_load(const char* path, tse_config** out) {
    if (tse_status s = require(out && path, "null argument"); s != TSE_OK)
        return s;
    return guarded([&] {
        *out = new tse_config{RunConfig::load(path)};
        return TSE_OK;
    });
}

tse_status tse_config_set(tse_config* config, const char* key, const char* value) {
    if (tse_status s = require(config && key && value, "null argument"); s != TSE_OK)
        return s;
    return guarded([&] {
        config->value.set(key, value);
        return TSE_OK;
    });
}

void tse_config_free(tse_config* config) { delete config; }

tse_status tse_run(const tse_config* config, const char* subcommand, char** out_text) {
    if (tse_status s = require(config && subcommand, "null argument"); s != TSE_OK)
        return s;
    return guarded([&] {
        std::string text = run_command(subcommand, config->value);
        if (out_text) {
            *out_text = static_cast<char*>(std::malloc(text.size() + 1));
            if (!*out_text)
                throw std::bad_alloc();
            std::memcpy(*out_text, text.c_str(), text.size() + 1);
        }
        return TSE_OK;
    });
}

void tse_string_free(char* text) { std::free(text); }

} // extern "C"
