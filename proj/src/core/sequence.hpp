#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "core/date.hpp"

namespace tse {

enum class InfoKind {
    medication_exposure, // binary {0,1}
    comorbidity,         // {filler, 1-9, A-H}
    setting,             // {filler, I, O}
    custom,
};

const char* kind_name(InfoKind k);
InfoKind kind_from_name(std::string_view name);

/// The 17 Charlson comorbidity category symbols, in canonical order.
inline constexpr std::string_view kCharlsonSymbols = "123456789ABCDEFGH";

/// Human-readable condition name for a Charlson category symbol.
const char* charlson_condition_name(char symbol);

/// Ordered set of symbols a sequence payload may hold. For nominal kinds the
/// first symbol is the filler used on days without an event.
class Alphabet {
public:
    static Alphabet binary() { return Alphabet("01", '\0'); }
    static Alphabet comorbidity() { return Alphabet(".123456789ABCDEFGH", '.'); }
    static Alphabet setting() { return Alphabet(".IO", '.'); }
    static Alphabet custom(std::string symbols, char filler = '\0');
    static Alphabet for_kind(InfoKind kind);

    bool contains(char c) const { return symbols_.find(c) != std::string::npos; }
    int index_of(char c) const; // -1 if absent
    char filler() const { return filler_; }
    bool has_filler() const { return filler_ != '\0'; }
    const std::string& symbols() const { return symbols_; }

    bool operator==(const Alphabet&) const = default;

private:
    Alphabet(std::string symbols, char filler) : symbols_(std::move(symbols)), filler_(filler) {}

    std::string symbols_;
    char filler_;
};

/// Inclusive calendar window.
class DateWindow {
public:
    DateWindow(Date start, Date end);

    Date start() const { return start_; }
    Date end() const { return end_; }
    int64_t width_days() const { return end_ - start_ + 1; }

    bool contains(Date t) const { return start_ <= t && t <= end_; }
    bool contains(const DateWindow& other) const {
        return start_ <= other.start_ && other.end_ <= end_;
    }
    /// Intersection, or nullopt when the windows are disjoint.
    static std::optional<DateWindow> intersect(const DateWindow& a, const DateWindow& b);

    bool operator==(const DateWindow&) const = default;

private:
    Date start_;
    Date end_;
};

/// One patient's daily-state string for one information type, anchored so
/// that position 1 holds the state on reference_date. Immutable; all
/// operations below are pure functions.
class RefSequence {
public:
    RefSequence(std::string patient_id, InfoKind kind, Date reference_date, std::string payload);
    /// Custom-alphabet sequences (kind is InfoKind::custom).
    RefSequence(std::string patient_id, Alphabet alphabet, Date reference_date,
                std::string payload);

    const std::string& patient_id() const { return patient_id_; }
    InfoKind kind() const { return kind_; }
    const Alphabet& alphabet() const { return alphabet_; }
    Date reference_date() const { return reference_date_; }
    const std::string& payload() const { return payload_; }

    int64_t length() const { return int64_t(payload_.size()); }
    Date last_date() const { return reference_date_.plus_days(length() - 1); }
    DateWindow coverage() const { return DateWindow(reference_date_, last_date()); }
    bool is_binary() const { return kind_ == InfoKind::medication_exposure; }

    /// Symbol at 1-based position k; throws range error outside [1, L].
    char at(int64_t k) const;
    /// Symbol on calendar date t; throws range error outside coverage.
    char on(Date t) const;

    bool operator==(const RefSequence&) const = default;

private:
    std::string patient_id_;
    InfoKind kind_;
    Alphabet alphabet_;
    Date reference_date_;
    std::string payload_;
};

/// Maximal '1'-segment of a binary sequence; start is a 1-based position.
struct Run {
    int64_t start = 0;
    int64_t length = 0;
    bool operator==(const Run&) const = default;
};

/// Run-length form of a binary RefSequence: only the '1'-segments are kept.
class RunSequence {
public:
    RunSequence(Date reference_date, int64_t length, std::vector<Run> runs);

    Date reference_date() const { return reference_date_; }
    int64_t length() const { return length_; }
    const std::vector<Run>& runs() const { return runs_; }

    bool operator==(const RunSequence&) const = default;

private:
    Date reference_date_;
    int64_t length_;
    std::vector<Run> runs_;
};

/// Stack of aligned same-kind sequences for one patient. Dates with several
/// concurrent symbols hold them on separate rows (row r carries the r-th
/// symbol, in alphabet order, of that date's symbol set).
class SequenceBlock {
public:
    static SequenceBlock from_rows(std::vector<RefSequence> rows);

    const std::vector<RefSequence>& rows() const { return rows_; }
    int64_t row_count() const { return int64_t(rows_.size()); }
    const std::string& patient_id() const { return rows_.front().patient_id(); }
    InfoKind kind() const { return rows_.front().kind(); }
    Date reference_date() const { return rows_.front().reference_date(); }
    int64_t length() const { return rows_.front().length(); }
    DateWindow coverage() const { return rows_.front().coverage(); }

    bool operator==(const SequenceBlock&) const = default;

private:
    explicit SequenceBlock(std::vector<RefSequence> rows) : rows_(std::move(rows)) {}

    std::vector<RefSequence> rows_;
};

// --- time and state functions -------------------------------------------

/// f: position k (1-based) -> calendar date.
Date date_at(const RefSequence& seq, int64_t k);

/// f^-1: calendar date -> position; identifies the violated bound on error.
int64_t position_of(const RefSequence& seq, Date t);

/// g applied at date t: the clinical label of the symbol on that day
/// ("on-medication", a condition name, "inpatient", ...).
std::string state_at(const RefSequence& seq, Date t);

/// g for a single symbol of the given kind.
std::string state_label(InfoKind kind, char symbol);

/// g^-1: clinical label back to the payload symbol of the given kind.
char state_symbol(InfoKind kind, const std::string& label);

// --- window operations ----------------------------------------------------

/// Substring of the sequence covering exactly `w`; the result's reference
/// date is w.start().
RefSequence slice(const RefSequence& seq, const DateWindow& w);

/// Number of days in `w` whose state equals `symbol`.
int64_t count_symbol(const RefSequence& seq, char symbol, const DateWindow& w);

/// Positionwise AND of two binary sequences of one patient, over the
/// intersection of their coverages. The result's reference date is the later
/// of the two reference dates.
RefSequence overlap_and(const RefSequence& a, const RefSequence& b);

struct MaxOnesResult {
    int64_t count = 0;
    Date window_start; // earliest window attaining the maximum
    bool operator==(const MaxOnesResult&) const = default;
};

/// Maximum count of '1' over all width-day windows fully inside `range`;
/// ties broken by the earliest window start.
MaxOnesResult max_ones_in_window(const RefSequence& seq, int64_t width, const DateWindow& range);

/// Trailing moving average of a binary sequence: values[i] is the fraction of
/// '1' days in the window ending at position width+i. Positions before the
/// first full window yield no value.
struct MovingAverageSeries {
    Date first_date;            // date of the first emitted value
    int64_t window = 0;         // width in days
    std::vector<double> values; // one per day from first_date on
};

MovingAverageSeries moving_average(const RefSequence& seq, int64_t width);

// --- run-length conversion --------------------------------------------------

RunSequence to_runs(const RefSequence& seq);
RefSequence from_runs(const RunSequence& runs, const std::string& patient_id = "");

// --- blocks ------------------------------------------------------------------

/// Union of non-filler symbols across all rows of the block over `w`.
std::set<char> block_symbols_in(const SequenceBlock& block, const DateWindow& w);

} // namespace tse
