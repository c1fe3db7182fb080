#include "core/sequence.hpp"

#include <algorithm>

#include "core/error.hpp"

namespace tse {

const char* kind_name(InfoKind k) {
    switch (k) {
    case InfoKind::medication_exposure: return "medication-exposure";
    case InfoKind::comorbidity: return "comorbidity";
    case InfoKind::setting: return "setting";
    case InfoKind::custom: return "custom";
    }
    return "unknown";
}

InfoKind kind_from_name(std::string_view name) {
    if (name == "medication-exposure")
        return InfoKind::medication_exposure;
    if (name == "comorbidity")
        return InfoKind::comorbidity;
    if (name == "setting")
        return InfoKind::setting;
    if (name == "custom")
        return InfoKind::custom;
    throw TseError(ErrorCode::parse, "unknown sequence kind '" + std::string(name) + "'");
}

const char* charlson_condition_name(char symbol) {
    switch (symbol) {
    case '1': return "Myocardial infarction";
    case '2': return "Congestive heart failure";
    case '3': return "Peripheral vascular disease";
    case '4': return "Cerebrovascular disease";
    case '5': return "Dementia";
    case '6': return "Chronic pulmonary disease";
    case '7': return "Rheumatic disease";
    case '8': return "Peptic ulcer disease";
    case '9': return "Mild liver disease";
    case 'A': return "Diabetes without chronic complication";
    case 'B': return "Diabetes with chronic complication";
    case 'C': return "Hemiplegia or paraplegia";
    case 'D': return "Renal disease";
    case 'E': return "Any malignancy, including lymphoma and leukemia, except malignant neoplasm of skin";
    case 'F': return "Moderate or severe liver disease";
    case 'G': return "Metastatic solid tumor";
    case 'H': return "AIDS/HIV";
    }
    throw TseError(ErrorCode::structure,
                   std::string("not a comorbidity category symbol: '") + symbol + "'");
}

Alphabet Alphabet::custom(std::string symbols, char filler) {
    if (symbols.empty())
        throw TseError(ErrorCode::parameter, "custom alphabet must not be empty");
    if (filler != '\0' && symbols.find(filler) == std::string::npos)
        throw TseError(ErrorCode::parameter, "custom alphabet filler must be one of its symbols");
    for (size_t i = 0; i < symbols.size(); ++i)
        if (symbols.find(symbols[i], i + 1) != std::string::npos)
            throw TseError(ErrorCode::parameter, "custom alphabet has duplicate symbols");
    return Alphabet(std::move(symbols), filler);
}

Alphabet Alphabet::for_kind(InfoKind kind) {
    switch (kind) {
    case InfoKind::medication_exposure: return binary();
    case InfoKind::comorbidity: return comorbidity();
    case InfoKind::setting: return setting();
    case InfoKind::custom:
        throw TseError(ErrorCode::parameter, "custom kind requires an explicit alphabet");
    }
    throw TseError(ErrorCode::parameter, "unknown kind");
}

int Alphabet::index_of(char c) const {
    auto pos = symbols_.find(c);
    return pos == std::string::npos ? -1 : int(pos);
}

DateWindow::DateWindow(Date start, Date end) : start_(start), end_(end) {
    if (end < start)
        throw TseError(ErrorCode::parameter, "window end " + end.to_string() +
                                                 " precedes start " + start.to_string());
}

std::optional<DateWindow> DateWindow::intersect(const DateWindow& a, const DateWindow& b) {
    Date s = max(a.start_, b.start_);
    Date e = min(a.end_, b.end_);
    if (e < s)
        return std::nullopt;
    return DateWindow(s, e);
}

namespace {

void validate_payload(const Alphabet& alphabet, const std::string& payload) {
    if (payload.empty())
        throw TseError(ErrorCode::structure, "sequence payload must cover at least one day");
    for (size_t i = 0; i < payload.size(); ++i) {
        if (!alphabet.contains(payload[i]))
            throw TseError(ErrorCode::structure,
                           std::string("payload symbol '") + payload[i] + "' at position " +
                               std::to_string(i + 1) + " is not in the alphabet \"" +
                               alphabet.symbols() + "\"");
    }
}

} // namespace

RefSequence::RefSequence(std::string patient_id, InfoKind kind, Date reference_date,
                         std::string payload)
    : patient_id_(std::move(patient_id)), kind_(kind), alphabet_(Alphabet::for_kind(kind)),
      reference_date_(reference_date), payload_(std::move(payload)) {
    validate_payload(alphabet_, payload_);
}

RefSequence::RefSequence(std::string patient_id, Alphabet alphabet, Date reference_date,
                         std::string payload)
    : patient_id_(std::move(patient_id)), kind_(InfoKind::custom), alphabet_(std::move(alphabet)),
      reference_date_(reference_date), payload_(std::move(payload)) {
    validate_payload(alphabet_, payload_);
}

char RefSequence::at(int64_t k) const {
    if (k < 1 || k > length())
        throw TseError(ErrorCode::range, "position " + std::to_string(k) + " outside [1, " +
                                             std::to_string(length()) + "]");
    return payload_[size_t(k - 1)];
}

char RefSequence::on(Date t) const { return payload_[size_t(position_of(*this, t) - 1)]; }

RunSequence::RunSequence(Date reference_date, int64_t length, std::vector<Run> runs)
    : reference_date_(reference_date), length_(length), runs_(std::move(runs)) {
    if (length_ < 1)
        throw TseError(ErrorCode::structure, "run sequence length must be >= 1");
    int64_t prev_end = 0; // last covered position of the previous run
    for (const Run& r : runs_) {
        if (r.start < 1 || r.length < 1)
            throw TseError(ErrorCode::structure,
                           "run (" + std::to_string(r.start) + "," + std::to_string(r.length) +
                               ") must have start >= 1 and length >= 1");
        // adjacent runs would be a single maximal run
        if (r.start <= prev_end + 1 && prev_end > 0)
            throw TseError(ErrorCode::structure,
                           "runs overlap or are adjacent at position " + std::to_string(r.start));
        if (r.start <= prev_end)
            throw TseError(ErrorCode::structure, "runs are not sorted by start position");
        prev_end = r.start + r.length - 1;
        if (prev_end > length_)
            throw TseError(ErrorCode::structure,
                           "run ending at position " + std::to_string(prev_end) +
                               " exceeds sequence length " + std::to_string(length_));
    }
}

SequenceBlock SequenceBlock::from_rows(std::vector<RefSequence> rows) {
    if (rows.empty())
        throw TseError(ErrorCode::structure, "sequence block needs at least one row");
    const RefSequence& first = rows.front();
    for (const RefSequence& r : rows) {
        if (r.patient_id() != first.patient_id() || r.kind() != first.kind() ||
            r.reference_date() != first.reference_date() || r.length() != first.length())
            throw TseError(ErrorCode::alignment,
                           "block rows must share patient, kind, reference date and length");
    }
    return SequenceBlock(std::move(rows));
}

// --- time and state functions -------------------------------------------

Date date_at(const RefSequence& seq, int64_t k) {
    if (k < 1 || k > seq.length())
        throw TseError(ErrorCode::range, "position " + std::to_string(k) + " outside [1, " +
                                             std::to_string(seq.length()) + "]");
    return seq.reference_date().plus_days(k - 1);
}

int64_t position_of(const RefSequence& seq, Date t) {
    if (t < seq.reference_date())
        throw TseError(ErrorCode::range, "date " + t.to_string() + " precedes coverage start " +
                                             seq.reference_date().to_string());
    if (t > seq.last_date())
        throw TseError(ErrorCode::range, "date " + t.to_string() + " is after coverage end " +
                                             seq.last_date().to_string());
    return t - seq.reference_date() + 1;
}

std::string state_label(InfoKind kind, char symbol) {
    switch (kind) {
    case InfoKind::medication_exposure:
        if (symbol == '1')
            return "on-medication";
        if (symbol == '0')
            return "not-on-medication";
        break;
    case InfoKind::comorbidity:
        if (symbol == '.')
            return "none";
        return charlson_condition_name(symbol);
    case InfoKind::setting:
        if (symbol == 'I')
            return "inpatient";
        if (symbol == 'O')
            return "outpatient";
        if (symbol == '.')
            return "none";
        break;
    case InfoKind::custom:
        return std::string(1, symbol);
    }
    throw TseError(ErrorCode::structure, std::string("symbol '") + symbol +
                                             "' has no state label for kind " + kind_name(kind));
}

char state_symbol(InfoKind kind, const std::string& label) {
    switch (kind) {
    case InfoKind::medication_exposure:
        if (label == "on-medication")
            return '1';
        if (label == "not-on-medication")
            return '0';
        break;
    case InfoKind::comorbidity:
        if (label == "none")
            return '.';
        for (char c : kCharlsonSymbols)
            if (label == charlson_condition_name(c))
                return c;
        break;
    case InfoKind::setting:
        if (label == "inpatient")
            return 'I';
        if (label == "outpatient")
            return 'O';
        if (label == "none")
            return '.';
        break;
    case InfoKind::custom:
        if (label.size() == 1)
            return label[0];
        break;
    }
    throw TseError(ErrorCode::structure,
                   "label '" + label + "' has no symbol for kind " + kind_name(kind));
}

std::string state_at(const RefSequence& seq, Date t) {
    return state_label(seq.kind(), seq.on(t));
}

// --- window operations ----------------------------------------------------

namespace {

/// Checked conversion of a window into 0-based payload offsets [lo, hi].
std::pair<size_t, size_t> window_offsets(const RefSequence& seq, const DateWindow& w) {
    if (!seq.coverage().contains(w))
        throw TseError(ErrorCode::range, "window " + w.start().to_string() + " .. " +
                                             w.end().to_string() + " exceeds coverage " +
                                             seq.reference_date().to_string() + " .. " +
                                             seq.last_date().to_string());
    size_t lo = size_t(w.start() - seq.reference_date());
    size_t hi = size_t(w.end() - seq.reference_date());
    return {lo, hi};
}

} // namespace

RefSequence slice(const RefSequence& seq, const DateWindow& w) {
    auto [lo, hi] = window_offsets(seq, w);
    std::string part = seq.payload().substr(lo, hi - lo + 1);
    if (seq.kind() == InfoKind::custom)
        return RefSequence(seq.patient_id(), seq.alphabet(), w.start(), std::move(part));
    return RefSequence(seq.patient_id(), seq.kind(), w.start(), std::move(part));
}

int64_t count_symbol(const RefSequence& seq, char symbol, const DateWindow& w) {
    if (!seq.alphabet().contains(symbol))
        throw TseError(ErrorCode::parameter, std::string("symbol '") + symbol +
                                                 "' is not in the sequence alphabet \"" +
                                                 seq.alphabet().symbols() + "\"");
    auto [lo, hi] = window_offsets(seq, w);
    return std::count(seq.payload().begin() + lo, seq.payload().begin() + hi + 1, symbol);
}

RefSequence overlap_and(const RefSequence& a, const RefSequence& b) {
    if (!a.is_binary() || !b.is_binary())
        throw TseError(ErrorCode::kind, "overlap requires two binary sequences");
    if (a.patient_id() != b.patient_id())
        throw TseError(ErrorCode::alignment, "overlap requires sequences of the same patient ('" +
                                                 a.patient_id() + "' vs '" + b.patient_id() + "')");
    auto shared = DateWindow::intersect(a.coverage(), b.coverage());
    if (!shared)
        throw TseError(ErrorCode::alignment, "sequences have no overlapping coverage");

    std::string payload(size_t(shared->width_days()), '0');
    size_t off_a = size_t(shared->start() - a.reference_date());
    size_t off_b = size_t(shared->start() - b.reference_date());
    for (size_t i = 0; i < payload.size(); ++i)
        if (a.payload()[off_a + i] == '1' && b.payload()[off_b + i] == '1')
            payload[i] = '1';
    return RefSequence(a.patient_id(), InfoKind::medication_exposure, shared->start(),
                       std::move(payload));
}

MaxOnesResult max_ones_in_window(const RefSequence& seq, int64_t width, const DateWindow& range) {
    if (width < 1)
        throw TseError(ErrorCode::parameter, "window width must be >= 1");
    auto [lo, hi] = window_offsets(seq, range);
    int64_t span = int64_t(hi - lo + 1);
    if (width > span)
        throw TseError(ErrorCode::parameter, "window width " + std::to_string(width) +
                                                 " exceeds range width " + std::to_string(span));

    const std::string& p = seq.payload();
    int64_t count = std::count(p.begin() + lo, p.begin() + lo + width, '1');
    MaxOnesResult best{count, range.start()};
    for (size_t start = lo + 1; start + size_t(width) - 1 <= hi; ++start) {
        count += (p[start + size_t(width) - 1] == '1') - (p[start - 1] == '1');
        if (count > best.count) {
            best.count = count;
            best.window_start = seq.reference_date().plus_days(int64_t(start));
        }
    }
    return best;
}

MovingAverageSeries moving_average(const RefSequence& seq, int64_t width) {
    if (!seq.is_binary())
        throw TseError(ErrorCode::kind, "moving average requires a binary sequence");
    if (width < 1 || width > seq.length())
        throw TseError(ErrorCode::parameter,
                       "moving-average width " + std::to_string(width) + " outside [1, " +
                           std::to_string(seq.length()) + "]");

    MovingAverageSeries out;
    out.first_date = seq.reference_date().plus_days(width - 1);
    out.window = width;
    out.values.reserve(size_t(seq.length() - width + 1));
    const std::string& p = seq.payload();
    int64_t ones = std::count(p.begin(), p.begin() + width, '1');
    out.values.push_back(double(ones) / double(width));
    for (size_t k = size_t(width); k < p.size(); ++k) {
        ones += (p[k] == '1') - (p[k - size_t(width)] == '1');
        out.values.push_back(double(ones) / double(width));
    }
    return out;
}

RunSequence to_runs(const RefSequence& seq) {
    if (!seq.is_binary())
        throw TseError(ErrorCode::kind, "run-length form requires a binary sequence");
    std::vector<Run> runs;
    const std::string& p = seq.payload();
    size_t i = 0;
    while (i < p.size()) {
        if (p[i] == '1') {
            size_t j = i;
            while (j < p.size() && p[j] == '1')
                ++j;
            runs.push_back({int64_t(i) + 1, int64_t(j - i)});
            i = j;
        } else {
            ++i;
        }
    }
    return RunSequence(seq.reference_date(), seq.length(), std::move(runs));
}

RefSequence from_runs(const RunSequence& runs, const std::string& patient_id) {
    std::string payload(size_t(runs.length()), '0');
    for (const Run& r : runs.runs())
        std::fill_n(payload.begin() + size_t(r.start - 1), size_t(r.length), '1');
    return RefSequence(patient_id, InfoKind::medication_exposure, runs.reference_date(),
                       std::move(payload));
}

std::set<char> block_symbols_in(const SequenceBlock& block, const DateWindow& w) {
    std::set<char> out;
    char filler = block.rows().front().alphabet().filler();
    for (const RefSequence& row : block.rows()) {
        auto sub = slice(row, w); // range-checks w against block coverage
        for (char c : sub.payload())
            if (c != filler)
                out.insert(c);
    }
    return out;
}

} // namespace tse
