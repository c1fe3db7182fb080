#include "core/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/text.hpp"

namespace tse {

namespace fs = std::filesystem;
using nlohmann::json;

CodeMapping CodeMapping::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw TseError(ErrorCode::io, "cannot open code mapping file " + path.string());

    std::string line;
    if (!std::getline(in, line))
        throw TseError(ErrorCode::parse, "code mapping file " + path.string() + " is empty");
    auto header = split(trim(line), ',');
    if (header != std::vector<std::string>{"code", "symbol"})
        throw TseError(ErrorCode::parse, "code mapping header must be 'code,symbol' in " +
                                             path.string() + ", got '" + trim(line) + "'");

    std::vector<std::pair<std::string, char>> pairs;
    int64_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty())
            continue;
        auto fields = split(t, ',');
        if (fields.size() != 2 || trim(fields[1]).size() != 1)
            throw TseError(ErrorCode::parse, "bad code mapping row at " + path.string() + ":" +
                                                 std::to_string(line_no) + ": '" + t + "'");
        pairs.emplace_back(trim(fields[0]), trim(fields[1])[0]);
    }
    return from_pairs(std::move(pairs));
}

CodeMapping CodeMapping::from_pairs(std::vector<std::pair<std::string, char>> pairs) {
    CodeMapping m;
    for (auto& [code, symbol] : pairs) {
        if (kCharlsonSymbols.find(symbol) == std::string_view::npos)
            throw TseError(ErrorCode::structure,
                           std::string("code mapping target '") + symbol + "' for code '" + code +
                               "' is not a Charlson category symbol");
        auto [it, inserted] = m.map_.emplace(std::move(code), symbol);
        if (!inserted && it->second != symbol)
            throw TseError(ErrorCode::structure,
                           "code '" + it->first + "' mapped to two different symbols");
    }
    return m;
}

std::optional<char> CodeMapping::lookup(const std::string& raw_code) const {
    auto it = map_.find(raw_code);
    if (it == map_.end())
        return std::nullopt;
    return it->second;
}

void IngestReport::merge(const IngestReport& other) {
    prescription_rows_total += other.prescription_rows_total;
    prescription_rows_accepted += other.prescription_rows_accepted;
    diagnosis_rows_total += other.diagnosis_rows_total;
    diagnosis_rows_accepted += other.diagnosis_rows_accepted;
    patient_rows_total += other.patient_rows_total;
    patient_rows_accepted += other.patient_rows_accepted;
    unknown_codes_skipped += other.unknown_codes_skipped;
    fills_after_end_ignored += other.fills_after_end_ignored;
    diagnoses_out_of_range += other.diagnoses_out_of_range;
    duplicate_diagnoses_deduped += other.duplicate_diagnoses_deduped;
    setting_conflicts_inpatient_kept += other.setting_conflicts_inpatient_kept;
    excluded_patients.insert(excluded_patients.end(), other.excluded_patients.begin(),
                             other.excluded_patients.end());
    rejected.insert(rejected.end(), other.rejected.begin(), other.rejected.end());
}

std::string IngestReport::text() const {
    std::ostringstream os;
    os << "ingest report\n";
    os << "  prescription rows: " << prescription_rows_accepted << " accepted / "
       << prescription_rows_total << " total\n";
    os << "  diagnosis rows:    " << diagnosis_rows_accepted << " accepted / "
       << diagnosis_rows_total << " total\n";
    os << "  patient rows:      " << patient_rows_accepted << " accepted / " << patient_rows_total
       << " total\n";
    os << "  unknown codes skipped:          " << unknown_codes_skipped << "\n";
    os << "  fills after study end ignored:  " << fills_after_end_ignored << "\n";
    os << "  diagnoses outside range:        " << diagnoses_out_of_range << "\n";
    os << "  duplicate diagnoses deduped:    " << duplicate_diagnoses_deduped << "\n";
    os << "  setting conflicts (kept 'I'):   " << setting_conflicts_inpatient_kept << "\n";
    os << "  excluded patients: " << excluded_patients.size();
    for (const auto& p : excluded_patients)
        os << " " << p;
    os << "\n";
    os << "  rejected rows: " << rejected.size() << "\n";
    for (const auto& r : rejected)
        os << "    " << r.file << ":" << r.line_no << ": " << r.reason << "\n";
    return os.str();
}

std::string IngestReport::to_json() const {
    json j;
    j["prescription_rows_total"] = prescription_rows_total;
    j["prescription_rows_accepted"] = prescription_rows_accepted;
    j["diagnosis_rows_total"] = diagnosis_rows_total;
    j["diagnosis_rows_accepted"] = diagnosis_rows_accepted;
    j["patient_rows_total"] = patient_rows_total;
    j["patient_rows_accepted"] = patient_rows_accepted;
    j["unknown_codes_skipped"] = unknown_codes_skipped;
    j["fills_after_end_ignored"] = fills_after_end_ignored;
    j["diagnoses_out_of_range"] = diagnoses_out_of_range;
    j["duplicate_diagnoses_deduped"] = duplicate_diagnoses_deduped;
    j["setting_conflicts_inpatient_kept"] = setting_conflicts_inpatient_kept;
    j["excluded_patients"] = excluded_patients;
    j["rejected"] = json::array();
    for (const auto& r : rejected)
        j["rejected"].push_back({{"file", r.file}, {"line", r.line_no}, {"reason", r.reason}});
    return j.dump(2) + "\n";
}

Date resolve_reference_date(Date study_start, Date first_data_date) {
    return max(study_start, first_data_date);
}

std::optional<char> map_code(const std::string& raw_code, const CodeMapping& mapping,
                             UnknownCodePolicy policy, IngestReport* report) {
    auto symbol = mapping.lookup(raw_code);
    if (symbol)
        return symbol;
    if (policy == UnknownCodePolicy::error)
        throw TseError(ErrorCode::parse, "unknown diagnosis code '" + raw_code + "'");
    if (report)
        ++report->unknown_codes_skipped;
    return std::nullopt;
}

// --- file parsing -----------------------------------------------------------

namespace {

struct Reader {
    std::ifstream in;
    std::string file;
    int64_t line_no = 0;

    Reader(const fs::path& path) : in(path), file(path.string()) {
        if (!in)
            throw TseError(ErrorCode::io, "cannot open input file " + file);
    }

    bool next(std::string& line) {
        while (std::getline(in, line)) {
            ++line_no;
            line = trim(line);
            if (!line.empty())
                return true;
        }
        return false;
    }

    void expect_header(const std::vector<std::string>& expected) {
        std::string line;
        if (!next(line) || split(line, ',') != expected)
            throw TseError(ErrorCode::parse, file + ":1: expected header '" +
                                                 join(expected, ',') + "', got '" + line + "'");
    }

    std::string context() const { return file + ":" + std::to_string(line_no); }
};

bool parse_int(const std::string& s, int64_t& out) {
    auto* first = s.data();
    auto [p, ec] = std::from_chars(first, first + s.size(), out);
    return ec == std::errc{} && p == first + s.size() && !s.empty();
}

} // namespace

std::vector<PrescriptionEvent> parse_prescriptions(const fs::path& path,
                                                   const IngestConfig& config,
                                                   IngestReport& report) {
    Reader r(path);
    r.expect_header({"patient_id", "medication_id", "release_date", "days_supply"});

    std::vector<PrescriptionEvent> events;
    std::string line;
    while (r.next(line)) {
        ++report.prescription_rows_total;
        auto f = split(line, ',');
        if (f.size() != 4) {
            report.rejected.push_back({r.file, r.line_no, "expected 4 fields, got " +
                                                              std::to_string(f.size())});
            continue;
        }
        for (auto& x : f)
            x = trim(x);
        if (f[0].empty() || f[1].empty()) {
            report.rejected.push_back({r.file, r.line_no, "empty patient_id or medication_id"});
            continue;
        }
        Date release = Date::parse_or_throw(f[2], r.context()); // hard error by contract
        int64_t supply = 0;
        if (!parse_int(f[3], supply)) {
            report.rejected.push_back({r.file, r.line_no, "days_supply '" + f[3] + "' is not an integer"});
            continue;
        }
        if (supply < 1) {
            report.rejected.push_back({r.file, r.line_no, "days_supply must be >= 1, got " + f[3]});
            continue;
        }
        if (release < config.plausible_min || release > config.plausible_max) {
            report.rejected.push_back(
                {r.file, r.line_no, "release_date " + f[2] + " outside plausibility range"});
            continue;
        }
        events.push_back({f[0], f[1], release, supply});
        ++report.prescription_rows_accepted;
    }
    return events;
}

std::vector<DiagnosisEvent> parse_diagnoses(const fs::path& path, const IngestConfig& config,
                                            const CodeMapping* mapping, IngestReport& report) {
    Reader r(path);
    std::string line;
    if (!r.next(line))
        throw TseError(ErrorCode::parse, r.file + ":1: missing header");
    auto header = split(line, ',');
    bool premapped;
    if (header == std::vector<std::string>{"patient_id", "diagnosis_date", "code", "setting"}) {
        premapped = false;
        if (!mapping)
            throw TseError(ErrorCode::config,
                           r.file + " carries raw codes but no code mapping is configured");
    } else if (header ==
               std::vector<std::string>{"patient_id", "diagnosis_date", "category", "setting"}) {
        premapped = true;
    } else {
        throw TseError(ErrorCode::parse,
                       r.file + ":1: expected 'patient_id,diagnosis_date,{code|category},setting'");
    }

    std::vector<DiagnosisEvent> events;
    while (r.next(line)) {
        ++report.diagnosis_rows_total;
        auto f = split(line, ',');
        if (f.size() != 4) {
            report.rejected.push_back({r.file, r.line_no, "expected 4 fields, got " +
                                                              std::to_string(f.size())});
            continue;
        }
        for (auto& x : f)
            x = trim(x);
        if (f[0].empty()) {
            report.rejected.push_back({r.file, r.line_no, "empty patient_id"});
            continue;
        }
        Date when = Date::parse_or_throw(f[1], r.context());
        if (f[3].size() != 1 || (f[3][0] != 'I' && f[3][0] != 'O')) {
            report.rejected.push_back({r.file, r.line_no, "setting must be I or O, got '" + f[3] + "'"});
            continue;
        }
        char category;
        if (premapped) {
            if (f[2].size() != 1 || kCharlsonSymbols.find(f[2][0]) == std::string_view::npos) {
                report.rejected.push_back(
                    {r.file, r.line_no, "category '" + f[2] + "' is not a Charlson symbol"});
                continue;
            }
            category = f[2][0];
        } else {
            auto mapped = map_code(f[2], *mapping, config.unknown_code_policy, &report);
            if (!mapped)
                continue; // counted as unknown_codes_skipped
            category = *mapped;
        }
        events.push_back({f[0], when, category, f[3][0]});
        ++report.diagnosis_rows_accepted;
    }
    return events;
}

std::map<std::string, Date> parse_patients(const fs::path& path, IngestReport& report) {
    Reader r(path);
    r.expect_header({"patient_id", "first_data_date"});
    std::map<std::string, Date> out;
    std::string line;
    while (r.next(line)) {
        ++report.patient_rows_total;
        auto f = split(line, ',');
        if (f.size() != 2 || trim(f[0]).empty()) {
            report.rejected.push_back({r.file, r.line_no, "expected patient_id,first_data_date"});
            continue;
        }
        Date first = Date::parse_or_throw(trim(f[1]), r.context());
        out[trim(f[0])] = first;
        ++report.patient_rows_accepted;
    }
    return out;
}

std::map<std::string, std::vector<Date>> parse_measurements(const fs::path& path,
                                                            IngestReport& report) {
    Reader r(path);
    r.expect_header({"patient_id", "measurement_date"});
    std::map<std::string, std::vector<Date>> out;
    std::string line;
    while (r.next(line)) {
        auto f = split(line, ',');
        if (f.size() != 2 || trim(f[0]).empty()) {
            report.rejected.push_back({r.file, r.line_no, "expected patient_id,measurement_date"});
            continue;
        }
        out[trim(f[0])].push_back(Date::parse_or_throw(trim(f[1]), r.context()));
    }
    for (auto& [id, dates] : out)
        std::sort(dates.begin(), dates.end());
    return out;
}

// --- sequence building --------------------------------------------------------

RefSequence build_exposure(std::vector<PrescriptionEvent> fills, Date reference_date,
                           Date end_date, IngestReport* report,
                           std::optional<int64_t> stockpile_cap_days) {
    if (end_date < reference_date)
        throw TseError(ErrorCode::parameter, "exposure end date precedes reference date");
    if (stockpile_cap_days && *stockpile_cap_days < 1)
        throw TseError(ErrorCode::parameter, "stockpile cap must be >= 1 day when set");
    for (const auto& f : fills)
        if (f.days_supply < 1)
            throw TseError(ErrorCode::structure, "days_supply must be >= 1");

    std::stable_sort(fills.begin(), fills.end(),
                     [](const auto& a, const auto& b) { return a.release_date < b.release_date; });

    std::string payload(size_t(end_date - reference_date + 1), '0');
    std::optional<Date> frontier; // last exposed day so far
    for (const auto& fill : fills) {
        if (fill.release_date > end_date) {
            if (report)
                ++report->fills_after_end_ignored;
            continue;
        }
        Date start = fill.release_date;
        Date stop;
        if (stockpile_cap_days) {
            // supply on hand at release, clamped to the cap; the clamped
            // total is never below what is already held, so the frontier
            // only moves forward
            int64_t held = frontier ? std::max<int64_t>(*frontier - fill.release_date + 1, 0) : 0;
            int64_t stock = std::min(held + fill.days_supply, *stockpile_cap_days);
            stop = fill.release_date.plus_days(stock - 1);
        } else {
            if (frontier && frontier->plus_days(1) > start)
                start = frontier->plus_days(1); // unused supply carried forward
            stop = start.plus_days(fill.days_supply - 1);
        }
        frontier = stop;

        Date lo = max(start, reference_date);
        Date hi = min(stop, end_date);
        if (hi < lo)
            continue;
        size_t off = size_t(lo - reference_date);
        std::fill_n(payload.begin() + off, size_t(hi - lo + 1), '1');
    }
    return RefSequence(fills.empty() ? "" : fills.front().patient_id,
                       InfoKind::medication_exposure, reference_date, std::move(payload));
}

std::pair<SequenceBlock, SequenceBlock>
build_comorbidity_block(const std::vector<DiagnosisEvent>& diagnoses, Date start_date,
                        Date end_date, IngestReport* report, const std::string& patient_id_hint) {
    if (end_date < start_date)
        throw TseError(ErrorCode::parameter, "block end date precedes start date");

    struct Cell {
        char setting;
        bool both_settings = false;
    };
    // per date: category -> resolved setting, deduplicated, inpatient over outpatient
    std::map<Date, std::map<char, Cell>> by_date;
    std::string patient_id = patient_id_hint;
    for (const auto& d : diagnoses) {
        if (kCharlsonSymbols.find(d.category) == std::string_view::npos)
            throw TseError(ErrorCode::structure, std::string("unknown category symbol '") +
                                                     d.category + "' for patient " + d.patient_id);
        if (d.setting != 'I' && d.setting != 'O')
            throw TseError(ErrorCode::structure,
                           std::string("setting must be I or O, got '") + d.setting + "'");
        if (patient_id.empty())
            patient_id = d.patient_id;
        if (d.diagnosis_date < start_date || d.diagnosis_date > end_date) {
            if (report)
                ++report->diagnoses_out_of_range;
            continue;
        }
        auto [it, inserted] = by_date[d.diagnosis_date].emplace(d.category, Cell{d.setting});
        if (!inserted) {
            if (report)
                ++report->duplicate_diagnoses_deduped;
            if (it->second.setting != d.setting)
                it->second.both_settings = true;
            if (d.setting == 'I')
                it->second.setting = 'I';
        }
    }
    if (report)
        for (const auto& [date, cats] : by_date)
            for (const auto& [category, cell] : cats)
                if (cell.both_settings)
                    ++report->setting_conflicts_inpatient_kept;

    size_t rows = 1;
    for (const auto& [date, cats] : by_date)
        rows = std::max(rows, cats.size());

    size_t len = size_t(end_date - start_date + 1);
    std::vector<std::string> comorbidity_rows(rows, std::string(len, '.'));
    std::vector<std::string> setting_rows(rows, std::string(len, '.'));
    for (const auto& [date, cats] : by_date) {
        size_t pos = size_t(date - start_date);
        size_t row = 0;
        // std::map iterates categories in alphabet (ASCII) order already
        for (const auto& [category, cell] : cats) {
            comorbidity_rows[row][pos] = category;
            setting_rows[row][pos] = cell.setting;
            ++row;
        }
    }

    std::vector<RefSequence> cseq, sseq;
    for (size_t r = 0; r < rows; ++r) {
        cseq.emplace_back(patient_id, InfoKind::comorbidity, start_date, comorbidity_rows[r]);
        sseq.emplace_back(patient_id, InfoKind::setting, start_date, setting_rows[r]);
    }
    return {SequenceBlock::from_rows(std::move(cseq)), SequenceBlock::from_rows(std::move(sseq))};
}

} // namespace tse
