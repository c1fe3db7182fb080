#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/date.hpp"
#include "core/sequence.hpp"

namespace tse {

struct PrescriptionEvent {
    std::string patient_id;
    std::string medication_id;
    Date release_date;
    int64_t days_supply = 0; // >= 1
    bool operator==(const PrescriptionEvent&) const = default;
};

struct DiagnosisEvent {
    std::string patient_id;
    Date diagnosis_date;
    char category = 0; // Charlson category symbol, 1-9 / A-H
    char setting = 0;  // 'I' or 'O'
    bool operator==(const DiagnosisEvent&) const = default;
};

enum class UnknownCodePolicy {
    error,            // halt ingest on the first unmapped code
    skip_with_report, // drop the row, count it
};

/// Raw diagnosis code -> Charlson category symbol. The code lists themselves
/// are study configuration; they are loaded, never hardcoded.
class CodeMapping {
public:
    static CodeMapping load(const std::filesystem::path& path);
    static CodeMapping from_pairs(std::vector<std::pair<std::string, char>> pairs);

    std::optional<char> lookup(const std::string& raw_code) const;
    size_t size() const { return map_.size(); }

private:
    std::map<std::string, char> map_;
};

struct IngestConfig {
    Date study_start;
    Date study_end;
    UnknownCodePolicy unknown_code_policy = UnknownCodePolicy::skip_with_report;
    // plausibility bounds for prescription release dates
    Date plausible_min = Date::from_ymd(1900, 1, 1);
    Date plausible_max = Date::from_ymd(2100, 12, 31);
};

struct RejectedRow {
    std::string file;
    int64_t line_no = 0;
    std::string reason;
};

/// Per-run ingest accounting; merges associatively so per-patient work can be
/// compiled independently.
struct IngestReport {
    int64_t prescription_rows_total = 0;
    int64_t prescription_rows_accepted = 0;
    int64_t diagnosis_rows_total = 0;
    int64_t diagnosis_rows_accepted = 0;
    int64_t patient_rows_total = 0;
    int64_t patient_rows_accepted = 0;
    int64_t unknown_codes_skipped = 0;
    int64_t fills_after_end_ignored = 0;
    int64_t diagnoses_out_of_range = 0;
    int64_t duplicate_diagnoses_deduped = 0;
    int64_t setting_conflicts_inpatient_kept = 0;
    std::vector<std::string> excluded_patients; // first data date after study end
    std::vector<RejectedRow> rejected;

    void merge(const IngestReport& other);
    std::string text() const;
    std::string to_json() const;
};

// --- operations -------------------------------------------------------------

/// The later of study start and the patient's first data availability.
Date resolve_reference_date(Date study_start, Date first_data_date);

std::optional<char> map_code(const std::string& raw_code, const CodeMapping& mapping,
                             UnknownCodePolicy policy, IngestReport* report);

/// Comma-delimited, header-bearing input files. Malformed rows land in the
/// report with their line numbers; an unreadable file, a wrong header or an
/// unparseable date is a hard error.
std::vector<PrescriptionEvent> parse_prescriptions(const std::filesystem::path& path,
                                                   const IngestConfig& config,
                                                   IngestReport& report);

/// Diagnosis files carry either a raw `code` column (resolved through
/// `mapping`) or a pre-mapped `category` column (mapping may be null).
std::vector<DiagnosisEvent> parse_diagnoses(const std::filesystem::path& path,
                                            const IngestConfig& config,
                                            const CodeMapping* mapping, IngestReport& report);

/// patient_id -> first_data_date, from a header-bearing patients file.
std::map<std::string, Date> parse_patients(const std::filesystem::path& path,
                                           IngestReport& report);

/// patient_id -> outcome measurement dates.
std::map<std::string, std::vector<Date>> parse_measurements(const std::filesystem::path& path,
                                                            IngestReport& report);

/// Compile one patient's fills of one medication into a daily exposure
/// sequence over [reference_date, end_date].
///
/// Stockpiling: fills are processed in release order against an exposure
/// frontier; a refill that arrives while supply remains starts the day after
/// the frontier, so unused supply is carried forward. Fills released before
/// reference_date are consumed from their release date on; only the days
/// that survive past reference_date appear in the payload. Fills released
/// after end_date are ignored and counted in the report.
///
/// `stockpile_cap_days` bounds the accumulated supply a patient can hold on
/// a release day (nullopt = unbounded carry-forward).
RefSequence build_exposure(std::vector<PrescriptionEvent> fills, Date reference_date,
                           Date end_date, IngestReport* report = nullptr,
                           std::optional<int64_t> stockpile_cap_days = std::nullopt);

/// Compile one patient's diagnoses into an aligned pair of blocks covering
/// [start_date, end_date]: category symbols in alphabet order across rows,
/// and the parallel setting block whose cell at the same row/position holds
/// that diagnosis's 'I'/'O'. Duplicate (date, category) pairs are
/// deduplicated; on an I/O conflict the inpatient setting is kept.
/// `patient_id` labels the block when the diagnosis list is empty.
std::pair<SequenceBlock, SequenceBlock>
build_comorbidity_block(const std::vector<DiagnosisEvent>& diagnoses, Date start_date,
                        Date end_date, IngestReport* report = nullptr,
                        const std::string& patient_id = "");

} // namespace tse
