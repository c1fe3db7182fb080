#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/date.hpp"
#include "core/generate.hpp"
#include "core/ingest.hpp"
#include "core/sequence.hpp"
#include "core/store.hpp"
#include "core/tiav.hpp"

namespace tse {

/// Declarative run configuration. Loaded from a JSON document; any field can
/// be overridden afterwards with a dotted key (overrides win).
struct RunConfig {
    std::optional<Date> study_start;
    std::optional<Date> study_end;

    std::filesystem::path prescriptions_path;
    std::filesystem::path diagnoses_path;
    std::filesystem::path patients_path;     // patient_id,first_data_date
    std::filesystem::path measurements_path; // patient_id,measurement_date
    std::filesystem::path codemap_path;

    UnknownCodePolicy unknown_code_policy = UnknownCodePolicy::skip_with_report;
    std::optional<int64_t> stockpile_cap_days; // nullopt = unbounded carry-forward
    Date plausible_min_release = Date::from_ymd(1900, 1, 1);
    Date plausible_max_release = Date::from_ymd(2100, 12, 31);
    CciWeights weights = CciWeights::default_table();
    EligibilityParams eligibility;
    std::string augmenting_label;
    std::string firstline_label;

    int64_t trend_step = 91;
    int64_t trend_min_window = 365;
    int64_t trend_max_window = 3195;
    int64_t fixed_window_days = 365;

    int64_t covariate_width = 30;
    CovariateSummary covariate_summary = CovariateSummary::count;
    std::vector<std::string> covariate_labels; // empty = every medication label

    std::filesystem::path output_dir = "out";

    // inspect
    std::string inspect_patient;
    std::optional<Date> inspect_from;
    std::optional<Date> inspect_to;
    int64_t inspect_ma_width = 0; // 0 = no moving-average table

    GenParams gen;

    static RunConfig load(const std::filesystem::path& path);
    static RunConfig from_json_text(const std::string& text);

    /// Apply a `key=value` override, e.g. "eligibility.free_pre_days", "inputs.prescriptions".
    void set(const std::string& key, const std::string& value);

    /// Collects all violations for the given subcommand; throws a config
    /// error listing them.
    void validate_for(const std::string& subcommand) const;
};

/// One patient's compiled sequences, ready for derivation.
struct CompiledPatient {
    std::string id;
    int cohort_year = 0;                        // year of the earliest health record
    std::map<std::string, RefSequence> exposures; // by medication label
    std::optional<SequenceBlock> comorbidity;
    std::optional<SequenceBlock> setting;
};

struct CompiledCohort {
    std::map<std::string, CompiledPatient> patients;
    IngestReport report;
};

/// Parse the configured inputs and compile every patient's sequences.
CompiledCohort compile_cohort(const RunConfig& config);

/// Execute one subcommand end to end; returns the text for stdout. Valid
/// names: ingest, build, stats, eligibility, cci-trend, covariates, inspect,
/// generate.
std::string run_command(const std::string& subcommand, const RunConfig& config);

bool is_known_subcommand(const std::string& name);

// file names written inside config.output_dir
inline constexpr const char* kExposureDenseStore = "exposure.dense.tsv";
inline constexpr const char* kExposureRunlengthStore = "exposure.rle.tsv";
inline constexpr const char* kComorbidityStore = "comorbidity.tsv";
inline constexpr const char* kSettingStore = "setting.tsv";

} // namespace tse
