#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "core/date.hpp"
#include "core/ingest.hpp"

namespace tse {

/// Knobs for the seeded desk-scale cohort generator used by fixtures and
/// end-to-end runs. Same seed, same data.
struct GenParams {
    uint64_t seed = 20070101;
    int cohort_count = 3;          // consecutive start years
    int first_cohort_year = 2007;  // also the study start year
    int patients_per_cohort = 12;
    int study_years = 9;           // study period length from Jan 1 of the first year
    double first_year_diagnosis_rate = 1.0; // mean diagnoses per patient-year
    double steady_diagnosis_rate = 8.0;
    bool sparse_first_year = true; // low utilization while new to the system
};

struct GeneratedDiagnosisRow {
    std::string patient_id;
    Date date;
    std::string code; // raw code, resolved through the generated mapping
    char setting;
};

struct GeneratedData {
    Date study_start;
    Date study_end;
    std::vector<PrescriptionEvent> prescriptions;
    std::vector<GeneratedDiagnosisRow> diagnoses;
    std::map<std::string, Date> first_data_dates;
    std::map<std::string, std::vector<Date>> measurements;
    std::vector<std::pair<std::string, char>> code_map; // raw code -> category
};

GeneratedData generate_cohorts(const GenParams& params);

/// Write the generated data as the pipeline's input files plus a ready-made
/// run config (config.json) pointing at them.
void write_generated_files(const GeneratedData& data, const std::filesystem::path& dir);

} // namespace tse
