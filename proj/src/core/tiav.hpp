#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/date.hpp"
#include "core/sequence.hpp"

namespace tse {

/// Cohort-selection thresholds. A patient qualifies at an index date t when,
/// over the fixed 365-day years around t, they were
///   1) free of the augmenting medication on >= min_free_days_pre days pre-index,
///   2) on it >= min_on_days days within some exposure_window_days-day window post-index,
///   3) on the first-line medication >= min_firstline_pre / _post days, and
///   4) on both medications the same day >= min_overlap_days days post-index.
struct EligibilityParams {
    int64_t min_free_days_pre = 0;    // criterion 1
    int64_t min_on_days = 0;          // criterion 2, threshold
    int64_t exposure_window_days = 0; // criterion 2, window width
    int64_t min_firstline_pre = 0;    // criterion 3, pre-index
    int64_t min_firstline_post = 0;   // criterion 3, post-index
    int64_t min_overlap_days = 0;     // criterion 4

    static constexpr int64_t year_length = 365;

    /// Throws a parameter error listing every violated bound.
    void validate() const;
};

struct CriterionCheck {
    bool passed = false;
    int64_t measured = 0;
    int64_t required = 0;
    bool operator==(const CriterionCheck&) const = default;
};

/// Measured counts behind the four criteria; criterion 3 carries one check
/// per year.
struct EligibilityChecks {
    CriterionCheck free_pre;        // 1: augmenting-free days, pre-index year
    CriterionCheck exposure_window; // 2: best on-days within the sliding window
    CriterionCheck firstline_pre;   // 3: first-line days, pre-index year
    CriterionCheck firstline_post;  // 3: first-line days, post-index year
    CriterionCheck overlap;         // 4: same-day co-exposure days, post-index

    bool all_passed() const {
        return free_pre.passed && exposure_window.passed && firstline_pre.passed &&
               firstline_post.passed && overlap.passed;
    }
    bool operator==(const EligibilityChecks&) const = default;
};

struct EligibilityResult {
    bool eligible = false;
    std::optional<Date> index_date; // set when eligible
    /// Diagnostics at the index date when eligible, otherwise at the earliest
    /// candidate with full two-year coverage; nullopt when no candidate
    /// qualifies for evaluation at all.
    std::optional<EligibilityChecks> criteria;
    std::optional<Date> evaluated_candidate; // the date `criteria` refers to
    int64_t candidates_with_coverage = 0;
};

/// Dates where the exposure switches 0 -> 1 (including a '1' on the first
/// covered day): the possible initiation dates.
std::vector<Date> candidate_index_dates(const RefSequence& augmenting);

EligibilityResult evaluate_eligibility(const RefSequence& augmenting,
                                       const RefSequence& firstline,
                                       const EligibilityParams& params);

/// Charlson weight table plus the severity hierarchy (mild form dropped when
/// the severe form is present in the same window).
struct CciWeights {
    std::map<char, int> weight; // all 17 category symbols
    bool apply_hierarchy = true;
    // (mild, severe): mild liver / moderate-severe liver, diabetes without /
    // with complication, malignancy / metastatic tumor
    std::vector<std::pair<char, char>> hierarchy = {{'9', 'F'}, {'A', 'B'}, {'E', 'G'}};

    /// Original Charlson weights over the 17 categories: 1 for 1-9 and A,
    /// 2 for B-E, 3 for F, 6 for G and H.
    static CciWeights default_table();

    void validate() const;
};

/// Weighted sum of the distinct comorbidity categories observed in `w`.
int cci(const SequenceBlock& comorbidity, const DateWindow& w, const CciWeights& weights);

/// Count of non-filler 'I'/'O' cells across all rows of the setting block in
/// `w` — the health-service utilization proxy.
int64_t utilization(const SequenceBlock& setting, const DateWindow& w);

struct PatientComorbidity {
    std::string patient_id;
    int cohort_year = 0; // year of the patient's earliest health record
    SequenceBlock comorbidity;
    SequenceBlock setting;
};

struct TrendRow {
    int cohort_year = 0;   // year of the patients' start date
    int report_index = 0;  // step number within the sweep
    int64_t window_days = 0;
    std::optional<Date> report_date; // fixed-window trend only
    double mean_cci = 0.0;
    double median_utilization = 0.0;
    int64_t patient_count = 0;
};

struct TrendTable {
    std::vector<TrendRow> rows;
    std::string to_csv() const;
};

/// Mean CCI (and median utilization) as the measurement window grows from
/// min_len to max_len days, anchored at each patient's start date. Cells
/// without any fully-covered patient are omitted.
TrendTable growing_window_trend(const std::vector<PatientComorbidity>& patients,
                                const CciWeights& weights, int64_t min_len = 365,
                                int64_t max_len = 3195, int64_t step = 91);

/// Mean CCI and median utilization over the fixed-length window ending at
/// each report date (report_start, then every `step` days through
/// report_end).
TrendTable fixed_window_trend(const std::vector<PatientComorbidity>& patients,
                              const CciWeights& weights, Date report_start, Date report_end,
                              int64_t window_len = 365, int64_t step = 91);

struct LookbackWindow {
    Date measurement_date;
    std::optional<DateWindow> window; // [t - width, t - 1]
    std::optional<RefSequence> values;
    std::string flag; // empty when usable; otherwise why the window is unusable
};

/// Fixed-width windows ending the day before each measurement date.
/// Underruns are flagged per date, never silently dropped.
std::vector<LookbackWindow> lookback_windows(const std::vector<Date>& measurement_dates,
                                             int64_t width, const RefSequence& seq);

enum class CovariateSummary { count, fraction };

struct CovariateCell {
    Date measurement_date;
    std::string sequence_name;
    std::optional<double> value;
    std::string flag;
};

/// Exposure summaries over the lookback window before each measurement date,
/// one cell per (date, sequence).
std::vector<CovariateCell>
time_varying_covariates(const std::vector<Date>& measurement_dates,
                        const std::vector<std::pair<std::string, RefSequence>>& sequences,
                        int64_t width, CovariateSummary summary);

std::string covariates_to_csv(const std::vector<CovariateCell>& cells);

} // namespace tse
