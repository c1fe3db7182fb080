#include "core/tiav.hpp"

#include <algorithm>
#include <sstream>

#include "core/error.hpp"
#include "core/text.hpp"

namespace tse {

void EligibilityParams::validate() const {
    std::vector<std::string> bad;
    auto check = [&](int64_t v, int64_t lo, int64_t hi, const char* name) {
        if (v < lo || v > hi)
            bad.push_back(std::string(name) + "=" + std::to_string(v) + " outside [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
    };
    check(min_free_days_pre, 0, year_length, "min_free_days_pre");
    check(exposure_window_days, 0, year_length, "exposure_window_days");
    check(min_on_days, 0, exposure_window_days, "min_on_days");
    check(min_firstline_pre, 0, year_length, "min_firstline_pre");
    check(min_firstline_post, 0, year_length, "min_firstline_post");
    check(min_overlap_days, 0, year_length, "min_overlap_days");
    if (!bad.empty())
        throw TseError(ErrorCode::parameter, "invalid eligibility parameters: " + join(bad, ';'));
}

std::vector<Date> candidate_index_dates(const RefSequence& augmenting) {
    if (!augmenting.is_binary())
        throw TseError(ErrorCode::kind, "candidate index dates require a binary sequence");
    std::vector<Date> out;
    const std::string& p = augmenting.payload();
    for (size_t i = 0; i < p.size(); ++i)
        if (p[i] == '1' && (i == 0 || p[i - 1] == '0'))
            out.push_back(augmenting.reference_date().plus_days(int64_t(i)));
    return out;
}

namespace {

CriterionCheck make_check(int64_t measured, int64_t required) {
    return {measured >= required, measured, required};
}

EligibilityChecks check_criteria(const RefSequence& augmenting, const RefSequence& firstline,
                                 const RefSequence& composite, Date t,
                                 const EligibilityParams& p) {
    const int64_t year = EligibilityParams::year_length;
    DateWindow pre(t.plus_days(-year), t.plus_days(-1));
    DateWindow post(t, t.plus_days(year - 1));

    EligibilityChecks c;
    c.free_pre = make_check(count_symbol(augmenting, '0', pre), p.min_free_days_pre);
    int64_t best = p.exposure_window_days >= 1
                       ? max_ones_in_window(augmenting, p.exposure_window_days, post).count
                       : 0;
    c.exposure_window = make_check(best, p.min_on_days);
    c.firstline_pre = make_check(count_symbol(firstline, '1', pre), p.min_firstline_pre);
    c.firstline_post = make_check(count_symbol(firstline, '1', post), p.min_firstline_post);
    c.overlap = make_check(count_symbol(composite, '1', post), p.min_overlap_days);
    return c;
}

} // namespace

EligibilityResult evaluate_eligibility(const RefSequence& augmenting,
                                       const RefSequence& firstline,
                                       const EligibilityParams& params) {
    params.validate();
    if (!augmenting.is_binary() || !firstline.is_binary())
        throw TseError(ErrorCode::kind, "eligibility requires binary medication sequences");
    if (augmenting.patient_id() != firstline.patient_id())
        throw TseError(ErrorCode::alignment,
                       "eligibility requires sequences of the same patient ('" +
                           augmenting.patient_id() + "' vs '" + firstline.patient_id() + "')");

    const int64_t year = EligibilityParams::year_length;
    EligibilityResult result;
    std::optional<RefSequence> composite; // built once, on the first viable candidate

    for (Date t : candidate_index_dates(augmenting)) {
        DateWindow two_year(t.plus_days(-year), t.plus_days(year - 1));
        if (!augmenting.coverage().contains(two_year) || !firstline.coverage().contains(two_year))
            continue;
        ++result.candidates_with_coverage;
        if (!composite)
            composite = overlap_and(augmenting, firstline);

        auto checks = check_criteria(augmenting, firstline, *composite, t, params);
        if (!result.criteria) { // earliest viable candidate's diagnostics
            result.criteria = checks;
            result.evaluated_candidate = t;
        }
        if (checks.all_passed()) {
            result.eligible = true;
            result.index_date = t;
            result.criteria = checks;
            result.evaluated_candidate = t;
            return result;
        }
    }
    return result;
}

CciWeights CciWeights::default_table() {
    CciWeights w;
    for (char c : std::string_view("123456789A"))
        w.weight[c] = 1;
    for (char c : std::string_view("BCDE"))
        w.weight[c] = 2;
    w.weight['F'] = 3;
    w.weight['G'] = 6;
    w.weight['H'] = 6;
    return w;
}

void CciWeights::validate() const {
    for (char c : kCharlsonSymbols)
        if (!weight.contains(c))
            throw TseError(ErrorCode::config,
                           std::string("CCI weight table is missing symbol '") + c + "'");
    for (auto [mild, severe] : hierarchy)
        if (!weight.contains(mild) || !weight.contains(severe))
            throw TseError(ErrorCode::config, "CCI hierarchy references an unweighted symbol");
}

int cci(const SequenceBlock& comorbidity, const DateWindow& w, const CciWeights& weights) {
    if (comorbidity.kind() != InfoKind::comorbidity)
        throw TseError(ErrorCode::kind, "CCI requires a comorbidity block");
    weights.validate();

    std::set<char> present = block_symbols_in(comorbidity, w);
    if (weights.apply_hierarchy) {
        for (auto [mild, severe] : weights.hierarchy)
            if (present.contains(mild) && present.contains(severe))
                present.erase(mild);
    }
    int total = 0;
    for (char c : present) {
        auto it = weights.weight.find(c);
        if (it == weights.weight.end())
            throw TseError(ErrorCode::structure,
                           std::string("no CCI weight for symbol '") + c + "'");
        total += it->second;
    }
    return total;
}

int64_t utilization(const SequenceBlock& setting, const DateWindow& w) {
    if (setting.kind() != InfoKind::setting)
        throw TseError(ErrorCode::kind, "utilization requires a setting block");
    int64_t total = 0;
    for (const RefSequence& row : setting.rows())
        total += count_symbol(row, 'I', w) + count_symbol(row, 'O', w);
    return total;
}

namespace {

double median(std::vector<int64_t> values) {
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    if (n % 2 == 1)
        return double(values[n / 2]);
    return (double(values[n / 2 - 1]) + double(values[n / 2])) / 2.0;
}

} // namespace

std::string TrendTable::to_csv() const {
    std::ostringstream os;
    os << "cohort_year,report_index,window_days,report_date,mean_cci,median_utilization,"
          "patient_count\n";
    for (const TrendRow& r : rows) {
        os << r.cohort_year << ',' << r.report_index << ',' << r.window_days << ','
           << (r.report_date ? r.report_date->to_string() : std::string()) << ','
           << format_number(r.mean_cci) << ',' << format_number(r.median_utilization) << ','
           << r.patient_count << '\n';
    }
    return os.str();
}

TrendTable growing_window_trend(const std::vector<PatientComorbidity>& patients,
                                const CciWeights& weights, int64_t min_len, int64_t max_len,
                                int64_t step) {
    if (step < 1 || min_len < 1 || max_len < min_len)
        throw TseError(ErrorCode::parameter, "trend sweep requires step >= 1 and min <= max");
    weights.validate();

    std::map<int, std::vector<const PatientComorbidity*>> cohorts;
    for (const auto& p : patients)
        cohorts[p.cohort_year].push_back(&p);

    TrendTable table;
    for (const auto& [year, members] : cohorts) {
        int index = 0;
        for (int64_t len = min_len; len <= max_len; len += step, ++index) {
            double cci_sum = 0.0;
            std::vector<int64_t> utils;
            for (const PatientComorbidity* p : members) {
                if (p->comorbidity.length() < len)
                    continue;
                Date start = p->comorbidity.reference_date();
                DateWindow w(start, start.plus_days(len - 1));
                cci_sum += cci(p->comorbidity, w, weights);
                utils.push_back(utilization(p->setting, w));
            }
            if (utils.empty())
                continue;
            table.rows.push_back({year, index, len, std::nullopt,
                                  cci_sum / double(utils.size()), median(utils),
                                  int64_t(utils.size())});
        }
    }
    return table;
}

TrendTable fixed_window_trend(const std::vector<PatientComorbidity>& patients,
                              const CciWeights& weights, Date report_start, Date report_end,
                              int64_t window_len, int64_t step) {
    if (step < 1 || window_len < 1)
        throw TseError(ErrorCode::parameter, "trend requires step >= 1 and window_len >= 1");
    if (report_end < report_start)
        throw TseError(ErrorCode::parameter, "report end precedes report start");
    weights.validate();

    std::map<int, std::vector<const PatientComorbidity*>> cohorts;
    for (const auto& p : patients)
        cohorts[p.cohort_year].push_back(&p);

    TrendTable table;
    for (const auto& [year, members] : cohorts) {
        int index = 0;
        for (Date r = report_start; r <= report_end; r = r.plus_days(step), ++index) {
            DateWindow w(r.plus_days(-(window_len - 1)), r);
            double cci_sum = 0.0;
            std::vector<int64_t> utils;
            for (const PatientComorbidity* p : members) {
                if (!p->comorbidity.coverage().contains(w))
                    continue;
                cci_sum += cci(p->comorbidity, w, weights);
                utils.push_back(utilization(p->setting, w));
            }
            if (utils.empty())
                continue;
            table.rows.push_back({year, index, window_len, r, cci_sum / double(utils.size()),
                                  median(utils), int64_t(utils.size())});
        }
    }
    return table;
}

std::vector<LookbackWindow> lookback_windows(const std::vector<Date>& measurement_dates,
                                             int64_t width, const RefSequence& seq) {
    if (width < 1)
        throw TseError(ErrorCode::parameter, "lookback width must be >= 1");
    std::vector<LookbackWindow> out;
    out.reserve(measurement_dates.size());
    for (Date t : measurement_dates) {
        LookbackWindow lw;
        lw.measurement_date = t;
        if (!seq.coverage().contains(t)) {
            lw.flag = "outside-coverage";
        } else if (t - seq.reference_date() < width) {
            lw.flag = "window-underrun"; // would reach before the reference date
        } else {
            DateWindow w(t.plus_days(-width), t.plus_days(-1));
            lw.window = w;
            lw.values = slice(seq, w);
        }
        out.push_back(std::move(lw));
    }
    return out;
}

std::vector<CovariateCell>
time_varying_covariates(const std::vector<Date>& measurement_dates,
                        const std::vector<std::pair<std::string, RefSequence>>& sequences,
                        int64_t width, CovariateSummary summary) {
    // one row of cells per measurement date, one column per sequence
    std::vector<std::vector<LookbackWindow>> windows;
    for (const auto& [name, seq] : sequences) {
        if (!seq.is_binary())
            throw TseError(ErrorCode::kind, "covariate sequence '" + name + "' must be binary");
        windows.push_back(lookback_windows(measurement_dates, width, seq));
    }

    std::vector<CovariateCell> cells;
    for (size_t d = 0; d < measurement_dates.size(); ++d) {
        for (size_t s = 0; s < sequences.size(); ++s) {
            const LookbackWindow& lw = windows[s][d];
            CovariateCell cell;
            cell.measurement_date = lw.measurement_date;
            cell.sequence_name = sequences[s].first;
            cell.flag = lw.flag;
            if (lw.window) {
                int64_t ones = count_symbol(sequences[s].second, '1', *lw.window);
                cell.value = summary == CovariateSummary::count ? double(ones)
                                                                : double(ones) / double(width);
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

std::string covariates_to_csv(const std::vector<CovariateCell>& cells) {
    std::ostringstream os;
    os << "measurement_date,sequence,value,status\n";
    for (const auto& c : cells) {
        os << c.measurement_date.to_string() << ',' << c.sequence_name << ','
           << (c.value ? format_number(*c.value) : std::string()) << ','
           << (c.flag.empty() ? "ok" : c.flag) << '\n';
    }
    return os.str();
}

} // namespace tse
