#include "core/generate.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <json.hpp>

#include "core/error.hpp"

namespace tse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// three raw codes per Charlson category
std::vector<std::pair<std::string, char>> make_code_map() {
    std::vector<std::pair<std::string, char>> out;
    for (size_t i = 0; i < kCharlsonSymbols.size(); ++i)
        for (int k = 0; k < 3; ++k)
            out.emplace_back("C" + std::to_string(100 + int(i) * 3 + k), kCharlsonSymbols[i]);
    return out;
}

Date random_date_in_year(std::mt19937_64& rng, int year, Date not_before) {
    Date jan1 = Date::from_ymd(year, 1, 1);
    Date dec31 = Date::from_ymd(year, 12, 31);
    Date lo = max(jan1, not_before);
    std::uniform_int_distribution<int64_t> dist(0, dec31 - lo);
    return lo.plus_days(dist(rng));
}

} // namespace

GeneratedData generate_cohorts(const GenParams& params) {
    if (params.cohort_count < 1 || params.patients_per_cohort < 1 || params.study_years < 2)
        throw TseError(ErrorCode::parameter, "generator needs >= 1 cohort, >= 1 patient, >= 2 years");

    std::mt19937_64 rng(params.seed);
    GeneratedData data;
    data.study_start = Date::from_ymd(params.first_cohort_year, 1, 1);
    data.study_end =
        Date::from_ymd(params.first_cohort_year + params.study_years - 1, 12, 31);
    data.code_map = make_code_map();

    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::uniform_int_distribution<int> setting_die(0, 9);
    std::uniform_int_distribution<int> code_variant(0, 2);
    std::uniform_int_distribution<size_t> category_die(0, kCharlsonSymbols.size() - 1);

    for (int c = 0; c < params.cohort_count; ++c) {
        int year = params.first_cohort_year + c;
        for (int i = 0; i < params.patients_per_cohort; ++i) {
            char id_buf[32];
            std::snprintf(id_buf, sizeof id_buf, "P%04d-%02d", year, i + 1);
            std::string pid = id_buf;

            Date first_data = random_date_in_year(rng, year, data.study_start);
            data.first_data_dates[pid] = first_data;

            // first-line medication: steady ~monthly refills for several years
            int64_t horizon_days = data.study_end - first_data;
            int64_t fl_days = std::min<int64_t>(horizon_days, 365 * (2 + int64_t(uniform(rng) * 5)));
            Date fill = first_data.plus_days(int64_t(uniform(rng) * 60));
            Date fl_stop = min(fill.plus_days(fl_days), data.study_end);
            while (fill <= fl_stop) {
                data.prescriptions.push_back({pid, "FL", fill, 30});
                // mostly on-time refills, occasional early refill or gap
                double u = uniform(rng);
                int64_t gap = u < 0.2 ? 25 : (u < 0.9 ? 30 : 45 + int64_t(uniform(rng) * 60));
                fill = fill.plus_days(gap);
            }

            // augmenting medication: starts 1-3 years in (some patients never)
            if (uniform(rng) < 0.85) {
                Date aug_start = first_data.plus_days(365 + int64_t(uniform(rng) * 730));
                if (aug_start.plus_days(180) < data.study_end) {
                    int fills = 6 + int(uniform(rng) * 18);
                    Date f = aug_start;
                    for (int n = 0; n < fills && f <= data.study_end; ++n) {
                        data.prescriptions.push_back({pid, "AUG", f, 30});
                        double u = uniform(rng);
                        int64_t gap = u < 0.3 ? 26 : (u < 0.92 ? 30 : 40);
                        f = f.plus_days(gap);
                    }
                }
            }

            // a medication outside the study pair, for inspect realism
            if (uniform(rng) < 0.3)
                data.prescriptions.push_back(
                    {pid, "OTH", first_data.plus_days(int64_t(uniform(rng) * 300)), 90});

            // diagnoses: sparse during the first year in the system, steady after
            Date sparse_end = min(first_data.plus_days(364), data.study_end);
            auto emit_diagnoses = [&](Date lo, Date hi, double per_year) {
                if (hi < lo || per_year <= 0.0)
                    return;
                int64_t span = hi - lo + 1;
                double expected = per_year * double(span) / 365.0;
                std::poisson_distribution<int> n_dist(expected);
                int n = n_dist(rng);
                std::uniform_int_distribution<int64_t> day(0, span - 1);
                for (int k = 0; k < n; ++k) {
                    Date when = lo.plus_days(day(rng));
                    size_t cat = category_die(rng);
                    std::string code = "C" + std::to_string(100 + int(cat) * 3 + code_variant(rng));
                    char setting = setting_die(rng) < 3 ? 'I' : 'O';
                    data.diagnoses.push_back({pid, when, code, setting});
                }
            };
            double first_rate = params.sparse_first_year ? params.first_year_diagnosis_rate
                                                         : params.steady_diagnosis_rate;
            emit_diagnoses(first_data, sparse_end, first_rate);
            if (sparse_end < data.study_end)
                emit_diagnoses(sparse_end.plus_days(1), data.study_end,
                               params.steady_diagnosis_rate);

            // outcome measurement dates, spread over the covered span
            int n_meas = 4;
            for (int k = 0; k < n_meas; ++k) {
                int64_t offset = 100 + int64_t(uniform(rng) * double(std::max<int64_t>(horizon_days - 100, 1)));
                data.measurements[pid].push_back(min(first_data.plus_days(offset), data.study_end));
            }
            auto& meas = data.measurements[pid];
            std::sort(meas.begin(), meas.end());
            meas.erase(std::unique(meas.begin(), meas.end()), meas.end());
        }
    }

    // deterministic file ordering regardless of generation order
    std::stable_sort(data.prescriptions.begin(), data.prescriptions.end(),
                     [](const auto& a, const auto& b) {
                         return std::tie(a.patient_id, a.release_date, a.medication_id) <
                                std::tie(b.patient_id, b.release_date, b.medication_id);
                     });
    std::stable_sort(data.diagnoses.begin(), data.diagnoses.end(),
                     [](const auto& a, const auto& b) {
                         return std::tie(a.patient_id, a.date, a.code) <
                                std::tie(b.patient_id, b.date, b.code);
                     });
    return data;
}

void write_generated_files(const GeneratedData& data, const fs::path& dir) {
    fs::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        if (!out)
            throw TseError(ErrorCode::io, "cannot write " + (dir / name).string());
        return out;
    };

    {
        auto out = open("prescriptions.csv");
        out << "patient_id,medication_id,release_date,days_supply\n";
        for (const auto& p : data.prescriptions)
            out << p.patient_id << ',' << p.medication_id << ',' << p.release_date.to_string()
                << ',' << p.days_supply << '\n';
    }
    {
        auto out = open("diagnoses.csv");
        out << "patient_id,diagnosis_date,code,setting\n";
        for (const auto& d : data.diagnoses)
            out << d.patient_id << ',' << d.date.to_string() << ',' << d.code << ',' << d.setting
                << '\n';
    }
    {
        auto out = open("patients.csv");
        out << "patient_id,first_data_date\n";
        for (const auto& [pid, first] : data.first_data_dates)
            out << pid << ',' << first.to_string() << '\n';
    }
    {
        auto out = open("measurements.csv");
        out << "patient_id,measurement_date\n";
        for (const auto& [pid, dates] : data.measurements)
            for (const auto& d : dates)
                out << pid << ',' << d.to_string() << '\n';
    }
    {
        auto out = open("codemap.csv");
        out << "code,symbol\n";
        for (const auto& [code, symbol] : data.code_map)
            out << code << ',' << symbol << '\n';
    }
    {
        json cfg;
        cfg["study_start"] = data.study_start.to_string();
        cfg["study_end"] = data.study_end.to_string();
        cfg["inputs"] = {{"prescriptions", (dir / "prescriptions.csv").string()},
                         {"diagnoses", (dir / "diagnoses.csv").string()},
                         {"patients", (dir / "patients.csv").string()},
                         {"measurements", (dir / "measurements.csv").string()},
                         {"code_map", (dir / "codemap.csv").string()}};
        cfg["eligibility"] = {{"augmenting", "AUG"},   {"firstline", "FL"},
                              {"free_pre_days", 30},   {"exposure_days", 120},
                              {"exposure_window_days", 365}, {"firstline_pre_days", 60},
                              {"firstline_post_days", 60},   {"overlap_days", 30}};
        auto out = open("config.json");
        out << cfg.dump(2) << "\n";
    }
}

} // namespace tse
