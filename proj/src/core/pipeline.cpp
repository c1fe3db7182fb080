#include "core/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/text.hpp"

namespace tse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int64_t to_int(const std::string& s, const std::string& key) {
    int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
        throw TseError(ErrorCode::config, "value for " + key + " must be an integer, got '" + s + "'");
    return v;
}

double to_double(const std::string& s, const std::string& key) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw TseError(ErrorCode::config, "value for " + key + " must be a number, got '" + s + "'");
    }
}

bool to_bool(const std::string& s, const std::string& key) {
    if (s == "true" || s == "1")
        return true;
    if (s == "false" || s == "0")
        return false;
    throw TseError(ErrorCode::config, "value for " + key + " must be true or false, got '" + s + "'");
}

Date to_date(const std::string& s, const std::string& key) {
    auto d = Date::parse(s);
    if (!d)
        throw TseError(ErrorCode::config, "value for " + key + " must be YYYY-MM-DD, got '" + s + "'");
    return *d;
}

UnknownCodePolicy policy_from(const std::string& s, const std::string& key) {
    if (s == "skip")
        return UnknownCodePolicy::skip_with_report;
    if (s == "error")
        return UnknownCodePolicy::error;
    throw TseError(ErrorCode::config, key + " must be 'skip' or 'error', got '" + s + "'");
}

void expect_keys(const json& j, const std::string& where,
                 const std::set<std::string>& allowed) {
    for (const auto& [key, value] : j.items())
        if (!allowed.contains(key))
            throw TseError(ErrorCode::config, "unknown config key '" +
                                                  (where.empty() ? key : where + "." + key) + "'");
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw TseError(ErrorCode::io, "cannot write " + path.string());
    out << content;
    out.flush();
    if (!out)
        throw TseError(ErrorCode::io, "write failed for " + path.string());
}

} // namespace

RunConfig RunConfig::load(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw TseError(ErrorCode::io, "cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw TseError(ErrorCode::config, "config is not valid JSON");
    if (!j.is_object())
        throw TseError(ErrorCode::config, "config root must be a JSON object");

    expect_keys(j, "", {"study_start", "study_end", "inputs", "unknown_code_policy", "output_dir",
                        "stockpile_cap_days", "plausibility", "cci", "eligibility", "trend",
                        "covariates", "inspect", "generate"});

    RunConfig c;
    if (j.contains("study_start"))
        c.study_start = to_date(j["study_start"].get<std::string>(), "study_start");
    if (j.contains("study_end"))
        c.study_end = to_date(j["study_end"].get<std::string>(), "study_end");
    if (j.contains("output_dir"))
        c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("unknown_code_policy"))
        c.unknown_code_policy =
            policy_from(j["unknown_code_policy"].get<std::string>(), "unknown_code_policy");
    if (j.contains("stockpile_cap_days"))
        c.stockpile_cap_days = j["stockpile_cap_days"].get<int64_t>();
    if (j.contains("plausibility")) {
        const json& p = j["plausibility"];
        expect_keys(p, "plausibility", {"min_release_date", "max_release_date"});
        if (p.contains("min_release_date"))
            c.plausible_min_release =
                to_date(p["min_release_date"].get<std::string>(), "plausibility.min_release_date");
        if (p.contains("max_release_date"))
            c.plausible_max_release =
                to_date(p["max_release_date"].get<std::string>(), "plausibility.max_release_date");
    }

    if (j.contains("inputs")) {
        const json& in = j["inputs"];
        expect_keys(in, "inputs",
                    {"prescriptions", "diagnoses", "patients", "measurements", "code_map"});
        if (in.contains("prescriptions"))
            c.prescriptions_path = in["prescriptions"].get<std::string>();
        if (in.contains("diagnoses"))
            c.diagnoses_path = in["diagnoses"].get<std::string>();
        if (in.contains("patients"))
            c.patients_path = in["patients"].get<std::string>();
        if (in.contains("measurements"))
            c.measurements_path = in["measurements"].get<std::string>();
        if (in.contains("code_map"))
            c.codemap_path = in["code_map"].get<std::string>();
    }

    if (j.contains("cci")) {
        const json& cc = j["cci"];
        expect_keys(cc, "cci", {"hierarchy", "weights"});
        if (cc.contains("hierarchy"))
            c.weights.apply_hierarchy = cc["hierarchy"].get<bool>();
        if (cc.contains("weights"))
            for (const auto& [sym, w] : cc["weights"].items()) {
                if (sym.size() != 1 || kCharlsonSymbols.find(sym[0]) == std::string_view::npos)
                    throw TseError(ErrorCode::config,
                                   "cci.weights key '" + sym + "' is not a category symbol");
                c.weights.weight[sym[0]] = w.get<int>();
            }
    }

    if (j.contains("eligibility")) {
        const json& e = j["eligibility"];
        expect_keys(e, "eligibility",
                    {"augmenting", "firstline", "free_pre_days", "exposure_days",
                     "exposure_window_days", "firstline_pre_days", "firstline_post_days",
                     "overlap_days"});
        if (e.contains("augmenting"))
            c.augmenting_label = e["augmenting"].get<std::string>();
        if (e.contains("firstline"))
            c.firstline_label = e["firstline"].get<std::string>();
        if (e.contains("free_pre_days"))
            c.eligibility.min_free_days_pre = e["free_pre_days"].get<int64_t>();
        if (e.contains("exposure_days"))
            c.eligibility.min_on_days = e["exposure_days"].get<int64_t>();
        if (e.contains("exposure_window_days"))
            c.eligibility.exposure_window_days = e["exposure_window_days"].get<int64_t>();
        if (e.contains("firstline_pre_days"))
            c.eligibility.min_firstline_pre = e["firstline_pre_days"].get<int64_t>();
        if (e.contains("firstline_post_days"))
            c.eligibility.min_firstline_post = e["firstline_post_days"].get<int64_t>();
        if (e.contains("overlap_days"))
            c.eligibility.min_overlap_days = e["overlap_days"].get<int64_t>();
    }

    if (j.contains("trend")) {
        const json& t = j["trend"];
        expect_keys(t, "trend", {"step", "min_window_days", "max_window_days", "fixed_window_days"});
        if (t.contains("step"))
            c.trend_step = t["step"].get<int64_t>();
        if (t.contains("min_window_days"))
            c.trend_min_window = t["min_window_days"].get<int64_t>();
        if (t.contains("max_window_days"))
            c.trend_max_window = t["max_window_days"].get<int64_t>();
        if (t.contains("fixed_window_days"))
            c.fixed_window_days = t["fixed_window_days"].get<int64_t>();
    }

    if (j.contains("covariates")) {
        const json& cv = j["covariates"];
        expect_keys(cv, "covariates", {"width_days", "summary", "sequences"});
        if (cv.contains("width_days"))
            c.covariate_width = cv["width_days"].get<int64_t>();
        if (cv.contains("summary")) {
            std::string s = cv["summary"].get<std::string>();
            if (s != "count" && s != "fraction")
                throw TseError(ErrorCode::config, "covariates.summary must be count or fraction");
            c.covariate_summary =
                s == "count" ? CovariateSummary::count : CovariateSummary::fraction;
        }
        if (cv.contains("sequences"))
            c.covariate_labels = cv["sequences"].get<std::vector<std::string>>();
    }

    if (j.contains("inspect")) {
        const json& i = j["inspect"];
        expect_keys(i, "inspect", {"patient", "from", "to", "moving_average_days"});
        if (i.contains("patient"))
            c.inspect_patient = i["patient"].get<std::string>();
        if (i.contains("from"))
            c.inspect_from = to_date(i["from"].get<std::string>(), "inspect.from");
        if (i.contains("to"))
            c.inspect_to = to_date(i["to"].get<std::string>(), "inspect.to");
        if (i.contains("moving_average_days"))
            c.inspect_ma_width = i["moving_average_days"].get<int64_t>();
    }

    if (j.contains("generate")) {
        const json& g = j["generate"];
        expect_keys(g, "generate",
                    {"seed", "cohorts", "patients_per_cohort", "first_cohort_year", "study_years",
                     "sparse_first_year", "first_year_diagnosis_rate", "steady_diagnosis_rate"});
        if (g.contains("seed"))
            c.gen.seed = g["seed"].get<uint64_t>();
        if (g.contains("cohorts"))
            c.gen.cohort_count = g["cohorts"].get<int>();
        if (g.contains("patients_per_cohort"))
            c.gen.patients_per_cohort = g["patients_per_cohort"].get<int>();
        if (g.contains("first_cohort_year"))
            c.gen.first_cohort_year = g["first_cohort_year"].get<int>();
        if (g.contains("study_years"))
            c.gen.study_years = g["study_years"].get<int>();
        if (g.contains("sparse_first_year"))
            c.gen.sparse_first_year = g["sparse_first_year"].get<bool>();
        if (g.contains("first_year_diagnosis_rate"))
            c.gen.first_year_diagnosis_rate = g["first_year_diagnosis_rate"].get<double>();
        if (g.contains("steady_diagnosis_rate"))
            c.gen.steady_diagnosis_rate = g["steady_diagnosis_rate"].get<double>();
    }
    return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "study_start") {
        study_start = to_date(value, key);
    } else if (key == "study_end") {
        study_end = to_date(value, key);
    } else if (key == "output_dir") {
        output_dir = value;
    } else if (key == "unknown_code_policy") {
        unknown_code_policy = policy_from(value, key);
    } else if (key == "stockpile_cap_days") {
        int64_t v = to_int(value, key);
        stockpile_cap_days = v == 0 ? std::nullopt : std::optional<int64_t>(v);
    } else if (key == "plausibility.min_release_date") {
        plausible_min_release = to_date(value, key);
    } else if (key == "plausibility.max_release_date") {
        plausible_max_release = to_date(value, key);
    } else if (key == "inputs.prescriptions") {
        prescriptions_path = value;
    } else if (key == "inputs.diagnoses") {
        diagnoses_path = value;
    } else if (key == "inputs.patients") {
        patients_path = value;
    } else if (key == "inputs.measurements") {
        measurements_path = value;
    } else if (key == "inputs.code_map") {
        codemap_path = value;
    } else if (key == "cci.hierarchy") {
        weights.apply_hierarchy = to_bool(value, key);
    } else if (key.rfind("cci.weight.", 0) == 0 && key.size() == 12) {
        char sym = key[11];
        if (kCharlsonSymbols.find(sym) == std::string_view::npos)
            throw TseError(ErrorCode::config, "unknown category symbol in '" + key + "'");
        weights.weight[sym] = int(to_int(value, key));
    } else if (key == "eligibility.augmenting") {
        augmenting_label = value;
    } else if (key == "eligibility.firstline") {
        firstline_label = value;
    } else if (key == "eligibility.free_pre_days") {
        eligibility.min_free_days_pre = to_int(value, key);
    } else if (key == "eligibility.exposure_days") {
        eligibility.min_on_days = to_int(value, key);
    } else if (key == "eligibility.exposure_window_days") {
        eligibility.exposure_window_days = to_int(value, key);
    } else if (key == "eligibility.firstline_pre_days") {
        eligibility.min_firstline_pre = to_int(value, key);
    } else if (key == "eligibility.firstline_post_days") {
        eligibility.min_firstline_post = to_int(value, key);
    } else if (key == "eligibility.overlap_days") {
        eligibility.min_overlap_days = to_int(value, key);
    } else if (key == "trend.step") {
        trend_step = to_int(value, key);
    } else if (key == "trend.min_window_days") {
        trend_min_window = to_int(value, key);
    } else if (key == "trend.max_window_days") {
        trend_max_window = to_int(value, key);
    } else if (key == "trend.fixed_window_days") {
        fixed_window_days = to_int(value, key);
    } else if (key == "covariates.width_days") {
        covariate_width = to_int(value, key);
    } else if (key == "covariates.summary") {
        if (value != "count" && value != "fraction")
            throw TseError(ErrorCode::config, "covariates.summary must be count or fraction");
        covariate_summary =
            value == "count" ? CovariateSummary::count : CovariateSummary::fraction;
    } else if (key == "covariates.sequences") {
        covariate_labels.clear();
        for (const auto& s : split(value, ','))
            if (!trim(s).empty())
                covariate_labels.push_back(trim(s));
    } else if (key == "inspect.patient") {
        inspect_patient = value;
    } else if (key == "inspect.from") {
        inspect_from = to_date(value, key);
    } else if (key == "inspect.to") {
        inspect_to = to_date(value, key);
    } else if (key == "inspect.moving_average_days") {
        inspect_ma_width = to_int(value, key);
    } else if (key == "generate.seed") {
        gen.seed = uint64_t(to_int(value, key));
    } else if (key == "generate.cohorts") {
        gen.cohort_count = int(to_int(value, key));
    } else if (key == "generate.patients_per_cohort") {
        gen.patients_per_cohort = int(to_int(value, key));
    } else if (key == "generate.first_cohort_year") {
        gen.first_cohort_year = int(to_int(value, key));
    } else if (key == "generate.study_years") {
        gen.study_years = int(to_int(value, key));
    } else if (key == "generate.sparse_first_year") {
        gen.sparse_first_year = to_bool(value, key);
    } else if (key == "generate.first_year_diagnosis_rate") {
        gen.first_year_diagnosis_rate = to_double(value, key);
    } else if (key == "generate.steady_diagnosis_rate") {
        gen.steady_diagnosis_rate = to_double(value, key);
    } else {
        throw TseError(ErrorCode::config, "unknown config key '" + key + "'");
    }
}

void RunConfig::validate_for(const std::string& subcommand) const {
    std::vector<std::string> bad;
    auto need_study_window = [&] {
        if (!study_start)
            bad.push_back("study_start is required");
        if (!study_end)
            bad.push_back("study_end is required");
        if (study_start && study_end && *study_end < *study_start)
            bad.push_back("study_end precedes study_start");
    };
    auto need_file = [&](const fs::path& p, const char* what, bool required) {
        if (p.empty()) {
            if (required)
                bad.push_back(std::string("inputs.") + what + " is required");
        } else if (!fs::exists(p)) {
            bad.push_back(std::string("inputs.") + what + " does not exist: " + p.string());
        }
    };

    if (subcommand == "ingest" || subcommand == "build") {
        need_study_window();
        if (prescriptions_path.empty() && diagnoses_path.empty())
            bad.push_back("at least one of inputs.prescriptions / inputs.diagnoses is required");
        need_file(prescriptions_path, "prescriptions", false);
        need_file(diagnoses_path, "diagnoses", false);
        need_file(patients_path, "patients", false);
        need_file(codemap_path, "code_map", false);
    } else if (subcommand == "stats") {
        need_file(prescriptions_path, "prescriptions", false);
        need_file(diagnoses_path, "diagnoses", false);
    } else if (subcommand == "eligibility") {
        if (augmenting_label.empty())
            bad.push_back("eligibility.augmenting medication label is required");
        if (firstline_label.empty())
            bad.push_back("eligibility.firstline medication label is required");
        try {
            eligibility.validate();
        } catch (const TseError& e) {
            bad.push_back(e.what());
        }
    } else if (subcommand == "cci-trend") {
        need_study_window();
        if (trend_step < 1)
            bad.push_back("trend.step must be >= 1");
        if (trend_min_window < 1 || trend_max_window < trend_min_window)
            bad.push_back("trend window bounds must satisfy 1 <= min <= max");
        if (fixed_window_days < 1)
            bad.push_back("trend.fixed_window_days must be >= 1");
    } else if (subcommand == "covariates") {
        need_file(measurements_path, "measurements", true);
        if (covariate_width < 1)
            bad.push_back("covariates.width_days must be >= 1");
    } else if (subcommand == "inspect") {
        if (inspect_patient.empty())
            bad.push_back("inspect.patient is required");
        if (inspect_from && inspect_to && *inspect_to < *inspect_from)
            bad.push_back("inspect.to precedes inspect.from");
        if (inspect_ma_width < 0)
            bad.push_back("inspect.moving_average_days must be >= 0");
    } else if (subcommand == "generate") {
        if (gen.cohort_count < 1 || gen.patients_per_cohort < 1)
            bad.push_back("generate needs >= 1 cohort and >= 1 patient per cohort");
        if (gen.study_years < 2)
            bad.push_back("generate.study_years must be >= 2");
    }

    if (!bad.empty()) {
        std::string msg = "invalid configuration for '" + subcommand + "':";
        for (const auto& b : bad)
            msg += "\n  - " + b;
        throw TseError(ErrorCode::config, msg);
    }
}

// --- compilation -------------------------------------------------------------

CompiledCohort compile_cohort(const RunConfig& config) {
    if (!config.study_start || !config.study_end)
        throw TseError(ErrorCode::config, "study_start and study_end are required to compile");
    Date study_start = *config.study_start;
    Date study_end = *config.study_end;

    CompiledCohort cohort;
    IngestConfig icfg;
    icfg.study_start = study_start;
    icfg.study_end = study_end;
    icfg.unknown_code_policy = config.unknown_code_policy;
    icfg.plausible_min = config.plausible_min_release;
    icfg.plausible_max = config.plausible_max_release;

    std::vector<PrescriptionEvent> prescriptions;
    if (!config.prescriptions_path.empty())
        prescriptions = parse_prescriptions(config.prescriptions_path, icfg, cohort.report);

    std::vector<DiagnosisEvent> diagnoses;
    if (!config.diagnoses_path.empty()) {
        std::optional<CodeMapping> mapping;
        if (!config.codemap_path.empty())
            mapping = CodeMapping::load(config.codemap_path);
        diagnoses = parse_diagnoses(config.diagnoses_path, icfg,
                                    mapping ? &*mapping : nullptr, cohort.report);
    }

    std::map<std::string, Date> first_data;
    if (!config.patients_path.empty())
        first_data = parse_patients(config.patients_path, cohort.report);

    // group events per patient
    std::map<std::string, std::map<std::string, std::vector<PrescriptionEvent>>> fills_by_patient;
    for (auto& p : prescriptions)
        fills_by_patient[p.patient_id][p.medication_id].push_back(p);
    std::map<std::string, std::vector<DiagnosisEvent>> dx_by_patient;
    for (auto& d : diagnoses)
        dx_by_patient[d.patient_id].push_back(d);

    std::set<std::string> ids;
    for (const auto& [id, _] : fills_by_patient)
        ids.insert(id);
    for (const auto& [id, _] : dx_by_patient)
        ids.insert(id);
    for (const auto& [id, _] : first_data)
        ids.insert(id);

    for (const std::string& id : ids) {
        std::optional<Date> earliest_dx;
        if (auto it = dx_by_patient.find(id); it != dx_by_patient.end())
            for (const auto& d : it->second)
                if (!earliest_dx || d.diagnosis_date < *earliest_dx)
                    earliest_dx = d.diagnosis_date;
        std::optional<Date> earliest_fill;
        if (auto it = fills_by_patient.find(id); it != fills_by_patient.end())
            for (const auto& [label, fills] : it->second)
                for (const auto& f : fills)
                    if (!earliest_fill || f.release_date < *earliest_fill)
                        earliest_fill = f.release_date;

        // when pharmacy data availability is not given, fall back to the
        // earliest observed record
        std::optional<Date> first;
        if (auto it = first_data.find(id); it != first_data.end())
            first = it->second;
        else if (earliest_fill)
            first = earliest_fill;
        else if (earliest_dx)
            first = earliest_dx;
        if (!first)
            continue;
        if (*first > study_end) {
            cohort.report.excluded_patients.push_back(id);
            continue;
        }

        CompiledPatient patient;
        patient.id = id;
        Date earliest_record = *first;
        if (earliest_dx)
            earliest_record = min(earliest_record, *earliest_dx);
        patient.cohort_year = earliest_record.year();

        if (auto it = fills_by_patient.find(id); it != fills_by_patient.end()) {
            Date reference = resolve_reference_date(study_start, *first);
            for (auto& [label, fills] : it->second) {
                RefSequence seq = build_exposure(fills, reference, study_end, &cohort.report,
                                                 config.stockpile_cap_days);
                patient.exposures.emplace(label, std::move(seq));
            }
        }

        {
            // string block start rule: the earlier of the earliest diagnosis
            // date and the study start
            Date block_start = study_start;
            if (earliest_dx)
                block_start = min(block_start, *earliest_dx);
            std::vector<DiagnosisEvent> dx;
            if (auto it = dx_by_patient.find(id); it != dx_by_patient.end())
                dx = it->second;
            auto [comorbidity, setting] =
                build_comorbidity_block(dx, block_start, study_end, &cohort.report, id);
            patient.comorbidity = std::move(comorbidity);
            patient.setting = std::move(setting);
        }

        cohort.patients.emplace(id, std::move(patient));
    }
    return cohort;
}

// --- subcommands ----------------------------------------------------------------

namespace {

std::string cmd_ingest(const RunConfig& config) {
    CompiledCohort cohort = compile_cohort(config);
    fs::create_directories(config.output_dir);
    write_text_file(config.output_dir / "ingest_report.txt", cohort.report.text());
    write_text_file(config.output_dir / "ingest_report.json", cohort.report.to_json());
    std::ostringstream os;
    os << cohort.report.text();
    os << "patients compiled: " << cohort.patients.size() << "\n";
    return os.str();
}

std::string cmd_build(const RunConfig& config) {
    CompiledCohort cohort = compile_cohort(config);
    fs::create_directories(config.output_dir);

    std::vector<SequenceRecord> dense, runlength, comorbidity, setting;
    for (const auto& [id, patient] : cohort.patients) {
        for (const auto& [label, seq] : patient.exposures) {
            dense.push_back(encode_sequence(seq, label, Encoding::dense));
            runlength.push_back(encode_sequence(seq, label, Encoding::runlength));
        }
        if (patient.comorbidity) {
            auto rows = encode_block(*patient.comorbidity, "charlson");
            comorbidity.insert(comorbidity.end(), rows.begin(), rows.end());
        }
        if (patient.setting) {
            auto rows = encode_block(*patient.setting, "setting");
            setting.insert(setting.end(), rows.begin(), rows.end());
        }
    }

    write_store(dense, config.output_dir / kExposureDenseStore);
    write_store(runlength, config.output_dir / kExposureRunlengthStore);
    write_store(comorbidity, config.output_dir / kComorbidityStore);
    write_store(setting, config.output_dir / kSettingStore);
    write_text_file(config.output_dir / "ingest_report.txt", cohort.report.text());
    write_text_file(config.output_dir / "ingest_report.json", cohort.report.to_json());

    std::ostringstream os;
    os << "build complete\n";
    os << "  patients: " << cohort.patients.size() << "\n";
    os << "  exposure sequences: " << dense.size() << "\n";
    os << "  comorbidity rows: " << comorbidity.size() << "\n";
    os << "  setting rows: " << setting.size() << "\n";
    os << "  output: " << config.output_dir.string() << "\n";
    return os.str();
}

std::string cmd_stats(const RunConfig& config) {
    std::vector<fs::path> raw;
    if (!config.prescriptions_path.empty())
        raw.push_back(config.prescriptions_path);
    if (!config.diagnoses_path.empty())
        raw.push_back(config.diagnoses_path);

    std::vector<fs::path> stores;
    for (const char* name : {kExposureDenseStore, kExposureRunlengthStore, kComorbidityStore,
                             kSettingStore}) {
        fs::path p = config.output_dir / name;
        if (fs::exists(p))
            stores.push_back(p);
    }
    if (stores.empty())
        throw TseError(ErrorCode::not_found,
                       "no stores under " + config.output_dir.string() + "; run build first");

    StoreStats stats = compute_stats(raw, stores);
    write_text_file(config.output_dir / "store_stats.json", stats.to_json());
    return stats.text();
}

struct PatientSequences {
    std::map<std::string, std::map<std::string, RefSequence>> exposures; // patient -> label -> seq
    std::map<std::string, SequenceBlock> comorbidity;
    std::map<std::string, SequenceBlock> setting;
};

PatientSequences load_sequences(const RunConfig& config, bool need_exposures, bool need_blocks) {
    PatientSequences out;
    if (need_exposures) {
        fs::path p = config.output_dir / kExposureDenseStore;
        if (!fs::exists(p))
            throw TseError(ErrorCode::not_found, p.string() + " not found; run build first");
        for (const auto& rec : read_store(p))
            out.exposures[rec.patient_id].emplace(rec.label, decode_sequence(rec));
    }
    if (need_blocks) {
        for (auto [file, target] : {std::pair{kComorbidityStore, &out.comorbidity},
                                    std::pair{kSettingStore, &out.setting}}) {
            fs::path p = config.output_dir / file;
            if (!fs::exists(p))
                throw TseError(ErrorCode::not_found, p.string() + " not found; run build first");
            std::map<std::string, std::vector<SequenceRecord>> grouped;
            for (const auto& rec : read_store(p))
                grouped[rec.patient_id].push_back(rec); // file order preserved per patient
            for (const auto& [id, records] : grouped)
                target->emplace(id, decode_block(records));
        }
    }
    return out;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string cmd_eligibility(const RunConfig& config) {
    PatientSequences seqs = load_sequences(config, true, false);

    std::ostringstream csv;
    csv << "patient_id,status,eligible,index_date,candidates_with_coverage,"
           "free_pre_measured,free_pre_required,exposure_window_measured,"
           "exposure_window_required,firstline_pre_measured,firstline_pre_required,"
           "firstline_post_measured,firstline_post_required,overlap_measured,overlap_required\n";

    int64_t eligible_count = 0, evaluated = 0;
    for (const auto& [id, meds] : seqs.exposures) {
        auto aug = meds.find(config.augmenting_label);
        auto fl = meds.find(config.firstline_label);
        std::string status;
        if (aug == meds.end())
            status = "no-augmenting-exposure";
        else if (fl == meds.end())
            status = "no-firstline-exposure";

        if (!status.empty()) {
            csv << id << ',' << status << ",false,,0,,,,,,,,,,\n";
            continue;
        }
        EligibilityResult r = evaluate_eligibility(aug->second, fl->second, config.eligibility);
        ++evaluated;
        if (r.eligible)
            ++eligible_count;
        status = r.criteria ? "evaluated" : "no-viable-candidate";
        csv << id << ',' << status << ',' << bool_str(r.eligible) << ','
            << (r.index_date ? r.index_date->to_string() : std::string()) << ','
            << r.candidates_with_coverage;
        if (r.criteria) {
            const EligibilityChecks& c = *r.criteria;
            for (const CriterionCheck* ck :
                 {&c.free_pre, &c.exposure_window, &c.firstline_pre, &c.firstline_post, &c.overlap})
                csv << ',' << ck->measured << ',' << ck->required;
        } else {
            csv << ",,,,,,,,,,";
        }
        csv << '\n';
    }

    fs::create_directories(config.output_dir);
    write_text_file(config.output_dir / "eligibility.csv", csv.str());

    std::ostringstream os;
    os << "eligibility complete\n";
    os << "  patients evaluated: " << evaluated << "\n";
    os << "  eligible: " << eligible_count << "\n";
    os << "  output: " << (config.output_dir / "eligibility.csv").string() << "\n";
    return os.str();
}

std::vector<PatientComorbidity> assemble_comorbidity(const RunConfig& config,
                                                     const PatientSequences& seqs) {
    // cohort year = year of the earliest health record: the earlier of the
    // patient's first data availability and their earliest diagnosis
    std::map<std::string, Date> first_data;
    if (!config.patients_path.empty()) {
        IngestReport scratch;
        first_data = parse_patients(config.patients_path, scratch);
    }

    std::vector<PatientComorbidity> out;
    for (const auto& [id, cblock] : seqs.comorbidity) {
        auto sit = seqs.setting.find(id);
        if (sit == seqs.setting.end())
            throw TseError(ErrorCode::alignment, "patient " + id + " has no setting block");

        std::optional<Date> earliest;
        char filler = cblock.rows().front().alphabet().filler();
        for (const auto& row : cblock.rows()) {
            auto pos = row.payload().find_first_not_of(filler);
            if (pos != std::string::npos) {
                Date d = row.reference_date().plus_days(int64_t(pos));
                if (!earliest || d < *earliest)
                    earliest = d;
            }
        }
        if (auto it = first_data.find(id); it != first_data.end())
            earliest = earliest ? min(*earliest, it->second) : it->second;
        Date anchor = earliest ? *earliest : cblock.reference_date();

        out.push_back({id, anchor.year(), cblock, sit->second});
    }
    return out;
}

std::string cmd_cci_trend(const RunConfig& config) {
    PatientSequences seqs = load_sequences(config, false, true);
    std::vector<PatientComorbidity> patients = assemble_comorbidity(config, seqs);

    TrendTable growing = growing_window_trend(patients, config.weights, config.trend_min_window,
                                              config.trend_max_window, config.trend_step);
    TrendTable fixed = fixed_window_trend(patients, config.weights, *config.study_start,
                                          *config.study_end, config.fixed_window_days,
                                          config.trend_step);

    fs::create_directories(config.output_dir);
    write_text_file(config.output_dir / "cci_growing_trend.csv", growing.to_csv());
    write_text_file(config.output_dir / "cci_fixed_trend.csv", fixed.to_csv());

    std::ostringstream os;
    os << "cci-trend complete\n";
    os << "  patients: " << patients.size() << "\n";
    os << "  growing-window rows: " << growing.rows.size() << "\n";
    os << "  fixed-window rows: " << fixed.rows.size() << "\n";
    os << "  output: " << config.output_dir.string() << "\n";
    return os.str();
}

std::string cmd_covariates(const RunConfig& config) {
    PatientSequences seqs = load_sequences(config, true, false);
    IngestReport scratch;
    auto measurements = parse_measurements(config.measurements_path, scratch);

    std::ostringstream csv;
    csv << "patient_id,measurement_date,sequence,value,status\n";
    int64_t cells = 0;
    for (const auto& [id, dates] : measurements) {
        auto pit = seqs.exposures.find(id);
        if (pit == seqs.exposures.end())
            continue;
        std::vector<std::pair<std::string, RefSequence>> named;
        for (const auto& [label, seq] : pit->second) {
            if (!config.covariate_labels.empty() &&
                std::find(config.covariate_labels.begin(), config.covariate_labels.end(), label) ==
                    config.covariate_labels.end())
                continue;
            named.emplace_back(label, seq);
        }
        for (const auto& cell :
             time_varying_covariates(dates, named, config.covariate_width,
                                     config.covariate_summary)) {
            csv << id << ',' << cell.measurement_date.to_string() << ',' << cell.sequence_name
                << ',' << (cell.value ? format_number(*cell.value) : std::string()) << ','
                << (cell.flag.empty() ? "ok" : cell.flag) << '\n';
            ++cells;
        }
    }

    fs::create_directories(config.output_dir);
    write_text_file(config.output_dir / "covariates.csv", csv.str());

    std::ostringstream os;
    os << "covariates complete\n";
    os << "  cells: " << cells << "\n";
    os << "  output: " << (config.output_dir / "covariates.csv").string() << "\n";
    return os.str();
}

std::string cmd_inspect(const RunConfig& config) {
    PatientSequences seqs = load_sequences(config, true, true);
    const std::string& id = config.inspect_patient;

    struct NamedRow {
        std::string label;
        RefSequence seq;
    };
    std::vector<NamedRow> rows;
    if (auto it = seqs.exposures.find(id); it != seqs.exposures.end())
        for (const auto& [label, seq] : it->second)
            rows.push_back({"med " + label, seq});
    if (auto it = seqs.comorbidity.find(id); it != seqs.comorbidity.end())
        for (size_t r = 0; r < it->second.rows().size(); ++r)
            rows.push_back({"charlson " + std::to_string(r + 1), it->second.rows()[r]});
    if (auto it = seqs.setting.find(id); it != seqs.setting.end())
        for (size_t r = 0; r < it->second.rows().size(); ++r)
            rows.push_back({"setting " + std::to_string(r + 1), it->second.rows()[r]});
    if (rows.empty())
        throw TseError(ErrorCode::not_found, "patient '" + id + "' not found in stores");

    Date lo = rows.front().seq.reference_date();
    Date hi = rows.front().seq.last_date();
    for (const auto& r : rows) {
        lo = min(lo, r.seq.reference_date());
        hi = max(hi, r.seq.last_date());
    }
    if (config.inspect_from)
        lo = *config.inspect_from;
    if (config.inspect_to)
        hi = *config.inspect_to;

    std::ostringstream os;
    os << "patient " << id << "\n";
    if (hi < lo) {
        os << "no coverage: requested range is empty\n";
        return os.str();
    }
    DateWindow range(lo, hi);
    bool any = false;
    for (const auto& r : rows)
        if (DateWindow::intersect(range, r.seq.coverage()))
            any = true;
    if (!any) {
        os << "no coverage: no sequence intersects " << lo.to_string() << " .. " << hi.to_string()
           << "\n";
        return os.str();
    }

    size_t label_width = 0;
    for (const auto& r : rows)
        label_width = std::max(label_width, r.label.size());
    label_width = std::max(label_width, size_t(8)) + 2;

    os << "range " << lo.to_string() << " .. " << hi.to_string() << " (" << range.width_days()
       << " days)\n\n";
    // ruler: a tick every 10 days from the range start
    os << std::string(label_width, ' ');
    for (int64_t i = 0; i < range.width_days(); ++i)
        os << (i % 10 == 0 ? '+' : '-');
    os << "\n";

    for (const auto& r : rows) {
        std::string line(size_t(range.width_days()), ' ');
        auto overlap = DateWindow::intersect(range, r.seq.coverage());
        if (overlap) {
            RefSequence sub = slice(r.seq, *overlap);
            size_t offset = size_t(overlap->start() - lo);
            std::copy(sub.payload().begin(), sub.payload().end(), line.begin() + offset);
        }
        os << r.label << std::string(label_width - r.label.size(), ' ') << line << "\n";
    }

    if (config.inspect_ma_width > 0) {
        os << "\nmoving averages (window " << config.inspect_ma_width << " days)\n";
        os << "date,sequence,value\n";
        for (const auto& r : rows) {
            if (!r.seq.is_binary() || r.seq.length() < config.inspect_ma_width)
                continue;
            MovingAverageSeries series = moving_average(r.seq, config.inspect_ma_width);
            for (size_t i = 0; i < series.values.size(); ++i) {
                Date d = series.first_date.plus_days(int64_t(i));
                if (d < lo || d > hi)
                    continue;
                os << d.to_string() << ',' << r.label.substr(4) << ','
                   << format_number(series.values[i]) << "\n";
            }
        }
    }
    return os.str();
}

std::string cmd_generate(const RunConfig& config) {
    GeneratedData data = generate_cohorts(config.gen);
    write_generated_files(data, config.output_dir);
    std::ostringstream os;
    os << "generated synthetic cohort data\n";
    os << "  patients: " << data.first_data_dates.size() << "\n";
    os << "  prescriptions: " << data.prescriptions.size() << "\n";
    os << "  diagnoses: " << data.diagnoses.size() << "\n";
    os << "  directory: " << config.output_dir.string() << "\n";
    os << "  config: " << (config.output_dir / "config.json").string() << "\n";
    return os.str();
}

} // namespace

bool is_known_subcommand(const std::string& name) {
    static const std::set<std::string> known{"ingest",    "build",      "stats",
                                             "eligibility", "cci-trend", "covariates",
                                             "inspect",   "generate"};
    return known.contains(name);
}

std::string run_command(const std::string& subcommand, const RunConfig& config) {
    if (!is_known_subcommand(subcommand))
        throw TseError(ErrorCode::usage, "unknown subcommand '" + subcommand + "'");
    config.validate_for(subcommand);
    if (subcommand == "ingest")
        return cmd_ingest(config);
    if (subcommand == "build")
        return cmd_build(config);
    if (subcommand == "stats")
        return cmd_stats(config);
    if (subcommand == "eligibility")
        return cmd_eligibility(config);
    if (subcommand == "cci-trend")
        return cmd_cci_trend(config);
    if (subcommand == "covariates")
        return cmd_covariates(config);
    if (subcommand == "inspect")
        return cmd_inspect(config);
    return cmd_generate(config);
}

} // namespace tse
