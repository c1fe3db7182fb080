#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tse.h"

namespace fs = std::filesystem;

namespace {

struct SequenceGuard {
    tse_sequence* seq = nullptr;
    ~SequenceGuard() { tse_sequence_free(seq); }
};

struct RunsGuard {
    tse_runs* runs = nullptr;
    ~RunsGuard() { tse_runs_free(runs); }
};

struct ConfigGuard {
    tse_config* config = nullptr;
    ~ConfigGuard() { tse_config_free(config); }
};

tse_sequence* make_seq(const char* payload, const char* reference = "2007-01-01",
                       const char* kind = "medication-exposure") {
    tse_sequence* seq = nullptr;
    REQUIRE(tse_sequence_create("P1", kind, reference, payload, &seq) == TSE_OK);
    return seq;
}

} // namespace

TEST_SUITE("capi") {

TEST_CASE("version and error text are always available") {
    CHECK(std::strlen(tse_version()) > 0);
    CHECK(tse_last_error() != nullptr);
}

TEST_CASE("sequence creation validates inputs and reports codes") {
    tse_sequence* seq = nullptr;
    CHECK(tse_sequence_create("P1", "medication-exposure", "2007-01-01", "01x",
                              &seq) == TSE_ERR_STRUCTURE);
    CHECK(std::strlen(tse_last_error()) > 0);
    CHECK(tse_sequence_create("P1", "no-such-kind", "2007-01-01", "01", &seq) == TSE_ERR_PARSE);
    CHECK(tse_sequence_create("P1", "medication-exposure", "not-a-date", "01", &seq) ==
          TSE_ERR_PARSE);
    CHECK(tse_sequence_create(nullptr, "medication-exposure", "2007-01-01", "01", &seq) ==
          TSE_ERR_PARAMETER);
}

TEST_CASE("time and state functions through the C surface") {
    SequenceGuard g{make_seq("0000000001111111100011111")};
    CHECK(tse_sequence_length(g.seq) == 25);
    CHECK(std::string(tse_sequence_payload(g.seq)) == "0000000001111111100011111");
    CHECK(std::string(tse_sequence_patient_id(g.seq)) == "P1");
    CHECK(std::string(tse_sequence_kind(g.seq)) == "medication-exposure");

    char buf[32];
    REQUIRE(tse_sequence_reference_date(g.seq, buf, sizeof buf) == TSE_OK);
    CHECK(std::string(buf) == "2007-01-01");

    REQUIRE(tse_sequence_date_at(g.seq, 10, buf, sizeof buf) == TSE_OK);
    CHECK(std::string(buf) == "2007-01-10");
    CHECK(tse_sequence_date_at(g.seq, 26, buf, sizeof buf) == TSE_ERR_RANGE);
    CHECK(tse_sequence_date_at(g.seq, 10, buf, 4) == TSE_ERR_PARAMETER); // buffer too small

    int64_t pos = 0;
    REQUIRE(tse_sequence_position_of(g.seq, "2007-01-25", &pos) == TSE_OK);
    CHECK(pos == 25);
    CHECK(tse_sequence_position_of(g.seq, "2007-02-01", &pos) == TSE_ERR_RANGE);

    REQUIRE(tse_sequence_state_at(g.seq, "2007-01-10", buf, sizeof buf) == TSE_OK);
    CHECK(std::string(buf) == "on-medication");

    SequenceGuard c{make_seq("..5", "2007-01-01", "comorbidity")};
    REQUIRE(tse_sequence_state_at(c.seq, "2007-01-03", buf, sizeof buf) == TSE_OK);
    CHECK(std::string(buf) == "Dementia");
}

TEST_CASE("window operations through the C surface") {
    SequenceGuard g{make_seq("0000000001111111100011111")};

    tse_sequence* sliced = nullptr;
    REQUIRE(tse_sequence_slice(g.seq, "2007-01-10", "2007-01-17", &sliced) == TSE_OK);
    SequenceGuard s{sliced};
    CHECK(std::string(tse_sequence_payload(s.seq)) == "11111111");

    int64_t count = 0;
    REQUIRE(tse_sequence_count_symbol(g.seq, '1', "2007-01-01", "2007-01-25", &count) == TSE_OK);
    CHECK(count == 13);
    CHECK(tse_sequence_count_symbol(g.seq, '1', "2007-01-01", "2007-03-01", &count) ==
          TSE_ERR_RANGE);

    char start[16];
    REQUIRE(tse_sequence_max_ones_in_window(g.seq, 8, "2007-01-01", "2007-01-25", &count, start,
                                            sizeof start) == TSE_OK);
    CHECK(count == 8);
    CHECK(std::string(start) == "2007-01-10");

    SequenceGuard other{make_seq("1111111111111111111111111")};
    tse_sequence* composite = nullptr;
    REQUIRE(tse_sequence_overlap_and(g.seq, other.seq, &composite) == TSE_OK);
    SequenceGuard comp{composite};
    CHECK(std::string(tse_sequence_payload(comp.seq)) ==
          std::string(tse_sequence_payload(g.seq)));
}

TEST_CASE("moving averages use the two-call length pattern") {
    SequenceGuard g{make_seq("111111111100000000001111111111")};
    int64_t n = 0;
    char first[16];
    REQUIRE(tse_sequence_moving_average(g.seq, 10, nullptr, 0, &n, first, sizeof first) == TSE_OK);
    CHECK(n == 21);
    CHECK(std::string(first) == "2007-01-10");

    std::vector<double> values(static_cast<size_t>(n));
    REQUIRE(tse_sequence_moving_average(g.seq, 10, values.data(), n, &n, nullptr, 0) == TSE_OK);
    CHECK(values[0] == 1.0);
    CHECK(values[10] == 0.0);

    CHECK(tse_sequence_moving_average(g.seq, 31, nullptr, 0, &n, nullptr, 0) ==
          TSE_ERR_PARAMETER);
}

TEST_CASE("run-length form round trips") {
    SequenceGuard g{make_seq("0000000001111111100011111")};
    tse_runs* runs = nullptr;
    REQUIRE(tse_sequence_to_runs(g.seq, &runs) == TSE_OK);
    RunsGuard r{runs};

    CHECK(tse_runs_count(r.runs) == 2);
    CHECK(tse_runs_total_days(r.runs) == 25);
    int64_t start = 0, length = 0;
    REQUIRE(tse_runs_at(r.runs, 0, &start, &length) == TSE_OK);
    CHECK(start == 10);
    CHECK(length == 8);
    REQUIRE(tse_runs_at(r.runs, 1, &start, &length) == TSE_OK);
    CHECK(start == 21);
    CHECK(length == 5);
    CHECK(tse_runs_at(r.runs, 2, &start, &length) == TSE_ERR_RANGE);

    tse_sequence* back = nullptr;
    REQUIRE(tse_runs_to_sequence(r.runs, "P1", &back) == TSE_OK);
    SequenceGuard b{back};
    CHECK(std::string(tse_sequence_payload(b.seq)) == tse_sequence_payload(g.seq));

    // structural violations surface as status codes
    int64_t starts[] = {1, 3};
    int64_t lengths[] = {3, 2}; // adjacent: would be one maximal run
    tse_runs* bad = nullptr;
    CHECK(tse_runs_create("2007-01-01", 10, starts, lengths, 2, &bad) == TSE_ERR_STRUCTURE);

    int64_t ok_starts[] = {2, 7};
    int64_t ok_lengths[] = {3, 2};
    REQUIRE(tse_runs_create("2007-01-01", 10, ok_starts, ok_lengths, 2, &bad) == TSE_OK);
    RunsGuard ok{bad};
    tse_sequence* dense = nullptr;
    REQUIRE(tse_runs_to_sequence(ok.runs, "PX", &dense) == TSE_OK);
    SequenceGuard d{dense};
    CHECK(std::string(tse_sequence_payload(d.seq)) == "0111001100");
}

TEST_CASE("config and pipeline through the C surface") {
    fs::path dir = fs::temp_directory_path() / "tse_capi_pipeline";
    fs::remove_all(dir);
    fs::create_directories(dir);

    tse_config* raw = nullptr;
    REQUIRE(tse_config_create(&raw) == TSE_OK);
    ConfigGuard g{raw};

    CHECK(tse_config_set(g.config, "no.such.key", "1") == TSE_ERR_CONFIG);
    REQUIRE(tse_config_set(g.config, "output_dir", (dir / "data").string().c_str()) == TSE_OK);
    REQUIRE(tse_config_set(g.config, "generate.patients_per_cohort", "3") == TSE_OK);
    REQUIRE(tse_config_set(g.config, "generate.study_years", "5") == TSE_OK);

    char* text = nullptr;
    REQUIRE(tse_run(g.config, "generate", &text) == TSE_OK);
    REQUIRE(text != nullptr);
    CHECK(std::string(text).find("generated synthetic cohort data") != std::string::npos);
    tse_string_free(text);

    // chain a build from the generated config
    tse_config* loaded_raw = nullptr;
    REQUIRE(tse_config_load((dir / "data" / "config.json").string().c_str(), &loaded_raw) ==
            TSE_OK);
    ConfigGuard loaded{loaded_raw};
    REQUIRE(tse_config_set(loaded.config, "output_dir", (dir / "out").string().c_str()) == TSE_OK);
    REQUIRE(tse_run(loaded.config, "build", &text) == TSE_OK);
    tse_string_free(text);
    CHECK(fs::exists(dir / "out" / "exposure.dense.tsv"));

    CHECK(tse_run(loaded.config, "frobnicate", &text) == TSE_ERR_USAGE);

    tse_config* empty = nullptr;
    REQUIRE(tse_config_create(&empty) == TSE_OK);
    ConfigGuard e{empty};
    CHECK(tse_run(e.config, "build", &text) == TSE_ERR_CONFIG);
    CHECK(std::string(tse_last_error()).find("study_start") != std::string::npos);

    CHECK(tse_config_load("/nonexistent/config.json", &loaded_raw) == TSE_ERR_IO);
}

} // TEST_SUITE
