#include <doctest.h>

#include <functional>
#include <random>

#include "core/error.hpp"
#include "core/sequence.hpp"
#include "oracles.hpp"

using namespace tse;

namespace {

// 25-day medication exposure string with runs starting at days 10 and 21.
const std::string k25DayExposure = "0000000001111111100011111";

RefSequence binary_seq(const std::string& payload, Date reference = Date::from_ymd(2007, 1, 1),
                       const std::string& patient = "P1") {
    return RefSequence(patient, InfoKind::medication_exposure, reference, payload);
}

bool throws_code(ErrorCode expected, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const TseError& e) {
        return e.code() == expected;
    }
    return false;
}

} // namespace

TEST_SUITE("sequence_core") {

TEST_CASE("date_at maps position 1 to the reference date") {
    auto s = binary_seq(std::string(400, '0'));
    CHECK(date_at(s, 1) == Date::from_ymd(2007, 1, 1));
    CHECK(date_at(s, 32) == Date::from_ymd(2007, 2, 1)); // 31 days of January
}

TEST_CASE("date_at agrees with component-wise day stepping") {
    auto s = binary_seq(std::string(250, '1'), Date::from_ymd(2014, 6, 15));
    oracle::Ymd expected = oracle::add_days({2014, 6, 15}, 199);
    Date got = date_at(s, 200);
    CHECK(got == Date::from_ymd(expected.year, unsigned(expected.month), unsigned(expected.day)));

    std::mt19937_64 rng(411);
    for (int i = 0; i < 200; ++i) {
        int y = std::uniform_int_distribution<int>(1995, 2030)(rng);
        int m = std::uniform_int_distribution<int>(1, 12)(rng);
        int d = std::uniform_int_distribution<int>(1, oracle::month_days(y, m))(rng);
        auto seq = binary_seq(std::string(500, '0'), Date::from_ymd(y, unsigned(m), unsigned(d)));
        int64_t k = std::uniform_int_distribution<int64_t>(1, 500)(rng);
        oracle::Ymd stepped = oracle::add_days({y, m, d}, k - 1);
        CHECK(date_at(seq, k) == Date::from_ymd(stepped.year, unsigned(stepped.month),
                                                unsigned(stepped.day)));
    }
}

TEST_CASE("date_at rejects positions outside [1, L]") {
    auto s = binary_seq("0101");
    CHECK(throws_code(ErrorCode::range, [&] { date_at(s, 0); }));
    CHECK(throws_code(ErrorCode::range, [&] { date_at(s, 5); }));
}

TEST_CASE("position_of counts days inclusively from the reference date") {
    auto s = binary_seq("1", Date::from_ymd(2007, 1, 1));
    CHECK(position_of(s, Date::from_ymd(2007, 1, 1)) == 1);

    // 60 days of exposure from 7/30/2010 through 9/27/2010
    auto t = binary_seq(std::string(60, '1'), Date::from_ymd(2010, 7, 30));
    CHECK(position_of(t, Date::from_ymd(2010, 9, 27)) == 60);
}

TEST_CASE("position_of and date_at are mutual inverses") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 1000; ++i) {
        Date ref = oracle::random_date(rng);
        std::uniform_int_distribution<int64_t> len_dist(1, 2000);
        int64_t len = len_dist(rng);
        auto s = binary_seq(std::string(size_t(len), '0'), ref);
        std::uniform_int_distribution<int64_t> pos(1, len);
        int64_t k = pos(rng);
        CHECK(position_of(s, date_at(s, k)) == k);
        Date t = ref.plus_days(pos(rng) - 1);
        CHECK(date_at(s, position_of(s, t)) == t);
    }
}

TEST_CASE("position_of identifies the violated bound") {
    auto s = binary_seq("111", Date::from_ymd(2010, 5, 10));
    try {
        position_of(s, Date::from_ymd(2010, 5, 9));
        FAIL("expected range error");
    } catch (const TseError& e) {
        CHECK(e.code() == ErrorCode::range);
        CHECK(std::string(e.what()).find("precedes coverage start") != std::string::npos);
    }
    try {
        position_of(s, Date::from_ymd(2010, 5, 13));
        FAIL("expected range error");
    } catch (const TseError& e) {
        CHECK(e.code() == ErrorCode::range);
        CHECK(std::string(e.what()).find("after coverage end") != std::string::npos);
    }
}

TEST_CASE("state_at applies the state function of the kind") {
    auto s = binary_seq("01");
    CHECK(state_at(s, Date::from_ymd(2007, 1, 1)) == "not-on-medication");
    CHECK(state_at(s, Date::from_ymd(2007, 1, 2)) == "on-medication");

    RefSequence c("P1", InfoKind::comorbidity, Date::from_ymd(2007, 1, 1), "..5");
    CHECK(state_at(c, Date::from_ymd(2007, 1, 3)) == "Dementia");
    CHECK(state_at(c, Date::from_ymd(2007, 1, 1)) == "none");

    // g and its inverse agree
    CHECK(state_symbol(InfoKind::comorbidity, "Dementia") == '5');
    CHECK(state_symbol(InfoKind::medication_exposure, "on-medication") == '1');
    CHECK(state_symbol(InfoKind::setting, "inpatient") == 'I');
}

TEST_CASE("payload symbols outside the alphabet are rejected") {
    CHECK(throws_code(ErrorCode::structure, [] { binary_seq("0120"); }));
    CHECK(throws_code(ErrorCode::structure, [] {
        RefSequence("P1", InfoKind::setting, Date::from_ymd(2007, 1, 1), "IOX");
    }));
    CHECK(throws_code(ErrorCode::structure, [] { binary_seq(""); }));
}

TEST_CASE("slice keeps symbols and rebases the reference date") {
    auto s = binary_seq(k25DayExposure, Date::from_ymd(2007, 1, 1));
    SUBCASE("full-coverage slice is the identity") {
        CHECK(slice(s, s.coverage()) == s);
    }
    SUBCASE("days 10-17 hold the first run") {
        DateWindow w(date_at(s, 10), date_at(s, 17));
        RefSequence part = slice(s, w);
        CHECK(part.payload() == "11111111");
        CHECK(part.reference_date() == Date::from_ymd(2007, 1, 10));
        CHECK(part.length() == 8);
    }
    SUBCASE("window beyond coverage is a range error") {
        CHECK(throws_code(ErrorCode::range, [&] {
            slice(s, DateWindow(date_at(s, 20), date_at(s, 25).plus_days(1)));
        }));
    }
}

TEST_CASE("slice matches a character-by-character copy on random windows") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 300; ++i) {
        size_t len = std::uniform_int_distribution<size_t>(1, 400)(rng);
        std::string payload = oracle::random_binary_payload(rng, len);
        Date ref = oracle::random_date(rng);
        auto s = binary_seq(payload, ref);
        size_t lo = std::uniform_int_distribution<size_t>(0, len - 1)(rng);
        size_t hi = std::uniform_int_distribution<size_t>(lo, len - 1)(rng);
        DateWindow w(ref.plus_days(int64_t(lo)), ref.plus_days(int64_t(hi)));
        CHECK(slice(s, w).payload() == oracle::copy_slice(payload, lo, hi));
    }
}

TEST_CASE("slice composes: nested windows slice once or twice alike") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
        size_t len = std::uniform_int_distribution<size_t>(4, 300)(rng);
        auto s = binary_seq(oracle::random_binary_payload(rng, len), oracle::random_date(rng));
        size_t lo1 = std::uniform_int_distribution<size_t>(0, len - 3)(rng);
        size_t hi1 = std::uniform_int_distribution<size_t>(lo1 + 2, len - 1)(rng);
        size_t lo2 = std::uniform_int_distribution<size_t>(lo1, hi1 - 1)(rng);
        size_t hi2 = std::uniform_int_distribution<size_t>(lo2, hi1)(rng);
        Date ref = s.reference_date();
        DateWindow w1(ref.plus_days(int64_t(lo1)), ref.plus_days(int64_t(hi1)));
        DateWindow w2(ref.plus_days(int64_t(lo2)), ref.plus_days(int64_t(hi2)));
        CHECK(slice(slice(s, w1), w2) == slice(s, w2));
    }
}

TEST_CASE("count_symbol over the 25-day example") {
    auto s = binary_seq(k25DayExposure);
    CHECK(count_symbol(s, '1', s.coverage()) == 13); // runs of 8 and 5
    CHECK(count_symbol(s, '0', s.coverage()) == 12);
    CHECK(throws_code(ErrorCode::parameter, [&] { count_symbol(s, '7', s.coverage()); }));
}

TEST_CASE("count_symbol equals a per-position scan") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 300; ++i) {
        size_t len = std::uniform_int_distribution<size_t>(1, 500)(rng);
        std::string payload = oracle::random_binary_payload(rng, len, 5);
        auto s = binary_seq(payload, oracle::random_date(rng));
        size_t lo = std::uniform_int_distribution<size_t>(0, len - 1)(rng);
        size_t hi = std::uniform_int_distribution<size_t>(lo, len - 1)(rng);
        DateWindow w(s.reference_date().plus_days(int64_t(lo)),
                     s.reference_date().plus_days(int64_t(hi)));
        char symbol = (i % 2) ? '1' : '0';
        CHECK(count_symbol(s, symbol, w) == oracle::count_in(payload, lo, hi, symbol));
    }
}

TEST_CASE("overlap_and ANDs aligned positions") {
    auto a = binary_seq("110");
    auto b = binary_seq("011");
    CHECK(overlap_and(a, b).payload() == "010");
    CHECK(overlap_and(a, a) == a); // idempotent
    CHECK(overlap_and(a, b) == overlap_and(b, a));
}

TEST_CASE("overlap_and with staggered references covers the intersection only") {
    auto a = binary_seq("11111", Date::from_ymd(2010, 1, 1));
    auto b = binary_seq("11111", Date::from_ymd(2010, 1, 3));
    RefSequence both = overlap_and(a, b);
    CHECK(both.reference_date() == Date::from_ymd(2010, 1, 3));
    CHECK(both.length() == 3);
    CHECK(both.payload() == "111");
}

TEST_CASE("overlap_and matches the date-keyed map oracle") {
    std::mt19937_64 rng(10);
    for (int i = 0; i < 300; ++i) {
        Date ref_a = Date::from_ymd(2010, 1, 1).plus_days(
            std::uniform_int_distribution<int64_t>(0, 40)(rng));
        Date ref_b = Date::from_ymd(2010, 1, 1).plus_days(
            std::uniform_int_distribution<int64_t>(0, 40)(rng));
        std::string pa = oracle::random_binary_payload(
            rng, std::uniform_int_distribution<size_t>(50, 200)(rng), 8);
        std::string pb = oracle::random_binary_payload(
            rng, std::uniform_int_distribution<size_t>(50, 200)(rng), 8);
        auto a = binary_seq(pa, ref_a);
        auto b = binary_seq(pb, ref_b);

        auto expected = oracle::overlap_and(ref_a, pa, ref_b, pb);
        RefSequence got = overlap_and(a, b);
        REQUIRE(size_t(got.length()) == expected.size());
        for (const auto& [day, symbol] : expected)
            CHECK(got.on(Date::from_day_number(day)) == symbol);

        // composite exposure can never exceed either input over the shared span
        DateWindow shared = got.coverage();
        CHECK(count_symbol(got, '1', shared) <= count_symbol(a, '1', shared));
        CHECK(count_symbol(got, '1', shared) <= count_symbol(b, '1', shared));
    }
}

TEST_CASE("overlap_and error cases") {
    auto a = binary_seq("111", Date::from_ymd(2010, 1, 1));
    auto far = binary_seq("111", Date::from_ymd(2012, 1, 1));
    CHECK(throws_code(ErrorCode::alignment, [&] { overlap_and(a, far); }));

    RefSequence nominal("P1", InfoKind::setting, Date::from_ymd(2010, 1, 1), "IO.");
    CHECK(throws_code(ErrorCode::kind, [&] { overlap_and(a, nominal); }));

    auto other = binary_seq("111", Date::from_ymd(2010, 1, 1), "P2");
    CHECK(throws_code(ErrorCode::alignment, [&] { overlap_and(a, other); }));
}

TEST_CASE("max_ones_in_window saturated and alternating cases") {
    auto s = binary_seq("1111100000");
    auto r = max_ones_in_window(s, 5, s.coverage());
    CHECK(r.count == 5);
    CHECK(r.window_start == s.reference_date());

    auto alt = binary_seq("1010101010");
    auto r2 = max_ones_in_window(alt, 4, alt.coverage());
    CHECK(r2.count == 2);
    CHECK(r2.window_start == alt.reference_date()); // earliest tie wins

    CHECK(throws_code(ErrorCode::parameter, [&] { max_ones_in_window(s, 11, s.coverage()); }));
    CHECK(throws_code(ErrorCode::parameter, [&] { max_ones_in_window(s, 0, s.coverage()); }));
}

TEST_CASE("max_ones_in_window equals exhaustive enumeration") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        size_t len = std::uniform_int_distribution<size_t>(1, 300)(rng);
        std::string payload = oracle::random_binary_payload(rng, len, 6);
        auto s = binary_seq(payload, oracle::random_date(rng));
        size_t lo = std::uniform_int_distribution<size_t>(0, len - 1)(rng);
        size_t hi = std::uniform_int_distribution<size_t>(lo, len - 1)(rng);
        size_t width = std::uniform_int_distribution<size_t>(1, hi - lo + 1)(rng);
        DateWindow w(s.reference_date().plus_days(int64_t(lo)),
                     s.reference_date().plus_days(int64_t(hi)));

        auto got = max_ones_in_window(s, int64_t(width), w);
        auto [count, start] = oracle::max_window(payload, lo, hi, width);
        CHECK(got.count == count);
        CHECK(got.window_start == s.reference_date().plus_days(int64_t(start)));
    }
}

TEST_CASE("moving_average constants and bounds") {
    auto ones = binary_seq(std::string(90, '1'));
    auto ma = moving_average(ones, 30);
    CHECK(ma.values.size() == 61);
    CHECK(ma.first_date == date_at(ones, 30));
    for (double v : ma.values)
        CHECK(v == 1.0);

    auto zeros = binary_seq(std::string(90, '0'));
    for (double v : moving_average(zeros, 7).values)
        CHECK(v == 0.0);

    CHECK(throws_code(ErrorCode::parameter, [&] { moving_average(ones, 91); }));
    CHECK(throws_code(ErrorCode::parameter, [&] { moving_average(ones, 0); }));
    RefSequence nominal("P1", InfoKind::setting, Date::from_ymd(2010, 1, 1), "IO.");
    CHECK(throws_code(ErrorCode::kind, [&] { moving_average(nominal, 2); }));
}

TEST_CASE("moving_average matches the sliding recount oracle") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 100; ++i) {
        size_t len = std::uniform_int_distribution<size_t>(30, 400)(rng);
        std::string payload = oracle::random_binary_payload(rng, len);
        auto s = binary_seq(payload);
        auto got = moving_average(s, 30);
        auto expected = oracle::moving_average(payload, 30);
        REQUIRE(got.values.size() == expected.size());
        for (size_t k = 0; k < expected.size(); ++k) {
            CHECK(got.values[k] == doctest::Approx(expected[k]).epsilon(1e-12));
            CHECK(got.values[k] >= 0.0);
            CHECK(got.values[k] <= 1.0);
        }
    }
}

TEST_CASE("to_runs extracts the maximal 1-segments of the 25-day example") {
    auto s = binary_seq(k25DayExposure);
    RunSequence runs = to_runs(s);
    REQUIRE(runs.runs().size() == 2);
    CHECK(runs.runs()[0] == Run{10, 8});
    CHECK(runs.runs()[1] == Run{21, 5});
    CHECK(runs.length() == 25);
    CHECK(from_runs(runs, "P1") == s);

    CHECK(to_runs(binary_seq("0000")).runs().empty());
    RefSequence nominal("P1", InfoKind::comorbidity, Date::from_ymd(2010, 1, 1), "..5");
    CHECK(throws_code(ErrorCode::kind, [&] { to_runs(nominal); }));
}

TEST_CASE("run-length round trip on random binary strings") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 1000; ++i) {
        size_t len = std::uniform_int_distribution<size_t>(1, 300)(rng);
        auto s = binary_seq(oracle::random_binary_payload(rng, len, 4), oracle::random_date(rng));
        RunSequence runs = to_runs(s);
        RefSequence back = from_runs(runs, s.patient_id());
        CHECK(back == s);
        CHECK(back.reference_date() == s.reference_date());
        CHECK(back.length() == s.length());
    }
}

TEST_CASE("run sequences reject structural violations") {
    Date ref = Date::from_ymd(2010, 1, 1);
    CHECK(throws_code(ErrorCode::structure, [&] { RunSequence(ref, 10, {{5, 3}, {4, 2}}); }));
    CHECK(throws_code(ErrorCode::structure, [&] { RunSequence(ref, 10, {{1, 3}, {4, 2}}); })); // adjacent
    CHECK(throws_code(ErrorCode::structure, [&] { RunSequence(ref, 10, {{1, 3}, {3, 2}}); })); // overlap
    CHECK(throws_code(ErrorCode::structure, [&] { RunSequence(ref, 10, {{8, 5}}); }));         // beyond L
    CHECK(throws_code(ErrorCode::structure, [&] { RunSequence(ref, 10, {{0, 2}}); }));
    CHECK(throws_code(ErrorCode::structure, [&] { RunSequence(ref, 10, {{2, 0}}); }));
    CHECK_NOTHROW(RunSequence(ref, 10, {{1, 3}, {5, 2}, {10, 1}}));
}

TEST_CASE("block_symbols_in unions non-filler symbols") {
    Date ref = Date::from_ymd(2010, 1, 1);
    // diagnoses on three dates; the middle date carries two concurrent symbols
    RefSequence row1("P1", InfoKind::comorbidity, ref, ".2..5....D");
    RefSequence row2("P1", InfoKind::comorbidity, ref, "....A.....");
    SequenceBlock block = SequenceBlock::from_rows({row1, row2});

    CHECK(block_symbols_in(block, block.coverage()) == std::set<char>{'2', '5', 'A', 'D'});
    DateWindow middle(ref.plus_days(4), ref.plus_days(4));
    CHECK(block_symbols_in(block, middle) == std::set<char>{'5', 'A'});
}

TEST_CASE("block_symbols_in equals a date-by-date union and grows with the window") {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 200; ++i) {
        size_t len = std::uniform_int_distribution<size_t>(5, 120)(rng);
        Date ref = oracle::random_date(rng);
        size_t rows = std::uniform_int_distribution<size_t>(1, 3)(rng);
        std::vector<RefSequence> row_seqs;
        std::vector<std::string> payloads;
        for (size_t r = 0; r < rows; ++r) {
            payloads.push_back(oracle::random_nominal_payload(rng, len, kCharlsonSymbols, 0.15));
            row_seqs.emplace_back("P1", InfoKind::comorbidity, ref, payloads.back());
        }
        SequenceBlock block = SequenceBlock::from_rows(row_seqs);

        size_t lo = std::uniform_int_distribution<size_t>(0, len - 1)(rng);
        size_t hi = std::uniform_int_distribution<size_t>(lo, len - 1)(rng);
        DateWindow w(ref.plus_days(int64_t(lo)), ref.plus_days(int64_t(hi)));

        std::set<char> expected;
        for (size_t p = lo; p <= hi; ++p)
            for (const auto& payload : payloads)
                if (payload[p] != '.')
                    expected.insert(payload[p]);
        CHECK(block_symbols_in(block, w) == expected);

        // monotone in the window
        std::set<char> whole = block_symbols_in(block, block.coverage());
        for (char c : block_symbols_in(block, w))
            CHECK(whole.contains(c));
    }
}

TEST_CASE("blocks require aligned rows") {
    Date ref = Date::from_ymd(2010, 1, 1);
    RefSequence a("P1", InfoKind::comorbidity, ref, "...");
    RefSequence other_len("P1", InfoKind::comorbidity, ref, "....");
    RefSequence other_ref("P1", InfoKind::comorbidity, ref.plus_days(1), "...");
    RefSequence other_patient("P2", InfoKind::comorbidity, ref, "...");
    CHECK(throws_code(ErrorCode::alignment, [&] { SequenceBlock::from_rows({a, other_len}); }));
    CHECK(throws_code(ErrorCode::alignment, [&] { SequenceBlock::from_rows({a, other_ref}); }));
    CHECK(throws_code(ErrorCode::alignment, [&] { SequenceBlock::from_rows({a, other_patient}); }));
    CHECK(throws_code(ErrorCode::structure, [&] { SequenceBlock::from_rows({}); }));
}

} // TEST_SUITE
