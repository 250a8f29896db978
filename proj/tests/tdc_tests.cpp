#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "tdadc/core.hpp"
#include "tdadc/tdc.hpp"

using namespace tdadc;

namespace {
EdgePair pair_of(TimeFs dt, Polarity pol = Polarity::Rising, long idx = 0) {
    EdgePair p;
    p.t_p = dt;
    p.t_n = 0.0;
    p.polarity = pol;
    p.sample_index = idx;
    return p;
}
}  // namespace

TEST_CASE("neutral codes land every stage exactly on its nominal delay") {
    for (const TdcConfig& cfg : {TdcConfig::defaults(), TdcConfig::ideal()}) {
        for (int k = 1; k <= 7; ++k) {
            const StageConfig& st = cfg.stages[k - 1];
            const TimeFs nominal = 100000.0 / std::ldexp(1.0, k + 1);
            CHECK(effective_dt(st, Polarity::Rising) == doctest::Approx(nominal).epsilon(1e-12));
            CHECK(effective_dt(st, Polarity::Falling) == doctest::Approx(nominal).epsilon(1e-12));
        }
    }
    CHECK(TdcConfig::defaults().stages[0].dt_nominal == doctest::Approx(25000.0));
    CHECK(TdcConfig::defaults().stages[6].dt_nominal == doctest::Approx(390.625));
    CHECK(TdcConfig::defaults().stages[7].dt_nominal == 0.0);
    // scaled full range keeps the centering property
    const TdcConfig half = TdcConfig::defaults(50000.0);
    CHECK(effective_dt(half.stages[0], Polarity::Rising) == doctest::Approx(12500.0));
}

TEST_CASE("opposing-code sweeps shift the other edge by exactly the coupling span") {
    const TdcConfig cfg = TdcConfig::defaults();
    for (int k = 1; k <= 8; ++k) {
        StageConfig st = cfg.stages[k - 1];
        double rise_lo = 1e18, rise_hi = -1e18;
        for (int c = 0; c <= 15; ++c) {
            st.ddu.code_fall = c;
            const TimeFs r = effective_dt(st, Polarity::Rising);
            rise_lo = std::min(rise_lo, r);
            rise_hi = std::max(rise_hi, r);
        }
        CHECK(rise_hi - rise_lo == doctest::Approx(220.0).epsilon(1e-12));

        st = cfg.stages[k - 1];
        double fall_lo = 1e18, fall_hi = -1e18;
        for (int c = 0; c <= 15; ++c) {
            st.ddu.code_rise = c;
            const TimeFs f = effective_dt(st, Polarity::Falling);
            fall_lo = std::min(fall_lo, f);
            fall_hi = std::max(fall_hi, f);
        }
        CHECK(fall_hi - fall_lo == doctest::Approx(90.0).epsilon(1e-12));
    }
}

TEST_CASE("zero coupling decouples the edges completely") {
    StageConfig st = TdcConfig::ideal().stages[2];
    const TimeFs base_rise = effective_dt(st, Polarity::Rising);
    const TimeFs base_fall = effective_dt(st, Polarity::Falling);
    for (int c = 0; c <= 15; ++c) {
        st.ddu.code_fall = c;
        CHECK(effective_dt(st, Polarity::Rising) == base_rise);
    }
    st = TdcConfig::ideal().stages[2];
    for (int c = 0; c <= 15; ++c) {
        st.ddu.code_rise = c;
        CHECK(effective_dt(st, Polarity::Falling) == base_fall);
    }
}

TEST_CASE("own-code steps and the conventional code move the intended edges") {
    StageConfig st = TdcConfig::ideal().stages[3];
    const TimeFs r0 = effective_dt(st, Polarity::Rising);
    st.ddu.code_rise += 3;
    CHECK(effective_dt(st, Polarity::Rising) ==
          doctest::Approx(r0 + 3 * st.ddu.step_rise).epsilon(1e-12));
    // conventional code moves both edges, by deliberately unequal steps
    st = TdcConfig::ideal().stages[3];
    const TimeFs f0 = effective_dt(st, Polarity::Falling);
    st.conv_code += 1;
    CHECK(effective_dt(st, Polarity::Rising) ==
          doctest::Approx(r0 + st.conv_step_rise).epsilon(1e-12));
    CHECK(effective_dt(st, Polarity::Falling) ==
          doctest::Approx(f0 + st.conv_step_fall).epsilon(1e-12));
    CHECK(st.conv_step_fall != st.conv_step_rise);
    // stage 1 has no conventional cells
    StageConfig s1 = TdcConfig::ideal().stages[0];
    const TimeFs s1r = effective_dt(s1, Polarity::Rising);
    s1.conv_code = 3;
    CHECK(effective_dt(s1, Polarity::Rising) == s1r);
}

TEST_CASE("comparator decides by sign with ties up outside the window") {
    TdcConfig cfg = TdcConfig::ideal();
    RngStream rng(0, 0);
    CHECK(compare(5.0, cfg, rng) == std::pair<bool, bool>{true, false});
    CHECK(compare(-5.0, cfg, rng) == std::pair<bool, bool>{false, false});
    CHECK(compare(0.0, cfg, rng) == std::pair<bool, bool>{true, false});

    cfg.meta_window = 10.0;
    CHECK(compare(10.0, cfg, rng) == std::pair<bool, bool>{true, false});
    CHECK(compare(-10.0, cfg, rng) == std::pair<bool, bool>{false, false});
    CHECK(compare(3.0, cfg, rng) == std::pair<bool, bool>{true, true});
    CHECK(compare(-9.99, cfg, rng) == std::pair<bool, bool>{true, true});

    cfg.meta_resolver = false;
    long heads = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto [bit, meta] = compare(0.0, cfg, rng);
        CHECK(meta);
        heads += bit ? 1 : 0;
    }
    CHECK(std::abs(heads / double(n) - 0.5) < 0.01);
}

TEST_CASE("ideal pipeline matches the quantizer oracle exactly") {
    const TdcConfig cfg = TdcConfig::ideal();
    RngStream rng(0, 0);
    long errors = 0;
    const int grid = 1 << 14;
    for (int i = 0; i < grid; ++i) {
        const TimeFs dt = -50000.0 + i * (100000.0 / grid);
        const ConversionRecord rec = convert_pair(pair_of(dt), cfg, rng);
        errors += rec.code != ideal_quantize(dt, cfg.t_fs, 8) ? 1 : 0;
    }
    RngStream inputs(99, 1);
    for (int i = 0; i < 10000; ++i) {
        const TimeFs dt = inputs.uniform01() * 100000.0 - 50000.0;
        const ConversionRecord rec = convert_pair(pair_of(dt), cfg, rng);
        errors += rec.code != ideal_quantize(dt, cfg.t_fs, 8) ? 1 : 0;
    }
    CHECK(errors == 0);
}

TEST_CASE("falling conversions match the oracle with symmetric parameters") {
    const TdcConfig cfg = TdcConfig::ideal();
    RngStream rng(0, 0);
    RngStream inputs(7, 2);
    for (int i = 0; i < 5000; ++i) {
        const TimeFs dt = inputs.uniform01() * 100000.0 - 50000.0;
        const ConversionRecord rec =
            convert_pair(pair_of(dt, Polarity::Falling, 1), cfg, rng);
        CHECK(rec.code == ideal_quantize(dt, cfg.t_fs, 8));
    }
}

TEST_CASE("residuals contract binarily stage by stage") {
    const TdcConfig cfg = TdcConfig::ideal();
    RngStream rng(0, 0);
    RngStream inputs(13, 0);
    for (int i = 0; i < 500; ++i) {
        const TimeFs dt = inputs.uniform01() * 100000.0 - 50000.0;
        const ConversionRecord rec = convert_pair(pair_of(dt), cfg, rng);
        CHECK_FALSE(rec.out_of_range);
        for (int k = 0; k < 8; ++k) {
            const TimeFs bound = 100000.0 / std::ldexp(1.0, k + 1);
            CHECK(std::abs(rec.residuals[k]) <= bound * (1.0 + 1e-12));
        }
        // the recorded MSB-first decisions reassemble into the code
        int code = 0;
        for (int k = 0; k < 8; ++k) code = (code << 1) | (rec.decisions[k] ? 1 : 0);
        CHECK(code == rec.code);
    }
}

TEST_CASE("out-of-range inputs saturate and are flagged") {
    const TdcConfig cfg = TdcConfig::ideal();
    RngStream rng(0, 0);
    const ConversionRecord hi = convert_pair(pair_of(70000.0), cfg, rng);
    CHECK(hi.out_of_range);
    CHECK(hi.code == 255);
    const ConversionRecord lo = convert_pair(pair_of(-70000.0), cfg, rng);
    CHECK(lo.out_of_range);
    CHECK(lo.code == 0);
}

TEST_CASE("a first-stage delay fault shifts the two half-ranges apart") {
    TdcConfig cfg = TdcConfig::ideal();
    cfg.stages[0].mismatch_rise = 2.0 * t_lsb(cfg.t_fs, 8);  // +781.25 fs
    RngStream rng(0, 0);
    const double lsb = t_lsb(cfg.t_fs, 8);
    for (int c = 8; c < 248; ++c) {
        const TimeFs dt = (c - 128 + 0.5) * lsb;  // center of ideal code c
        const int got = convert_pair(pair_of(dt), cfg, rng).code;
        if (c >= 130)
            CHECK(got == c - 2);  // upper half: the inflated MSB delay over-subtracts
        else if (c < 126)
            CHECK(got == c + 2);
        else
            CHECK((got == 127 || got == 128));  // downstream range clips at midscale
        // the falling bank is untouched by a rising-path fault
        CHECK(convert_pair(pair_of(dt, Polarity::Falling, 1), cfg, rng).code == c);
    }
}

TEST_CASE("jitter accumulates into the final residual as sqrt(21) sigma") {
    TdcConfig cfg = TdcConfig::ideal();
    cfg.jitter_sigma = 20.0;
    RngStream rng(42, 0);
    const TimeFs dt = 195.3125;  // mid-code, far from every decision boundary
    const int n = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const ConversionRecord rec = convert_pair(pair_of(dt), cfg, rng);
        sum += rec.residuals[7];
        sum2 += rec.residuals[7] * rec.residuals[7];
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum2 / n - mean * mean);
    const double expected = std::sqrt(21.0) * cfg.jitter_sigma;
    CHECK(sd == doctest::Approx(expected).epsilon(0.10));
}

TEST_CASE("zero jitter consumes no randomness") {
    const TdcConfig cfg = TdcConfig::ideal();
    RngStream a(1, 0), b(999, 7);  // different streams must not matter
    RngStream inputs(3, 3);
    for (int i = 0; i < 200; ++i) {
        const TimeFs dt = inputs.uniform01() * 100000.0 - 50000.0;
        CHECK(convert_pair(pair_of(dt), cfg, a).code ==
              convert_pair(pair_of(dt), cfg, b).code);
    }
}

TEST_CASE("metastable resolutions are flagged and resolved deterministically") {
    TdcConfig cfg = TdcConfig::ideal();
    cfg.meta_window = 50.0;
    RngStream rng(0, 0);
    const ConversionRecord rec = convert_pair(pair_of(0.0), cfg, rng);
    CHECK(rec.metastable_flags[0]);
    CHECK(rec.decisions[0]);
    CHECK(rec.code == 128);

    // bounded-latency stall is common mode: the code cannot change
    cfg.meta_latency_bound = 5000.0;
    const ConversionRecord stalled = convert_pair(pair_of(0.0), cfg, rng);
    CHECK(stalled.code == 128);
    for (int k = 0; k < 8; ++k) CHECK(stalled.residuals[k] == rec.residuals[k]);

    // without the resolver the decision is a fair coin
    cfg.meta_latency_bound = 0.0;
    cfg.meta_resolver = false;
    std::set<int> seen;
    long ups = 0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        const int code = convert_pair(pair_of(0.0), cfg, rng).code;
        seen.insert(code);
        ups += code == 128 ? 1 : 0;
    }
    CHECK(seen == std::set<int>{127, 128});
    CHECK(std::abs(ups / double(n) - 0.5) < 0.05);
}

TEST_CASE("streams enforce the ping-pong parity") {
    const TdcConfig cfg = TdcConfig::ideal();
    RngStream rng(0, 0);
    std::vector<EdgePair> ok = {pair_of(100.0, Polarity::Rising, 0),
                                pair_of(200.0, Polarity::Falling, 1),
                                pair_of(300.0, Polarity::Rising, 2)};
    const auto records = convert_stream(ok, cfg, rng);
    REQUIRE(records.size() == 3);

    std::vector<EdgePair> bad = {pair_of(100.0, Polarity::Rising, 0),
                                 pair_of(200.0, Polarity::Rising, 1)};
    CHECK_THROWS_AS(convert_stream(bad, cfg, rng), Error);
    try {
        convert_stream(bad, cfg, rng);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Input);
    }
}

TEST_CASE("split_banks separates the polarities in order") {
    const TdcConfig cfg = TdcConfig::ideal();
    RngStream rng(0, 0);
    std::vector<EdgePair> pairs;
    for (long i = 0; i < 6; ++i)
        pairs.push_back(pair_of(1000.0 * i,
                                i % 2 == 0 ? Polarity::Rising : Polarity::Falling, i));
    const BankStreams banks = split_banks(convert_stream(pairs, cfg, rng));
    REQUIRE(banks.rising.size() == 3);
    REQUIRE(banks.falling.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(banks.rising[i].sample_index == long(2 * i));
        CHECK(banks.falling[i].sample_index == long(2 * i + 1));
    }
}

TEST_CASE("configuration validation rejects broken ladders") {
    TdcConfig cfg = TdcConfig::defaults();
    cfg.stages[2].ddu.code_rise = 16;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = TdcConfig::defaults();
    cfg.stages[7].dt_nominal = 100.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = TdcConfig::defaults();
    cfg.stages[0].has_conventional = true;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = TdcConfig::defaults();
    cfg.stages[4].conv_code = 4;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = TdcConfig::defaults();
    cfg.jitter_sigma = -1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    CHECK_NOTHROW(TdcConfig::defaults().validate());
    CHECK_NOTHROW(TdcConfig::ideal().validate());
}
