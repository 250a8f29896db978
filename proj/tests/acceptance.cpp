// Acceptance gate: prints one verdict line per criterion and exits with the
// number of failed criteria.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tdadc/analysis.hpp"
#include "tdadc/calib.hpp"
#include "tdadc/harness.hpp"

using namespace tdadc;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void verdict(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void crashed(int criterion, const std::exception& e) {
    verdict(criterion, false, std::string("unexpected error: ") + e.what());
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

EdgePair pair_of(TimeFs dt, Polarity pol = Polarity::Rising) {
    EdgePair p;
    p.t_p = dt;
    p.t_n = 0.0;
    p.polarity = pol;
    return p;
}

double max_abs(const std::vector<double>& v) {
    double worst = 0.0;
    for (double x : v) worst = std::max(worst, std::abs(x));
    return worst;
}

SpectralMetrics chain_metrics(const AdcModel& adc, int n, int bin) {
    SignalSpec stim;
    stim.kind = SignalSpec::Kind::Sine;
    stim.amplitude = 1.0;
    stim.bin = bin;
    RngStream rng(0, 0);
    const AdcRun run = convert_samples(adc, sample_signal(stim, adc.f_s, n), rng);
    return spectral_metrics(codes_of(run.records), bin, n, Window::None);
}

// 1: ideal pipeline == quantizer oracle, exhaustive grid plus random probes
void criterion_1() {
    const TdcConfig cfg = TdcConfig::ideal();
    RngStream rng(0, 0);
    long errors = 0, points = 0;
    const int grid = 1 << 14;
    for (int i = 0; i < grid; ++i) {
        const TimeFs dt = -50000.0 + i * (100000.0 / grid);
        errors += convert_pair(pair_of(dt), cfg, rng).code !=
                          ideal_quantize(dt, cfg.t_fs, 8)
                      ? 1
                      : 0;
        ++points;
    }
    RngStream probe(2024, 1);
    for (int i = 0; i < 10000; ++i) {
        const TimeFs dt = probe.uniform01() * 100000.0 - 50000.0;
        errors += convert_pair(pair_of(dt), cfg, rng).code !=
                          ideal_quantize(dt, cfg.t_fs, 8)
                      ? 1
                      : 0;
        ++points;
    }
    verdict(1, errors == 0,
            "oracle equivalence: " + std::to_string(errors) + " code errors over " +
                std::to_string(points) + " points (tolerance 0)");
}

// 2: ideal chain, coherent full-scale sine -> SNDR 49.9 +- 0.5, ENOB 8.0 +- 0.1
SpectralMetrics criterion_2() {
    AdcModel adc;
    adc.vtc = VtcConfig::ideal();
    adc.tdc = TdcConfig::ideal();
    const SpectralMetrics m = chain_metrics(adc, 4096, 479);
    const bool pass =
        std::abs(m.sndr_db - 49.9) <= 0.5 && std::abs(m.enob - 8.0) <= 0.1;
    verdict(2, pass,
            fmt("ideal-chain SNDR %.3f dB (49.9 +- 0.5), ENOB %.3f (8.0 +- 0.1)",
                m.sndr_db, m.enob));
    return m;
}

// 3: VTC nonlinearity 0.130 +- 0.02 uncompensated, <= 0.020 compensated, >= 5x
void criterion_3() {
    const VtcConfig cfg = VtcConfig::defaults();
    const double un = transfer_curve(cfg, 64, false).nl;
    const double co = transfer_curve(cfg, 64, true).nl;
    const double ratio = un / co;
    const bool pass = std::abs(un - 0.130) <= 0.02 && co <= 0.020 && ratio >= 5.0;
    verdict(3, pass,
            fmt("VTC NL %.4f -> %.4f, improvement %.2fx "
                "(need 0.130 +- 0.02 -> <= 0.020, >= 5x)",
                un, co, ratio));
}

// 4: opposing-code sweeps bounded by 220/90 fs; exactly 0 without coupling
void criterion_4() {
    auto spans = [](const TdcConfig& cfg) {
        double worst_rise = 0.0, worst_fall = 0.0;
        for (int k = 1; k <= 8; ++k) {
            StageConfig st = cfg.stages[k - 1];
            double rlo = 1e18, rhi = -1e18;
            for (int c = 0; c <= 15; ++c) {
                st.ddu.code_fall = c;
                const TimeFs r = effective_dt(st, Polarity::Rising);
                rlo = std::min(rlo, r);
                rhi = std::max(rhi, r);
            }
            worst_rise = std::max(worst_rise, rhi - rlo);
            st = cfg.stages[k - 1];
            double flo = 1e18, fhi = -1e18;
            for (int c = 0; c <= 15; ++c) {
                st.ddu.code_rise = c;
                const TimeFs f = effective_dt(st, Polarity::Falling);
                flo = std::min(flo, f);
                fhi = std::max(fhi, f);
            }
            worst_fall = std::max(worst_fall, fhi - flo);
        }
        return std::pair<double, double>{worst_rise, worst_fall};
    };
    const auto [rise, fall] = spans(TdcConfig::defaults());
    const auto [rise0, fall0] = spans(TdcConfig::ideal());
    const bool pass = rise <= 220.0 + 1e-9 && fall <= 90.0 + 1e-9 && rise0 == 0.0 &&
                      fall0 == 0.0;
    verdict(4, pass,
            fmt("DDU shifts: rise %.3f fs (<= 220), fall %.3f fs (<= 90), "
                "decoupled %.1f fs (= 0)",
                rise, fall, std::max(rise0, fall0)));
}

// 5: 20-seed Monte Carlo of in-span mismatches -> calibration converges,
// max|DNL| <= 0.5 LSB, SNDR >= 40 dB
void criterion_5() {
    const CalibSpec spec;
    int bad_seeds = 0;
    double worst_dnl = 0.0, worst_sndr = 1e9;
    for (int seed = 1; seed <= 20; ++seed) {
        AdcModel adc;
        adc.vtc = VtcConfig::ideal();
        adc.tdc = TdcConfig::defaults();
        RngStream mis(seed, 500);
        for (int k = 1; k <= 7; ++k) {
            StageConfig& st = adc.tdc.stages[k - 1];
            st.mismatch_rise = (mis.uniform01() * 4.0 - 2.0) * st.ddu.step_rise;
            st.mismatch_fall = (mis.uniform01() * 4.0 - 2.0) * st.ddu.step_fall;
        }
        RngStream rng(seed, 0);
        const CalibReport report = run_foreground_calibration(adc, spec, rng);
        double dnl = 0.0;
        for (Polarity pol : {Polarity::Rising, Polarity::Falling})
            dnl = std::max(dnl, max_abs(partial_dnl(adc, 8, pol, spec, rng)));
        const double sndr = chain_metrics(adc, 4096, 479).sndr_db;
        worst_dnl = std::max(worst_dnl, dnl);
        worst_sndr = std::min(worst_sndr, sndr);
        if (!report.all_converged() || dnl > 0.5 || sndr < 40.0) ++bad_seeds;
    }
    verdict(5, bad_seeds == 0,
            fmt("calibration recovery over 20 seeds: worst DNL %.3f LSB (<= 0.5), "
                "worst SNDR %.2f dB (>= 40), bad seeds %.0f",
                worst_dnl, worst_sndr, double(bad_seeds)));
}

// 6: sweep shape: monotone non-increasing SNDR within trial noise,
// SFDR >= SNDR everywhere, sigma 0 equals criterion 2
void criterion_6(const SpectralMetrics& ideal_chain) {
    AdcModel adc;
    adc.vtc = VtcConfig::ideal();
    adc.tdc = TdcConfig::ideal();
    SignalSpec stim;
    stim.kind = SignalSpec::Kind::Sine;
    stim.amplitude = 1.0;
    stim.bin = 479;
    RngStream rng(42, 0);
    const std::vector<double> grid = {0.0, 0.25, 0.5, 1.0, 2.0, 4.0};
    const int trials = 10;
    const auto rows = dt_deviation_sweep(adc, grid, 0.0, trials, rng, stim, 4096, 1);

    bool monotone = true, sfdr_ok = true;
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].sfdr_db_mean < rows[i].sndr_db_mean) sfdr_ok = false;
        if (i > 0) {
            const double allowance =
                std::sqrt(rows[i].sndr_db_std * rows[i].sndr_db_std +
                          rows[i - 1].sndr_db_std * rows[i - 1].sndr_db_std) /
                std::sqrt(double(trials));
            if (rows[i].sndr_db_mean > rows[i - 1].sndr_db_mean + allowance)
                monotone = false;
        }
    }
    const double zero_gap = std::abs(rows[0].sndr_db_mean - ideal_chain.sndr_db);
    const bool pass = monotone && sfdr_ok && zero_gap < 1e-9 &&
                      rows[0].sndr_db_std == 0.0;
    verdict(6, pass,
            fmt("sweep shape: SNDR %.2f -> %.2f dB monotone within noise, "
                "sigma-0 gap %.2g dB (= 0)",
                rows.front().sndr_db_mean, rows.back().sndr_db_mean, zero_gap));
}

// 7: delay-element toggle reduction exactly 0.5
void criterion_7() {
    const ToggleComparison cmp = toggle_compare(56, 1000);
    verdict(7, cmp.reduction == 0.5,
            fmt("dual-edge toggle reduction %.4f (= 0.5000 exactly)", cmp.reduction));
}

// 8: the three pinned timing budgets
void criterion_8() {
    TimingBudget b;
    b.t_fs = 100000.0;
    b.t_m = 30000.0;
    b.t_s = 80000.0;
    const bool a = timing_feasible(b) == true;
    b.t_s = 79999.0;
    const bool c = timing_feasible(b) == false;
    b.t_s = 60000.0;
    b.t_reset = 20000.0;
    const bool d = timing_feasible(b, true) == true;
    verdict(8, a && c && d,
            std::string("budget lint: 80000 fs -> ") + (a ? "true" : "WRONG") +
                ", 79999 fs -> " + (c ? "false" : "WRONG") +
                ", reset-free 60000 fs -> " + (d ? "true" : "WRONG"));
}

// 9: bank symmetry and single-bank fault containment
void criterion_9() {
    AdcModel adc;
    adc.vtc = VtcConfig::ideal();
    adc.tdc = TdcConfig::ideal();

    RngStream wave(9, 9);
    const int n = 2048;
    std::vector<SampledInput> doubled;
    std::vector<double> inputs;
    doubled.reserve(2 * n);
    for (int i = 0; i < n; ++i) {
        const double d = wave.uniform01() * 2.0 - 1.0;
        inputs.push_back(d);
        doubled.push_back(SampledInput::from_diff(d));  // rising slot
        doubled.push_back(SampledInput::from_diff(d));  // falling slot
    }

    RngStream rng(0, 0);
    const AdcRun clean = convert_samples(adc, doubled, rng);
    long bank_diffs = 0;
    for (int i = 0; i < n; ++i)
        bank_diffs +=
            clean.records[2 * i].code != clean.records[2 * i + 1].code ? 1 : 0;

    adc.tdc.stages[1].mismatch_fall = 3.0 * adc.tdc.stages[1].ddu.step_fall;
    const AdcRun faulty = convert_samples(adc, doubled, rng);
    long rising_errors = 0;
    for (int i = 0; i < n; ++i) {
        const int expect = ideal_quantize(50000.0 * inputs[i], adc.tdc.t_fs, 8);
        rising_errors += faulty.records[2 * i].code != expect ? 1 : 0;
    }
    verdict(9, bank_diffs == 0 && rising_errors == 0,
            "dual-edge symmetry: " + std::to_string(bank_diffs) +
                " bank mismatches, " + std::to_string(rising_errors) +
                " rising-bank errors under a falling-path fault (tolerance 0)");
}

// 10: byte-identical artifacts for every command on rerun, including a
// worker-count change for the threaded sweep
void criterion_10() {
    const fs::path dir = fs::temp_directory_path() / "tdadc_acceptance";
    fs::create_directories(dir);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
    };

    struct Case {
        Command command;
        const char* text;
    };
    const Case cases[] = {
        {Command::Simulate,
         "[vtc]\npreset = ideal\n[tdc]\npreset = ideal\n[experiment]\nseed = 7\n"},
        {Command::VtcCurve, "[adc]\nn_samples = 64\n"},
        {Command::DduSweep, ""},
        {Command::SweepDt,
         "[vtc]\npreset = ideal\n[tdc]\npreset = ideal\n[adc]\nn_samples = 256\n"
         "[stimulus]\nbin = 63\n[sweep]\nsigma_grid = 0, 0.5\n"},
        {Command::Calibrate, "[vtc]\npreset = ideal\n[tdc]\npreset = ideal\n"},
        {Command::PowerCompare, ""},
        {Command::Feasibility, ""},
    };

    unsetenv("TDADC_WORKERS");
    int unstable = 0;
    std::string detail;
    for (const Case& c : cases) {
        ExperimentSpec spec = parse_spec_text(c.text, c.command, "acceptance");
        const fs::path out = dir / (std::string(to_string(c.command)) + ".csv");
        spec.output_path = out.string();
        run(spec);
        const std::string first = slurp(out);
        run(spec);
        const bool same = slurp(out) == first && !first.empty();
        if (c.command == Command::SweepDt) {
            setenv("TDADC_WORKERS", "4", 1);
            run(spec);
            unsetenv("TDADC_WORKERS");
            if (slurp(out) != first) {
                ++unstable;
                detail += " sweep-dt(workers)";
                continue;
            }
        }
        if (!same) {
            ++unstable;
            detail += std::string(" ") + to_string(c.command);
        }
    }
    verdict(10, unstable == 0,
            unstable == 0
                ? "determinism: 7 commands rerun byte-identical, sweep-dt stable "
                  "across worker counts"
                : "determinism violated by:" + detail);
}

}  // namespace

int main() {
    std::printf("acceptance: dual-edge time-domain ADC simulator\n");
    try {
        criterion_1();
    } catch (const std::exception& e) {
        crashed(1, e);
    }
    SpectralMetrics ideal_chain{};
    try {
        ideal_chain = criterion_2();
    } catch (const std::exception& e) {
        crashed(2, e);
    }
    try {
        criterion_3();
    } catch (const std::exception& e) {
        crashed(3, e);
    }
    try {
        criterion_4();
    } catch (const std::exception& e) {
        crashed(4, e);
    }
    try {
        criterion_5();
    } catch (const std::exception& e) {
        crashed(5, e);
    }
    try {
        criterion_6(ideal_chain);
    } catch (const std::exception& e) {
        crashed(6, e);
    }
    try {
        criterion_7();
    } catch (const std::exception& e) {
        crashed(7, e);
    }
    try {
        criterion_8();
    } catch (const std::exception& e) {
        crashed(8, e);
    }
    try {
        criterion_9();
    } catch (const std::exception& e) {
        crashed(9, e);
    }
    try {
        criterion_10();
    } catch (const std::exception& e) {
        crashed(10, e);
    }
    std::printf("acceptance: %d of 10 criteria failed\n", g_failures);
    return g_failures;
}
