#include "tdadc/calib.hpp"

#include <algorithm>
#include <cmath>

namespace tdadc {

namespace {

long long required_points(int bit_depth) {
    // half the stream is the other polarity; >= 64 average hits per code
    return 64LL << (bit_depth + 1);
}

double max_abs(const std::vector<double>& v) {
    double worst = 0.0;
    for (double x : v) worst = std::max(worst, std::abs(x));
    return worst;
}

struct Candidate {
    int code = 0;
    int conv = 0;
};

}  // namespace

void CalibSpec::validate() const {
    if (!(dnl_tolerance > 0))
        throw Error(ErrorKind::Config, "calib: dnl_tolerance must be positive");
    if (ramp_points < required_points(2))
        throw Error(ErrorKind::Config, "calib: ramp_points too small for any stage");
    if (max_iterations_per_stage < 1)
        throw Error(ErrorKind::Config, "calib: max_iterations_per_stage must be >= 1");
}

std::vector<double> partial_dnl(const AdcModel& adc, int bit_depth, Polarity polarity,
                                const CalibSpec& spec, RngStream& rng) {
    adc.validate();
    if (bit_depth < 1 || bit_depth > 8)
        throw Error(ErrorKind::Config, "partial_dnl: bit_depth must be in [1, 8]");
    if (spec.ramp_points < required_points(bit_depth))
        throw Error(ErrorKind::Config,
                    "partial_dnl: ramp_points too small for bit_depth " +
                        std::to_string(bit_depth));

    const int bins = 1 << bit_depth;
    const int shift = 8 - bit_depth;
    std::vector<long long> hist(bins, 0);

    const int n = spec.ramp_points;
    SignalSpec ramp;
    ramp.kind = SignalSpec::Kind::Ramp;
    const std::vector<SampledInput> samples = sample_signal(ramp, adc.f_s, n);
    for (int i = 0; i < n; ++i) {
        const Polarity pol = i % 2 == 0 ? Polarity::Rising : Polarity::Falling;
        VtcResult front = convert(samples[i], pol, adc.vtc, rng);
        front.pair.sample_index = i;
        const ConversionRecord rec = convert_pair(front.pair, adc.tdc, rng);
        if (pol == polarity) ++hist[rec.code >> shift];
    }

    if (bit_depth == 1) return {};  // two bins, no interior

    long long interior_total = 0;
    for (int i = 1; i < bins - 1; ++i) interior_total += hist[i];
    const double h_bar = static_cast<double>(interior_total) / (bins - 2);
    if (!(h_bar > 0.0))
        throw Error(ErrorKind::Statistics, "partial_dnl: empty interior histogram");

    std::vector<double> dnl;
    dnl.reserve(bins - 2);
    for (int i = 1; i < bins - 1; ++i) dnl.push_back(hist[i] / h_bar - 1.0);
    return dnl;
}

StageCalibEntry calibrate_stage(AdcModel& adc, int k, Polarity polarity,
                                const CalibSpec& spec, RngStream& rng) {
    spec.validate();
    if (k < 1 || k > 7)
        throw Error(ErrorKind::Config, "calibrate_stage: tunable stages are 1..7");

    StageConfig& st = adc.tdc.stages[k - 1];
    const int depth = k + 1;
    // depth-d histogram DNL in depth-d bin units; one fine LSB spans
    // 2^(8-d) of a bin, so scale the tolerance down accordingly
    const double unit_scale = std::ldexp(1.0, 8 - depth);
    const double tol_native = spec.dnl_tolerance / unit_scale;
    const bool rising = polarity == Polarity::Rising;
    const bool search_conv = rising && st.has_conventional;

    auto apply = [&](const Candidate& c) {
        if (rising)
            st.ddu.code_rise = c.code;
        else
            st.ddu.code_fall = c.code;
        if (search_conv) st.conv_code = c.conv;
    };
    int iterations = 0;
    auto evaluate = [&](const Candidate& c) {
        apply(c);
        ++iterations;
        return max_abs(partial_dnl(adc, depth, polarity, spec, rng));
    };

    const Candidate current{rising ? st.ddu.code_rise : st.ddu.code_fall, st.conv_code};
    Candidate best = current;
    double best_dnl = evaluate(current);

    if (best_dnl > tol_native) {
        // all other points of the tuning space, nearest first so exact ties
        // resolve to the least disturbance (idempotence)
        std::vector<Candidate> space;
        const int conv_lo = search_conv ? 0 : current.conv;
        const int conv_hi = search_conv ? 3 : current.conv;
        for (int conv = conv_lo; conv <= conv_hi; ++conv)
            for (int code = 0; code <= 15; ++code)
                if (code != current.code || conv != current.conv)
                    space.push_back({code, conv});
        std::sort(space.begin(), space.end(), [&](const Candidate& a, const Candidate& b) {
            const int da = std::abs(a.conv - current.conv), db = std::abs(b.conv - current.conv);
            if (da != db) return da < db;
            const int ca = std::abs(a.code - current.code), cb = std::abs(b.code - current.code);
            if (ca != cb) return ca < cb;
            if (a.conv != b.conv) return a.conv < b.conv;
            return a.code < b.code;
        });

        if (spec.search_strategy == SearchStrategy::Exhaustive) {
            for (const Candidate& c : space) {
                if (iterations >= spec.max_iterations_per_stage) break;
                const double d = evaluate(c);
                if (d < best_dnl) {
                    best_dnl = d;
                    best = c;
                }
            }
        } else {
            // hill-climb the DDU code, hop to the best conventional code,
            // climb once more
            Candidate cur = current;
            double cur_dnl = best_dnl;
            auto climb = [&]() {
                while (iterations < spec.max_iterations_per_stage && cur_dnl > tol_native) {
                    Candidate step = cur;
                    double step_dnl = cur_dnl;
                    for (int dir : {-1, +1}) {
                        const int code = cur.code + dir;
                        if (code < 0 || code > 15) continue;
                        if (iterations >= spec.max_iterations_per_stage) break;
                        const Candidate c{code, cur.conv};
                        const double d = evaluate(c);
                        if (d < step_dnl) {
                            step_dnl = d;
                            step = c;
                        }
                    }
                    if (step.code == cur.code) break;
                    cur = step;
                    cur_dnl = step_dnl;
                }
            };
            climb();
            if (search_conv && cur_dnl > tol_native) {
                Candidate hop = cur;
                double hop_dnl = cur_dnl;
                for (int conv = 0; conv <= 3; ++conv) {
                    if (conv == cur.conv) continue;
                    if (iterations >= spec.max_iterations_per_stage) break;
                    const Candidate c{cur.code, conv};
                    const double d = evaluate(c);
                    if (d < hop_dnl) {
                        hop_dnl = d;
                        hop = c;
                    }
                }
                cur = hop;
                cur_dnl = hop_dnl;
                climb();
            }
            best = cur;
            best_dnl = cur_dnl;
        }
    }

    apply(best);

    StageCalibEntry entry;
    entry.stage = k;
    entry.polarity = polarity;
    entry.iterations = iterations;
    entry.code_rise = st.ddu.code_rise;
    entry.code_fall = st.ddu.code_fall;
    entry.conv_code = st.conv_code;
    entry.final_max_dnl = best_dnl * unit_scale;  // report in fine LSB units
    entry.converged = best_dnl <= tol_native;
    return entry;
}

CalibReport run_foreground_calibration(AdcModel& adc, const CalibSpec& spec,
                                       RngStream& rng) {
    spec.validate();
    adc.validate();
    if (spec.ramp_points < required_points(8))
        throw Error(ErrorKind::Config,
                    "calib: ramp_points must cover the depth-8 histogram");

    CalibReport report;
    for (Polarity pol : {Polarity::Rising, Polarity::Falling}) {
        for (int k = 1; k <= 7; ++k) {
            StageCalibEntry entry = calibrate_stage(adc, k, pol, spec, rng);
            report.total_histograms += entry.iterations;
            report.per_stage.push_back(entry);
        }
    }
    return report;
}

}  // namespace tdadc
