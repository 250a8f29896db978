#include "tdadc/tdc.hpp"

#include <cmath>

namespace tdadc {

namespace {

constexpr TimeFs kCoupleRfDefault = 220.0;  // characterized rise-under-fall bound
constexpr TimeFs kCoupleFrDefault = 90.0;   // characterized fall-under-rise bound

StageConfig make_stage(int index, TimeFs t_fs, TimeFs couple_rf, TimeFs couple_fr) {
    const TimeFs lsb = t_fs / 256.0;
    StageConfig st;
    st.index = index;
    st.dt_nominal = index <= 7 ? t_fs / std::ldexp(1.0, index + 1) : 0.0;
    st.has_conventional = index != 1;
    st.conv_code = 2;
    st.conv_step_rise = lsb;        // 390.625 fs at the 100 ps full scale
    st.conv_step_fall = 1.3 * lsb;  // conventional cells load the edges unequally
    st.ddu.code_rise = 8;
    st.ddu.code_fall = 8;
    // tuning granularity well below T_LSB: per-stage rounding residue
    // (step/2) stacks across stages in the deep histograms, so the step
    // must be fine enough to keep that buildup inside the half-LSB
    // post-calibration budget
    st.ddu.step_rise = lsb / 16.0;
    st.ddu.step_fall = lsb / 16.0;
    st.ddu.couple_rf = couple_rf;
    st.ddu.couple_fr = couple_fr;
    // bases center the whole stage so effective_dt(neutral codes) == nominal
    const double conv_r = st.has_conventional ? 2.0 * st.conv_step_rise : 0.0;
    const double conv_f = st.has_conventional ? 2.0 * st.conv_step_fall : 0.0;
    st.ddu.base_rise = -(8.0 * st.ddu.step_rise + conv_r + (8.0 / 15.0) * couple_rf);
    st.ddu.base_fall = -(8.0 * st.ddu.step_fall + conv_f + (8.0 / 15.0) * couple_fr);
    return st;
}

}  // namespace

TdcConfig TdcConfig::defaults(TimeFs t_fs) {
    TdcConfig cfg;
    cfg.t_fs = t_fs;
    cfg.jitter_sigma = 0.0;
    cfg.meta_window = 10.0;
    cfg.meta_resolver = true;
    cfg.meta_latency_bound = 0.0;
    for (int k = 1; k <= 8; ++k)
        cfg.stages[k - 1] = make_stage(k, t_fs, kCoupleRfDefault, kCoupleFrDefault);
    return cfg;
}

TdcConfig TdcConfig::ideal(TimeFs t_fs) {
    TdcConfig cfg;
    cfg.t_fs = t_fs;
    cfg.jitter_sigma = 0.0;
    cfg.meta_window = 0.0;
    cfg.meta_resolver = true;
    cfg.meta_latency_bound = 0.0;
    for (int k = 1; k <= 8; ++k)
        cfg.stages[k - 1] = make_stage(k, t_fs, 0.0, 0.0);
    return cfg;
}

void TdcConfig::validate() const {
    if (!(t_fs > 0))
        throw Error(ErrorKind::Config, "tdc: t_fs must be positive");
    if (jitter_sigma < 0)
        throw Error(ErrorKind::Config, "tdc: jitter_sigma must be >= 0");
    if (meta_window < 0)
        throw Error(ErrorKind::Config, "tdc: meta_window must be >= 0");
    if (meta_latency_bound < 0)
        throw Error(ErrorKind::Config, "tdc: meta_latency_bound must be >= 0");
    for (int k = 0; k < 8; ++k) {
        const StageConfig& st = stages[k];
        if (st.index != k + 1)
            throw Error(ErrorKind::Config, "tdc: stage indices must run 1..8 in order");
        if (st.has_conventional == (st.index == 1))
            throw Error(ErrorKind::Config,
                        "tdc: conventional cells are absent exactly on stage 1");
        if (st.index == 8 && st.dt_nominal != 0.0)
            throw Error(ErrorKind::Config, "tdc: stage 8 applies no delay");
        if (st.ddu.code_rise < 0 || st.ddu.code_rise > 15 ||
            st.ddu.code_fall < 0 || st.ddu.code_fall > 15)
            throw Error(ErrorKind::Config, "tdc: DDU codes must be in [0, 15]");
        if (st.conv_code < 0 || st.conv_code > 3)
            throw Error(ErrorKind::Config, "tdc: conv_code must be in [0, 3]");
        if (!(st.ddu.step_rise > 0) || !(st.ddu.step_fall > 0))
            throw Error(ErrorKind::Config, "tdc: DDU steps must be positive");
    }
}

TimeFs effective_dt(const StageConfig& stage, Polarity polarity) {
    if (polarity == Polarity::Rising) {
        TimeFs dt = stage.dt_nominal + stage.mismatch_rise + stage.ddu.base_rise +
                    stage.ddu.code_rise * stage.ddu.step_rise +
                    (stage.ddu.code_fall / 15.0) * stage.ddu.couple_rf;
        if (stage.has_conventional) dt += stage.conv_code * stage.conv_step_rise;
        return dt;
    }
    TimeFs dt = stage.dt_nominal + stage.mismatch_fall + stage.ddu.base_fall +
                stage.ddu.code_fall * stage.ddu.step_fall +
                (stage.ddu.code_rise / 15.0) * stage.ddu.couple_fr;
    if (stage.has_conventional) dt += stage.conv_code * stage.conv_step_fall;
    return dt;
}

std::pair<bool, bool> compare(TimeFs delta, const TdcConfig& cfg, RngStream& rng) {
    if (std::abs(delta) >= cfg.meta_window) return {delta >= 0.0, false};
    if (cfg.meta_resolver) return {true, true};
    return {rng.bernoulli(), true};
}

ConversionRecord convert_pair(const EdgePair& pair, const TdcConfig& cfg, RngStream& rng) {
    ConversionRecord rec;
    rec.polarity = pair.polarity;
    rec.sample_index = pair.sample_index;

    TimeFs t_p = pair.t_p;
    TimeFs t_n = pair.t_n;
    rec.out_of_range = std::abs(t_p - t_n) > cfg.t_fs / 2.0;
    const bool jitter = cfg.jitter_sigma > 0.0;

    int code = 0;
    for (int k = 0; k < 8; ++k) {
        const TimeFs delta = t_p - t_n;
        rec.residuals[k] = delta;
        const auto [bit, meta] = compare(delta, cfg, rng);
        rec.decisions[k] = bit;
        rec.metastable_flags[k] = meta;
        code = (code << 1) | (bit ? 1 : 0);
        if (meta && cfg.meta_latency_bound > 0.0) {
            // bounded-latency resolution stalls both pulses equally
            t_p += cfg.meta_latency_bound;
            t_n += cfg.meta_latency_bound;
        }
        if (k == 7) break;  // stage 8 only compares
        if (jitter) {
            t_p += rng.gaussian(cfg.jitter_sigma);
            t_n += rng.gaussian(cfg.jitter_sigma);
        }
        // delta >= 0 means the N edge arrived first and won the race; the
        // winning edge is handicapped so the residual contracts
        const TimeFs dt_k = effective_dt(cfg.stages[k], pair.polarity);
        TimeFs& winner = bit ? t_n : t_p;
        winner += dt_k + (jitter ? rng.gaussian(cfg.jitter_sigma) : 0.0);
    }
    rec.code = code;
    return rec;
}

std::vector<ConversionRecord> convert_stream(const std::vector<EdgePair>& pairs,
                                             const TdcConfig& cfg, RngStream& rng) {
    cfg.validate();
    std::vector<ConversionRecord> out;
    out.reserve(pairs.size());
    for (const EdgePair& pair : pairs) {
        const Polarity expected =
            pair.sample_index % 2 == 0 ? Polarity::Rising : Polarity::Falling;
        if (pair.polarity != expected)
            throw Error(ErrorKind::Input,
                        "convert_stream: polarity must alternate with sample parity "
                        "(even = rising), violated at sample " +
                            std::to_string(pair.sample_index));
        out.push_back(convert_pair(pair, cfg, rng));
    }
    return out;
}

BankStreams split_banks(const std::vector<ConversionRecord>& records) {
    BankStreams banks;
    for (const ConversionRecord& rec : records) {
        if (rec.polarity == Polarity::Rising)
            banks.rising.push_back(rec);
        else
            banks.falling.push_back(rec);
    }
    return banks;
}

}  // namespace tdadc
