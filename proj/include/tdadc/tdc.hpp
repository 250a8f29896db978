#pragma once

#include <array>
#include <utility>
#include <vector>

#include "tdadc/core.hpp"

namespace tdadc {

// Decoupled delay unit: rising- and falling-edge delays tune independently
// through 4-bit codes; residual cross-coupling is linear in the opposing
// code and bounded by the couple_* totals.
struct DduSetting {
    int code_rise = 8;
    int code_fall = 8;
    TimeFs step_rise = 0.0;   // fs per rising code
    TimeFs step_fall = 0.0;   // fs per falling code
    TimeFs couple_rf = 0.0;   // total rise shift across a full fall sweep
    TimeFs couple_fr = 0.0;   // total fall shift across a full rise sweep
    TimeFs base_rise = 0.0;
    TimeFs base_fall = 0.0;
};

struct StageConfig {
    int index = 1;            // 1..8
    TimeFs dt_nominal = 0.0;  // t_fs/2^(index+1) for stages 1..7; 0 for 8
    DduSetting ddu;
    int conv_code = 2;        // 2-bit coarse code, shared by both edges
    TimeFs conv_step_rise = 0.0;
    TimeFs conv_step_fall = 0.0;  // deliberately unequal to the rise step
    TimeFs mismatch_rise = 0.0;   // additive static error
    TimeFs mismatch_fall = 0.0;
    bool has_conventional = false;  // false exactly for stage 1
};

struct TdcConfig {
    std::array<StageConfig, 8> stages;
    TimeFs t_fs = 100000.0;
    TimeFs jitter_sigma = 0.0;      // per delay-element traversal
    TimeFs meta_window = 0.0;       // |delta| below this is metastable
    bool meta_resolver = true;      // force a deterministic decision
    TimeFs meta_latency_bound = 0.0;

    // Nominal production setup: neutral mid-scale codes, centering bases,
    // coupling at its characterized bounds, 10 fs metastable window. The
    // DDU and conventional steps scale with the requested full scale.
    static TdcConfig defaults(TimeFs t_fs = 100000.0);
    // Zero mismatch/jitter/coupling/meta_window: matches the ideal
    // quantizer exactly.
    static TdcConfig ideal(TimeFs t_fs = 100000.0);

    void validate() const;
};

struct ConversionRecord {
    int code = 0;
    Polarity polarity = Polarity::Rising;
    std::array<bool, 8> decisions{};        // MSB first
    std::array<bool, 8> metastable_flags{};
    std::array<TimeFs, 8> residuals{};      // delta_k before each comparison
    long sample_index = 0;
    bool out_of_range = false;  // |delta_1| exceeded t_fs/2; codes saturate
};

// Stage delay actually inserted for the given polarity: nominal + static
// mismatch + DDU base/code terms + opposing-code coupling + the coarse
// conventional contribution where the stage has one.
TimeFs effective_dt(const StageConfig& stage, Polarity polarity);

// Window comparator. |delta| >= meta_window decides by sign (ties up);
// inside the window the decision is forced true when the resolver is on,
// otherwise a seeded coin flip.
std::pair<bool, bool> compare(TimeFs delta, const TdcConfig& cfg, RngStream& rng);

// One 8-bit dual-edge SAR conversion. The winning side of each comparison
// is delayed by effective_dt so the residual shrinks; each stage adds three
// independent jitter draws (P common, N common, selected delay path) when
// jitter_sigma > 0. Metastable resolutions stall both edges by
// meta_latency_bound (common mode, residual preserved). Preconditions are
// the caller's (validate() once, convert millions of times).
ConversionRecord convert_pair(const EdgePair& pair, const TdcConfig& cfg, RngStream& rng);

// Converts an alternating-polarity stream (even sample_index = Rising).
// Ordering is preserved; records carry the polarity so the two synchronizer
// banks can be split out afterwards.
std::vector<ConversionRecord> convert_stream(const std::vector<EdgePair>& pairs,
                                             const TdcConfig& cfg, RngStream& rng);

struct BankStreams {
    std::vector<ConversionRecord> rising;
    std::vector<ConversionRecord> falling;
};

BankStreams split_banks(const std::vector<ConversionRecord>& records);

}  // namespace tdadc
