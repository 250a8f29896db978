#pragma once

#include <vector>

#include "tdadc/adc.hpp"
#include "tdadc/core.hpp"

namespace tdadc {

enum class SearchStrategy { Exhaustive, Greedy };

struct CalibSpec {
    // Tolerance in full-resolution (8-bit) LSB units. Shallow-depth
    // histograms compare against tolerance * 2^depth / 2^8 so the criterion
    // means the same thing at every depth. The default sits above the
    // search's achievable floor (upstream tuning residue plus histogram
    // granularity) but well below half an LSB, so accepted stages can never
    // stack past the end-to-end linearity budget.
    double dnl_tolerance = 0.2;
    int ramp_points = 32768;  // = 64 * 2^9, the depth-8 requirement
    int max_iterations_per_stage = 64;
    SearchStrategy search_strategy = SearchStrategy::Exhaustive;

    void validate() const;
};

struct StageCalibEntry {
    int stage = 0;
    Polarity polarity = Polarity::Rising;
    int iterations = 0;  // histograms acquired for this stage
    int code_rise = 0;
    int code_fall = 0;
    int conv_code = 0;
    double final_max_dnl = 0.0;  // full-resolution LSB units, at this stage's depth
    bool converged = false;
};

struct CalibReport {
    std::vector<StageCalibEntry> per_stage;
    long total_histograms = 0;

    bool all_converged() const {
        for (const auto& e : per_stage)
            if (!e.converged) return false;
        return true;
    }
};

// Ramp-histogram DNL with only the top bit_depth bits enabled: drives a
// full-scale ramp through the whole converter, keeps the requested
// polarity's samples, truncates codes to bit_depth bits and returns
// h_i/h_bar - 1 over the interior codes. Depth 1 has no interior and
// returns an empty array.
std::vector<double> partial_dnl(const AdcModel& adc, int bit_depth, Polarity polarity,
                                const CalibSpec& spec, RngStream& rng);

// Tunes stage k (1..7) for one polarity at bit_depth k+1. The search space
// is the polarity's 4-bit DDU code, joined by the 2-bit conventional code
// when the stage has one and the Rising bank is being calibrated (the
// conventional cells touch both edges, so the first-calibrated bank owns
// them). Current codes are evaluated first and win all ties; Exhaustive
// takes the argmin of the remaining space, Greedy hill-climbs. Requires
// stages 1..k-1 of this polarity already calibrated.
StageCalibEntry calibrate_stage(AdcModel& adc, int k, Polarity polarity,
                                const CalibSpec& spec, RngStream& rng);

// Full foreground pass: Rising bank stages 1..7, then Falling. Mutates the
// ADC's tuning codes in place and reports per-stage outcomes.
CalibReport run_foreground_calibration(AdcModel& adc, const CalibSpec& spec,
                                       RngStream& rng);

}  // namespace tdadc
