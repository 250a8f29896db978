#pragma once

#include <vector>

#include "tdadc/core.hpp"
#include "tdadc/tdc.hpp"
#include "tdadc/vtc.hpp"

namespace tdadc {

// Full converter: VTC front end + 8-bit SAR TDC, dual-edge ping-pong
// (even sample_index converts on the rising edge, odd on the falling).
struct AdcModel {
    VtcConfig vtc = VtcConfig::defaults();
    TdcConfig tdc = TdcConfig::defaults();
    double f_s = 12.5e9;  // samples per second

    void validate() const {
        vtc.validate();
        tdc.validate();
        if (!(f_s > 0)) throw Error(ErrorKind::Config, "adc: f_s must be positive");
    }
};

struct AdcRun {
    std::vector<ConversionRecord> records;
    long n_clipped = 0;  // samples clamped at the VTC input
};

AdcRun convert_samples(const AdcModel& adc, const std::vector<SampledInput>& samples,
                       RngStream& rng);

std::vector<int> codes_of(const std::vector<ConversionRecord>& records);

// Budget for the sampling-period lint: t_s from f_s, t_fs from the TDC.
TimingBudget derive_budget(const AdcModel& adc, TimeFs t_m, TimeFs t_reset);

}  // namespace tdadc
