#include "tdadc/adc.hpp"

namespace tdadc {

AdcRun convert_samples(const AdcModel& adc, const std::vector<SampledInput>& samples,
                       RngStream& rng) {
    adc.validate();
    AdcRun run;
    run.records.reserve(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        const Polarity pol = i % 2 == 0 ? Polarity::Rising : Polarity::Falling;
        VtcResult front = convert(samples[i], pol, adc.vtc, rng);
        if (front.clipped) ++run.n_clipped;
        front.pair.sample_index = static_cast<long>(i);
        run.records.push_back(convert_pair(front.pair, adc.tdc, rng));
    }
    return run;
}

std::vector<int> codes_of(const std::vector<ConversionRecord>& records) {
    std::vector<int> codes;
    codes.reserve(records.size());
    for (const ConversionRecord& rec : records) codes.push_back(rec.code);
    return codes;
}

TimingBudget derive_budget(const AdcModel& adc, TimeFs t_m, TimeFs t_reset) {
    TimingBudget b;
    b.t_s = 1e15 / adc.f_s;
    b.t_fs = adc.tdc.t_fs;
    b.t_m = t_m;
    b.t_reset = t_reset;
    return b;
}

}  // namespace tdadc
