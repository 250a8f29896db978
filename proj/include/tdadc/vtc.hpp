#pragma once

#include <vector>

#include "tdadc/core.hpp"

namespace tdadc {

// Behavioral dual-edge voltage-to-time converter. Per side, the crossing
// time is dead_time + slope * h(v) where h composes an expanding ramp
// g_expand(u) = u*(1 + expand_alpha*u^2) with an optional compressive
// pre-distortion g_comp(v) = comp_gain*((1-w)*kappa*tanh(v/kappa) + w*v),
// kappa = comp_knee*(1+comp_bias_1), w = comp_bias_2. The two bias knobs
// stand in for the back-gate trim pair of the physical stage.
struct VtcConfig {
    double slope_up = 0.0;    // fs per unit of h(), up-ramp
    double slope_down = 0.0;  // fs per unit of h(), down-ramp
    double expand_alpha = 0.0;
    double comp_gain = 1.0;
    double comp_knee = 0.25;
    double comp_bias_1 = 0.0;
    double comp_bias_2 = 0.0;
    bool comp_enabled = false;
    TimeFs dead_time = 0.0;
    TimeFs t_fs_target = 100000.0;

    // Expanding-ramp defaults reproducing the targeted transfer bow
    // (uncompensated NL 0.130, compensated 0.017, +-50 ps endpoints).
    static VtcConfig defaults();
    // Perfectly linear converter: dt = 50,000 fs * diff.
    static VtcConfig ideal();

    void validate() const;
};

struct VtcResult {
    EdgePair pair;
    bool clipped = false;  // input fell outside full scale and was clamped
};

struct VtcCurve {
    std::vector<double> inputs;  // normalized differential voltages
    std::vector<TimeFs> dt_out;
    double nl = 0.0;           // max |dt - endpoint line| / t_fs_target
    TimeFs linear_range = 0.0; // |dt| bound of the symmetric 1-LSB window
};

struct SignalSpec {
    enum class Kind { Sine, Ramp, Dc };
    Kind kind = Kind::Sine;
    double amplitude = 1.0;  // sine, fraction of full scale
    int bin = 479;           // sine, coherent bin index (coprime with n)
    double dc_value = 0.0;
};

// Converts one sample into an edge pair of the requested polarity. The
// differential drive is v_p = diff/2, v_n = -diff/2 (common mode is not
// modeled). Falling polarity inverts the crossing order (the down-ramp
// reaches the higher voltage first) and swaps the output roles, so dt is
// proportional to +diff for both polarities. Inputs beyond full scale are
// clamped and flagged rather than rejected. rng is reserved for noise
// hooks; the present model is noiseless.
VtcResult convert(const SampledInput& sample, Polarity polarity,
                  const VtcConfig& cfg, RngStream& rng);

// Noiseless transfer over a uniform diff grid; `compensated` overrides
// cfg.comp_enabled for the evaluation.
VtcCurve transfer_curve(const VtcConfig& cfg, int n_points, bool compensated);

// Refits comp_gain/comp_knee/comp_bias_2 for cfg's expand_alpha: the gain
// pins the full-scale endpoints at +-t_fs_target/2, knee and blend are
// searched to minimize NL. Returns cfg with the fitted values and
// comp_enabled set.
VtcConfig fit_compensation(const VtcConfig& cfg);

// Stimulus generation. Sine uses exact modular phase accumulation so the
// tone is bin-coherent; ramp is uniform, strictly increasing, endpoints
// inclusive at +-1. f_s is carried for rate bookkeeping only; waveform
// shape depends on (spec, n) alone.
std::vector<SampledInput> sample_signal(const SignalSpec& spec, double f_s, int n);

}  // namespace tdadc
