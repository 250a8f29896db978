#pragma once

#include <complex>
#include <vector>

#include "tdadc/adc.hpp"
#include "tdadc/core.hpp"

namespace tdadc {

// In-place iterative radix-2 FFT (forward, power-of-two length only).
// Hand-pinned so spectra are bit-identical across platforms and worker
// counts; a planned library FFT cannot promise that.
void fft_radix2(std::vector<std::complex<double>>& a);

enum class Window { None, Hann };

struct SpectralMetrics {
    double sndr_db = 0.0;
    double sfdr_db = 0.0;
    double enob = 0.0;  // (sndr - 1.76) / 6.02
    int signal_bin = 0;
    int n_fft = 0;
    int spur_bin = 0;
    bool leakage_warning = false;  // non-coherent tone under window None
};

// Single-tone metrics over the first n_fft samples. DC is removed; with no
// window the signal is the exact bin and noise+distortion is every other
// bin 1..n/2; Hann integrates the signal over bin +-1 and excludes bins 0-1
// from the noise sum.
SpectralMetrics spectral_metrics(const std::vector<double>& samples, int signal_bin,
                                 int n_fft, Window window);
SpectralMetrics spectral_metrics(const std::vector<int>& codes, int signal_bin,
                                 int n_fft, Window window);

enum class Stimulus { UniformRamp };

struct LinearityReport {
    std::vector<double> dnl;  // interior codes only, LSB units
    std::vector<double> inl;  // running sum of dnl
    double max_abs_dnl = 0.0;
    double max_abs_inl = 0.0;
    std::vector<int> missing_codes;
};

// Histogram DNL/INL from a uniform full-scale ramp record. Endpoint codes
// are excluded (standard code-density practice); needs >= 64 average hits
// per code.
LinearityReport code_density_linearity(const std::vector<int>& codes, int n_bits,
                                       Stimulus stimulus);

enum class ToggleMode { SingleEdge, DualEdge };

struct ToggleReport {
    ToggleMode mode = ToggleMode::SingleEdge;
    long long n_delay_elements = 0;
    long long n_samples = 0;
    long long transitions = 0;
    double transitions_per_sample_per_element = 0.0;
};

struct ToggleComparison {
    ToggleReport single;
    ToggleReport dual;
    // 1 - dual/single; structurally 0.5 at the delay-element level. The
    // measured chain-level figure of ~40% includes overhead outside the
    // chain, so 0.5 is the bound.
    double reduction = 0.0;
};

ToggleComparison toggle_compare(long long n_delay_elements, long long n_samples);

struct SweepRow {
    double sigma_dt_lsb = 0.0;
    double sndr_db_mean = 0.0;
    double sndr_db_std = 0.0;
    double sfdr_db_mean = 0.0;
    double sfdr_db_std = 0.0;
};

// Monte Carlo over uncorrectable per-stage, per-polarity delay deviations
// drawn from N(0, sigma_dt * T_LSB), applied on top of any tuned codes.
// Each (sigma, trial) cell gets its own substream keyed by cell index, so
// results are independent of worker count and assembly order is stable.
std::vector<SweepRow> dt_deviation_sweep(const AdcModel& adc_template,
                                         const std::vector<double>& sigma_grid,
                                         TimeFs jitter_sigma, int trials,
                                         RngStream& rng, const SignalSpec& stimulus,
                                         int n_samples, int workers = 1);

}  // namespace tdadc
