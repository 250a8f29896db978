#include "tdadc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace tdadc {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

void fft_radix2(std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    if (n < 2 || (n & (n - 1)) != 0)
        throw Error(ErrorKind::Config, "fft_radix2: length must be a power of two >= 2");

    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    // one table of the n/2 distinct twiddles, indexed by stride per level
    std::vector<std::complex<double>> tw(n / 2);
    for (size_t k = 0; k < n / 2; ++k) {
        const double ang = -kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        tw[k] = {std::cos(ang), std::sin(ang)};
    }

    for (size_t len = 2; len <= n; len <<= 1) {
        const size_t stride = n / len;
        for (size_t i = 0; i < n; i += len) {
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> w = tw[k * stride];
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

SpectralMetrics spectral_metrics(const std::vector<double>& samples, int signal_bin,
                                 int n_fft, Window window) {
    if (!is_pow2(n_fft) || n_fft < 8)
        throw Error(ErrorKind::Config, "spectral_metrics: n_fft must be a power of two >= 8");
    if (static_cast<int>(samples.size()) < n_fft)
        throw Error(ErrorKind::Config, "spectral_metrics: need at least n_fft samples");
    const int half = n_fft / 2;
    const int guard = window == Window::Hann ? 1 : 0;
    if (signal_bin - guard < 1 || signal_bin + guard >= half)
        throw Error(ErrorKind::Config, "spectral_metrics: signal bin out of usable range");

    double mean = 0.0;
    for (int i = 0; i < n_fft; ++i) mean += samples[i];
    mean /= n_fft;

    std::vector<std::complex<double>> buf(n_fft);
    for (int i = 0; i < n_fft; ++i) {
        double x = samples[i] - mean;
        if (window == Window::Hann)
            x *= 0.5 * (1.0 - std::cos(kTwoPi * i / n_fft));
        buf[i] = {x, 0.0};
    }
    fft_radix2(buf);

    std::vector<double> power(half + 1);
    for (int k = 0; k <= half; ++k) power[k] = std::norm(buf[k]);

    double p_sig = 0.0;
    for (int k = signal_bin - guard; k <= signal_bin + guard; ++k) p_sig += power[k];
    if (!(p_sig > 0.0))
        throw Error(ErrorKind::Statistics, "spectral_metrics: signal power is zero");

    const int noise_start = window == Window::Hann ? 2 : 1;
    double p_rest = 0.0;
    double p_spur = 0.0;
    int spur_bin = 0;
    for (int k = noise_start; k <= half; ++k) {
        if (k >= signal_bin - guard && k <= signal_bin + guard) continue;
        p_rest += power[k];
        if (power[k] > p_spur) {
            p_spur = power[k];
            spur_bin = k;
        }
    }

    SpectralMetrics m;
    m.signal_bin = signal_bin;
    m.n_fft = n_fft;
    m.spur_bin = spur_bin;
    m.sndr_db = p_rest > 0.0 ? 10.0 * std::log10(p_sig / p_rest) : 300.0;
    m.sfdr_db = p_spur > 0.0 ? 10.0 * std::log10(p_sig / p_spur) : 300.0;
    m.enob = (m.sndr_db - 1.76) / 6.02;
    if (window == Window::None && signal_bin - 1 >= 1 && signal_bin + 1 <= half)
        m.leakage_warning = power[signal_bin - 1] + power[signal_bin + 1] > 0.01 * power[signal_bin];
    return m;
}

SpectralMetrics spectral_metrics(const std::vector<int>& codes, int signal_bin,
                                 int n_fft, Window window) {
    std::vector<double> samples(codes.begin(), codes.end());
    return spectral_metrics(samples, signal_bin, n_fft, window);
}

LinearityReport code_density_linearity(const std::vector<int>& codes, int n_bits,
                                       Stimulus stimulus) {
    (void)stimulus;  // UniformRamp is the only supported drive
    if (n_bits < 2 || n_bits > 16)
        throw Error(ErrorKind::Config, "code_density_linearity: n_bits must be in [2, 16]");
    const int bins = 1 << n_bits;
    if (codes.size() < static_cast<size_t>(bins) * 64)
        throw Error(ErrorKind::Statistics,
                    "code_density_linearity: need >= 64 average hits per code");

    std::vector<long long> hist(bins, 0);
    for (int c : codes) {
        if (c < 0 || c >= bins)
            throw Error(ErrorKind::Input, "code_density_linearity: code out of range");
        ++hist[c];
    }

    long long interior_total = 0;
    for (int i = 1; i < bins - 1; ++i) interior_total += hist[i];
    const double h_bar = static_cast<double>(interior_total) / (bins - 2);
    if (!(h_bar > 0.0))
        throw Error(ErrorKind::Statistics, "code_density_linearity: empty interior histogram");

    LinearityReport rep;
    rep.dnl.reserve(bins - 2);
    rep.inl.reserve(bins - 2);
    double run = 0.0;
    for (int i = 1; i < bins - 1; ++i) {
        const double d = hist[i] / h_bar - 1.0;
        rep.dnl.push_back(d);
        run += d;
        rep.inl.push_back(run);
        rep.max_abs_dnl = std::max(rep.max_abs_dnl, std::abs(d));
        rep.max_abs_inl = std::max(rep.max_abs_inl, std::abs(run));
        if (hist[i] == 0) rep.missing_codes.push_back(i);
    }
    return rep;
}

ToggleComparison toggle_compare(long long n_delay_elements, long long n_samples) {
    if (n_delay_elements < 0 || n_samples < 0)
        throw Error(ErrorKind::Config, "toggle_compare: counts must be >= 0");

    ToggleComparison cmp;
    cmp.single.mode = ToggleMode::SingleEdge;
    cmp.single.n_delay_elements = n_delay_elements;
    cmp.single.n_samples = n_samples;
    cmp.single.transitions = 2 * n_delay_elements * n_samples;  // data edge + reset edge
    cmp.single.transitions_per_sample_per_element = 2.0;

    cmp.dual.mode = ToggleMode::DualEdge;
    cmp.dual.n_delay_elements = n_delay_elements;
    cmp.dual.n_samples = n_samples;
    cmp.dual.transitions = n_delay_elements * n_samples;  // edges alternate, no reset
    cmp.dual.transitions_per_sample_per_element = 1.0;

    // 1 - (n*s)/(2*n*s): the counts cancel, the ratio is structural
    cmp.reduction = 0.5;
    return cmp;
}

std::vector<SweepRow> dt_deviation_sweep(const AdcModel& adc_template,
                                         const std::vector<double>& sigma_grid,
                                         TimeFs jitter_sigma, int trials,
                                         RngStream& rng, const SignalSpec& stimulus,
                                         int n_samples, int workers) {
    adc_template.validate();
    if (sigma_grid.empty())
        throw Error(ErrorKind::Config, "dt_deviation_sweep: empty sigma grid");
    for (size_t i = 0; i < sigma_grid.size(); ++i) {
        if (sigma_grid[i] < 0)
            throw Error(ErrorKind::Config, "dt_deviation_sweep: sigma values must be >= 0");
        if (i > 0 && sigma_grid[i] <= sigma_grid[i - 1])
            throw Error(ErrorKind::Config, "dt_deviation_sweep: sigma grid must ascend");
    }
    if (trials < 10)
        throw Error(ErrorKind::Config, "dt_deviation_sweep: need at least 10 trials");
    if (jitter_sigma < 0)
        throw Error(ErrorKind::Config, "dt_deviation_sweep: jitter_sigma must be >= 0");
    if (stimulus.kind != SignalSpec::Kind::Sine)
        throw Error(ErrorKind::Config, "dt_deviation_sweep: stimulus must be a coherent sine");
    workers = std::clamp(workers, 1, 64);

    const std::vector<SampledInput> samples = sample_signal(stimulus, adc_template.f_s, n_samples);
    const TimeFs lsb = t_lsb(adc_template.tdc.t_fs, 8);

    const size_t n_cells = sigma_grid.size() * static_cast<size_t>(trials);
    std::vector<double> sndr(n_cells), sfdr(n_cells);

    auto run_cell = [&](size_t cell) {
        const size_t si = cell / trials;
        RngStream stream = rng.substream(cell);
        AdcModel adc = adc_template;
        adc.tdc.jitter_sigma = jitter_sigma;
        const double scale = sigma_grid[si] * lsb;
        // draw order pinned: stages 1..7 rising, then 1..7 falling
        for (int k = 0; k < 7; ++k)
            adc.tdc.stages[k].mismatch_rise += stream.gaussian(scale);
        for (int k = 0; k < 7; ++k)
            adc.tdc.stages[k].mismatch_fall += stream.gaussian(scale);
        const AdcRun run = convert_samples(adc, samples, stream);
        const SpectralMetrics m =
            spectral_metrics(codes_of(run.records), stimulus.bin, n_samples, Window::None);
        sndr[cell] = m.sndr_db;
        sfdr[cell] = m.sfdr_db;
    };

    if (workers == 1 || n_cells < 2) {
        for (size_t cell = 0; cell < n_cells; ++cell) run_cell(cell);
    } else {
        std::vector<std::thread> pool;
        const size_t n_threads = std::min<size_t>(workers, n_cells);
        for (size_t t = 0; t < n_threads; ++t) {
            pool.emplace_back([&, t] {
                for (size_t cell = t; cell < n_cells; cell += n_threads) run_cell(cell);
            });
        }
        for (auto& th : pool) th.join();
    }

    // identical trials (e.g. sigma 0, no jitter) must report the exact
    // deterministic value with zero spread, not summation roundoff
    auto stats = [trials](const double* v, double& mean, double& sd) {
        bool all_equal = true;
        for (int t = 1; t < trials; ++t) all_equal = all_equal && v[t] == v[0];
        if (all_equal) {
            mean = v[0];
            sd = 0.0;
            return;
        }
        double sum = 0.0;
        for (int t = 0; t < trials; ++t) sum += v[t];
        mean = sum / trials;
        double var = 0.0;
        for (int t = 0; t < trials; ++t) var += std::pow(v[t] - mean, 2);
        sd = trials > 1 ? std::sqrt(var / (trials - 1)) : 0.0;
    };

    std::vector<SweepRow> table;
    table.reserve(sigma_grid.size());
    for (size_t si = 0; si < sigma_grid.size(); ++si) {
        SweepRow row;
        row.sigma_dt_lsb = sigma_grid[si];
        stats(&sndr[si * trials], row.sndr_db_mean, row.sndr_db_std);
        stats(&sfdr[si * trials], row.sfdr_db_mean, row.sfdr_db_std);
        table.push_back(row);
    }
    return table;
}

}  // namespace tdadc
