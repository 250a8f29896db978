#include "tdadc/vtc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tdadc {

namespace {

double g_expand(double u, double alpha) { return u * (1.0 + alpha * u * u); }

double g_comp(double v, const VtcConfig& cfg) {
    const double kappa = cfg.comp_knee * (1.0 + cfg.comp_bias_1);
    const double w = cfg.comp_bias_2;
    return cfg.comp_gain * ((1.0 - w) * kappa * std::tanh(v / kappa) + w * v);
}

double h_model(double v, const VtcConfig& cfg, bool compensated) {
    return g_expand(compensated ? g_comp(v, cfg) : v, cfg.expand_alpha);
}

// dt of one conversion: slope * (h(v_p) - h(v_n)); shared by both
// polarities after the falling-edge role swap.
double dt_model(double diff, const VtcConfig& cfg, bool compensated, double slope) {
    return slope * (h_model(diff / 2.0, cfg, compensated) -
                    h_model(-diff / 2.0, cfg, compensated));
}

// Solves u*(1 + alpha*u^2) = rhs for u (monotone cubic, Newton).
double expand_inverse(double rhs, double alpha) {
    double u = rhs;
    for (int i = 0; i < 64; ++i) {
        const double f = u * (1.0 + alpha * u * u) - rhs;
        const double fp = 1.0 + 3.0 * alpha * u * u;
        const double step = f / fp;
        u -= step;
        if (std::abs(step) < 1e-15) break;
    }
    return u;
}

// Gain that keeps the compensated full-scale endpoints at +-t_fs_target/2:
// dt(1) = 2 * slope * h(1/2), so each side carries a quarter of t_fs.
double pinned_gain(double knee, double w, double alpha, double slope, double t_fs_target) {
    const double target = expand_inverse(t_fs_target / (4.0 * slope), alpha);
    const double base = (1.0 - w) * knee * std::tanh(0.5 / knee) + w * 0.5;
    return target / base;
}

double curve_nl(const std::vector<double>& inputs, const std::vector<double>& dt,
                double t_fs_target) {
    const double x0 = inputs.front(), x1 = inputs.back();
    const double y0 = dt.front(), y1 = dt.back();
    const double m = (y1 - y0) / (x1 - x0);
    double worst = 0.0;
    for (size_t i = 0; i < inputs.size(); ++i) {
        const double fit = y0 + m * (inputs[i] - x0);
        worst = std::max(worst, std::abs(dt[i] - fit));
    }
    return worst / t_fs_target;
}

}  // namespace

VtcConfig VtcConfig::defaults() {
    VtcConfig cfg;
    // Fit output: endpoints exactly +-50,000 fs, uncompensated NL 0.130,
    // compensated NL 0.017 with the knee/gain/blend below.
    cfg.slope_up = 16225.009252406897;
    cfg.slope_down = 16225.009252406897;
    cfg.expand_alpha = 8.326649365104739;
    cfg.comp_gain = 2.118761997104467;
    cfg.comp_knee = 0.17096636225977707;
    cfg.comp_bias_1 = 0.0;
    cfg.comp_bias_2 = 0.2;
    cfg.comp_enabled = true;
    cfg.dead_time = 0.0;
    cfg.t_fs_target = 100000.0;
    return cfg;
}

VtcConfig VtcConfig::ideal() {
    VtcConfig cfg;
    cfg.slope_up = 50000.0;
    cfg.slope_down = 50000.0;
    cfg.expand_alpha = 0.0;
    cfg.comp_gain = 1.0;
    cfg.comp_knee = 0.25;
    cfg.comp_bias_1 = 0.0;
    cfg.comp_bias_2 = 0.0;
    cfg.comp_enabled = false;
    cfg.dead_time = 0.0;
    cfg.t_fs_target = 100000.0;
    return cfg;
}

void VtcConfig::validate() const {
    if (!(slope_up > 0) || !(slope_down > 0))
        throw Error(ErrorKind::Config, "vtc: slopes must be positive");
    if (expand_alpha < 0)
        throw Error(ErrorKind::Config, "vtc: expand_alpha must be >= 0");
    if (!(comp_knee > 0))
        throw Error(ErrorKind::Config, "vtc: comp_knee must be positive");
    if (dead_time < 0)
        throw Error(ErrorKind::Config, "vtc: dead_time must be >= 0");
    if (!(t_fs_target > 0))
        throw Error(ErrorKind::Config, "vtc: t_fs_target must be positive");
}

VtcResult convert(const SampledInput& sample, Polarity polarity,
                  const VtcConfig& cfg, RngStream& rng) {
    (void)rng;
    cfg.validate();
    if (!std::isfinite(sample.diff))
        throw Error(ErrorKind::Input, "vtc: non-finite sample");

    VtcResult out;
    double diff = sample.diff;
    if (diff > 1.0 || diff < -1.0) {
        out.clipped = true;
        diff = std::clamp(diff, -1.0, 1.0);
    }
    const double v_p = diff / 2.0;
    const double v_n = -diff / 2.0;
    const bool comp = cfg.comp_enabled;

    out.pair.polarity = polarity;
    if (polarity == Polarity::Rising) {
        // up-ramp: the lowest voltage is crossed first
        const double floor_h = h_model(-0.5, cfg, comp);
        out.pair.t_p = cfg.dead_time + cfg.slope_up * (h_model(v_p, cfg, comp) - floor_h);
        out.pair.t_n = cfg.dead_time + cfg.slope_up * (h_model(v_n, cfg, comp) - floor_h);
    } else {
        // down-ramp: the highest voltage is crossed first; output roles are
        // swapped so dt keeps the +diff sign convention downstream
        const double ceil_h = h_model(0.5, cfg, comp);
        const double cross_p = cfg.dead_time + cfg.slope_down * (ceil_h - h_model(v_p, cfg, comp));
        const double cross_n = cfg.dead_time + cfg.slope_down * (ceil_h - h_model(v_n, cfg, comp));
        out.pair.t_p = cross_n;
        out.pair.t_n = cross_p;
    }
    return out;
}

VtcCurve transfer_curve(const VtcConfig& cfg, int n_points, bool compensated) {
    cfg.validate();
    if (n_points < 8)
        throw Error(ErrorKind::Config, "transfer_curve: n_points must be >= 8");

    VtcCurve curve;
    curve.inputs.resize(n_points);
    curve.dt_out.resize(n_points);
    for (int i = 0; i < n_points; ++i) {
        const double diff = -1.0 + 2.0 * i / (n_points - 1);
        curve.inputs[i] = diff;
        curve.dt_out[i] = dt_model(diff, cfg, compensated, cfg.slope_up);
    }
    curve.nl = curve_nl(curve.inputs, curve.dt_out, cfg.t_fs_target);

    // largest symmetric |diff| window where the endpoint-line deviation
    // stays within one 8-bit LSB; reported as the |dt| reach of that window
    const double lsb = t_lsb(cfg.t_fs_target, 8);
    const double x0 = curve.inputs.front(), y0 = curve.dt_out.front();
    const double m = (curve.dt_out.back() - y0) / (curve.inputs.back() - x0);
    std::vector<size_t> order(curve.inputs.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return std::abs(curve.inputs[a]) < std::abs(curve.inputs[b]);
    });
    TimeFs reach = 0.0;
    for (size_t idx : order) {
        const double dev = std::abs(curve.dt_out[idx] - (y0 + m * (curve.inputs[idx] - x0)));
        if (dev > lsb) break;
        reach = std::max(reach, std::abs(curve.dt_out[idx]));
    }
    curve.linear_range = reach;
    return curve;
}

VtcConfig fit_compensation(const VtcConfig& cfg) {
    cfg.validate();
    const int n_pts = 257;
    std::vector<double> grid(n_pts);
    for (int i = 0; i < n_pts; ++i) grid[i] = -1.0 + 2.0 * i / (n_pts - 1);

    auto nl_of = [&](double knee, double w) {
        VtcConfig trial = cfg;
        trial.comp_knee = knee;
        trial.comp_bias_1 = 0.0;
        trial.comp_bias_2 = w;
        trial.comp_gain = pinned_gain(knee, w, cfg.expand_alpha, cfg.slope_up, cfg.t_fs_target);
        std::vector<double> dt(n_pts);
        for (int i = 0; i < n_pts; ++i)
            dt[i] = dt_model(grid[i], trial, true, trial.slope_up);
        return curve_nl(grid, dt, cfg.t_fs_target);
    };

    double best_nl = 1e300, best_knee = 0.25, best_w = 0.0;
    for (int wi = 0; wi <= 10; ++wi) {
        const double w = 0.05 * wi;
        for (int ki = 0; ki < 48; ++ki) {
            const double knee = 0.03 * std::pow(1.5 / 0.03, ki / 47.0);
            const double v = nl_of(knee, w);
            if (v < best_nl) {
                best_nl = v;
                best_knee = knee;
                best_w = w;
            }
        }
    }
    // golden-section refine the knee at the winning blend
    double lo = best_knee / 1.25, hi = best_knee * 1.25;
    const double gr = 0.6180339887498949;
    double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
    double fa = nl_of(a, best_w), fb = nl_of(b, best_w);
    for (int i = 0; i < 60; ++i) {
        if (fa < fb) {
            hi = b; b = a; fb = fa;
            a = hi - gr * (hi - lo);
            fa = nl_of(a, best_w);
        } else {
            lo = a; a = b; fa = fb;
            b = lo + gr * (hi - lo);
            fb = nl_of(b, best_w);
        }
    }
    const double knee = (fa < fb) ? a : b;

    VtcConfig out = cfg;
    out.comp_knee = knee;
    out.comp_bias_1 = 0.0;
    out.comp_bias_2 = best_w;
    out.comp_gain = pinned_gain(knee, best_w, cfg.expand_alpha, cfg.slope_up, cfg.t_fs_target);
    out.comp_enabled = true;
    return out;
}

std::vector<SampledInput> sample_signal(const SignalSpec& spec, double f_s, int n) {
    (void)f_s;
    if (n < 1)
        throw Error(ErrorKind::Config, "sample_signal: n must be >= 1");

    std::vector<SampledInput> out;
    out.reserve(n);
    switch (spec.kind) {
        case SignalSpec::Kind::Sine: {
            if (spec.amplitude > 1.0 || spec.amplitude < 0.0)
                throw Error(ErrorKind::Config, "sample_signal: sine amplitude must be in [0, 1]");
            if (spec.bin < 1 || spec.bin >= n)
                throw Error(ErrorKind::Config, "sample_signal: sine bin must be in [1, n-1]");
            if (std::gcd(spec.bin, n) != 1)
                throw Error(ErrorKind::Config, "sample_signal: sine bin must be coprime with n");
            const double two_pi = 6.283185307179586476925286766559;
            for (int i = 0; i < n; ++i) {
                // exact modular phase; no large-angle precision loss
                const long long k = (static_cast<long long>(i) * spec.bin) % n;
                out.push_back(SampledInput::from_diff(
                    spec.amplitude * std::sin(two_pi * k / n)));
            }
            break;
        }
        case SignalSpec::Kind::Ramp: {
            if (n < 2)
                throw Error(ErrorKind::Config, "sample_signal: ramp needs n >= 2");
            for (int i = 0; i < n; ++i)
                out.push_back(SampledInput::from_diff(-1.0 + 2.0 * i / (n - 1)));
            break;
        }
        case SignalSpec::Kind::Dc: {
            if (spec.dc_value > 1.0 || spec.dc_value < -1.0)
                throw Error(ErrorKind::Config, "sample_signal: dc value must be in [-1, 1]");
            for (int i = 0; i < n; ++i)
                out.push_back(SampledInput::from_diff(spec.dc_value));
            break;
        }
    }
    return out;
}

}  // namespace tdadc
