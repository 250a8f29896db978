#include "tdadc/core.hpp"

#include <cmath>

namespace tdadc {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Config: return "config";
        case ErrorKind::Statistics: return "statistics";
        case ErrorKind::Input: return "input";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return 2;
        case ErrorKind::Config: return 3;
        case ErrorKind::Statistics: return 4;
        case ErrorKind::Input: return 5;
        case ErrorKind::Io: return 6;
    }
    return 1;
}

int ideal_quantize(TimeFs dt, TimeFs t_fs, int n_bits) {
    if (n_bits < 1 || n_bits > 16)
        throw Error(ErrorKind::Config, "ideal_quantize: n_bits must be in [1, 16]");
    if (!(t_fs > 0))
        throw Error(ErrorKind::Config, "ideal_quantize: t_fs must be positive");
    const double lsb = t_fs / static_cast<double>(1 << n_bits);
    const double idx = std::floor((dt + t_fs / 2.0) / lsb);
    const double top = static_cast<double>((1 << n_bits) - 1);
    if (idx < 0.0) return 0;
    if (idx > top) return (1 << n_bits) - 1;
    return static_cast<int>(idx);
}

TimeFs t_lsb(TimeFs t_fs, int n_bits) {
    if (n_bits < 1)
        throw Error(ErrorKind::Config, "t_lsb: n_bits must be >= 1");
    if (!(t_fs > 0))
        throw Error(ErrorKind::Config, "t_lsb: t_fs must be positive");
    return t_fs / std::ldexp(1.0, n_bits);
}

bool timing_feasible(const TimingBudget& b, bool reset_free) {
    if (b.t_s < 0 || b.t_fs < 0 || b.t_m < 0 || b.t_reset < 0)
        throw Error(ErrorKind::Config, "timing_feasible: budget fields must be >= 0");
    if (b.t_reset > b.t_m)
        throw Error(ErrorKind::Config, "timing_feasible: t_reset exceeds t_m");
    const TimeFs margin = reset_free ? (b.t_m - b.t_reset) : b.t_m;
    return b.t_s >= b.t_fs / 2.0 + margin;
}

}  // namespace tdadc
