#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tdadc {

// All times are real-valued femtoseconds. double gives ~0.1 afs resolution
// at the +-1e9 fs extremes of the working range.
using TimeFs = double;

enum class Polarity { Rising, Falling };

inline const char* to_string(Polarity p) {
    return p == Polarity::Rising ? "rising" : "falling";
}

enum class ErrorKind { Parse, Config, Statistics, Input, Io };

// One error taxonomy for every module; the harness maps kinds onto named
// process exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

const char* to_string(ErrorKind kind);
int exit_code(ErrorKind kind);

struct TimingBudget {
    TimeFs t_s = 0.0;      // sample period
    TimeFs t_fs = 0.0;     // full-scale peak-to-peak time interval
    TimeFs t_m = 0.0;      // minimum pulse width
    TimeFs t_reset = 0.0;  // portion of t_m attributable to reset
};

struct EdgePair {
    TimeFs t_p = 0.0;
    TimeFs t_n = 0.0;
    Polarity polarity = Polarity::Rising;
    long sample_index = 0;

    TimeFs dt() const { return t_p - t_n; }
};

struct SampledInput {
    double v_sh_p = 0.0;  // normalized, [-1, +1] halves of the pair
    double v_sh_n = 0.0;
    double diff = 0.0;    // v_sh_p - v_sh_n

    static SampledInput from_diff(double d) { return {d / 2.0, -d / 2.0, d}; }
};

// Deterministic stream RNG: xoshiro256++ seeded through splitmix64 from
// (master_seed, stream_id). Identical identity gives identical sequences on
// every platform; distinct stream ids are independent for simulation
// purposes. Gaussian via Box-Muller (cached spare), uniform via the 53-bit
// mantissa construction. Hand-pinned because the std <random> distributions
// are implementation-defined.
struct RngStream {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;

    RngStream() { reseed(); }
    RngStream(std::uint64_t master, std::uint64_t stream)
        : master_seed(master), stream_id(stream) {
        reseed();
    }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    void reseed() {
        std::uint64_t x = master_seed;
        std::uint64_t salt = stream_id;
        x ^= splitmix64(salt);
        for (auto& word : s_) word = splitmix64(x);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // state must be nonzero
        have_spare_ = false;
        spare_ = 0.0;
    }

    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t next_u64() {
        std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1) with full 53-bit resolution
    double uniform01() { return (next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli() { return (next_u64() >> 63) != 0; }

    double gaussian(double sigma) {
        if (have_spare_) {
            have_spare_ = false;
            return spare_ * sigma;
        }
        double u1 = 1.0 - uniform01();  // (0, 1]; keeps log() finite
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta) * sigma;
    }

    // Independent child stream; derivation is pure hashing, so substreams
    // taken in any order or in parallel are identical.
    RngStream substream(std::uint64_t key) const {
        std::uint64_t k = key;
        std::uint64_t derived = stream_id ^ splitmix64(k);
        std::uint64_t d2 = derived;
        return RngStream(master_seed, splitmix64(d2));
    }

private:
    std::uint64_t s_[4] = {};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Ground-truth mid-rise quantizer: clamp(floor((dt + t_fs/2) / lsb), 0,
// 2^n - 1). Exact-boundary ties resolve upward, matching the comparator's
// delta >= 0 convention.
int ideal_quantize(TimeFs dt, TimeFs t_fs, int n_bits);

TimeFs t_lsb(TimeFs t_fs, int n_bits);

// Eq-style budget check: t_s >= t_fs/2 + t_m, with t_m reduced by t_reset
// when the reset-free variant is requested.
bool timing_feasible(const TimingBudget& b, bool reset_free = false);

}  // namespace tdadc
