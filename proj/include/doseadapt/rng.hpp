#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace doseadapt::rng {

// SplitMix64 step (Steele, Lea, Flood 2014). Used both as the output
// function of Stream and to mix seeds into stream states.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Counter-derived random stream: the state for (seed, stream, substream)
/// is a pure function of its arguments, so stream b of a permutation loop
/// or replicate s of a simulation is reproducible regardless of which
/// thread runs it.
class Stream {
public:
    explicit Stream(std::uint64_t seed, std::uint64_t stream = 0,
                    std::uint64_t substream = 0) {
        std::uint64_t s = seed;
        state_ = splitmix64(s);
        s ^= stream * 0xD1B54A32D192ED03ull + 0x8BB84B93962EACC9ull;
        state_ ^= splitmix64(s);
        s ^= substream * 0xDB4F0B9175AE2165ull + 0xBB67AE8584CAA73Bull;
        state_ ^= splitmix64(s);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Multiply-shift map; bias is O(n / 2^64).
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Standard normal via Box-Muller (pairwise, spare cached).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double next_normal(double mean, double sd) {
        return mean + sd * next_normal();
    }

    /// In-place Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace doseadapt::rng
