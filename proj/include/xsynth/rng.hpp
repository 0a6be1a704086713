#ifndef XSYNTH_RNG_HPP
#define XSYNTH_RNG_HPP

#include <cmath>
#include <cstdint>

namespace xsynth {

/// splitmix64: fast 64-bit generator with a one-word state (Steele, Lea &
/// Flood 2014; Vigna's fixed-increment variant). Used both as the per-stream
/// generator and, via its finalizer, to derive independent per-replication
/// seeds from (master_seed, index) counters.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += UINT64_C(0x9E3779B97F4A7C15));
        z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
        return z ^ (z >> 31);
    }

    /// Uniform draw on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the paired draw is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is finite.
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Seed for stream `index` under `master`. Streams are independent of how
/// many other streams exist, so parallel replications stay schedule-free.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    SplitMix64 mix(master + (index + 1) * UINT64_C(0x9E3779B97F4A7C15));
    return mix.next();
}

} // namespace xsynth

#endif
