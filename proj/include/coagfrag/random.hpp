#pragma once

#include <cmath>
#include <cstdint>

namespace coagfrag {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Per-replicate seed derived from an ensemble base seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t replicate) noexcept {
    return mix64(base_seed + kGoldenGamma * (replicate + 1));
}

/// Purpose tags keeping the trajectory stream independent of any auxiliary
/// Monte Carlo (drift, generator evaluation, ...) run against the same seed.
enum class StreamTag : std::uint64_t {
    kWait = 1,       ///< holding-time exponentials, addressed by jump index
    kChain = 2,      ///< embedded-chain sampling (event selection, fragments, ...)
    kDrift = 3,      ///< drift Monte Carlo
    kGenerator = 4,  ///< generator-identity Monte Carlo
    kProbe = 5,      ///< miscellaneous test probes
};

/// Counter-addressable uniform stream: draw i of the stream keyed by
/// (seed, replicate, tag) is a pure function of (seed, replicate, tag, i),
/// so results are bitwise reproducible regardless of scheduling.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t replicate, StreamTag tag) noexcept {
        std::uint64_t k = mix64(seed + kGoldenGamma);
        k = mix64(k ^ (replicate + 2 * kGoldenGamma));
        key_ = mix64(k ^ (static_cast<std::uint64_t>(tag) + 3 * kGoldenGamma));
    }

    /// Uniform in [0, 1) at an explicit draw index.
    double uniform_at(std::uint64_t draw_index) const noexcept {
        const std::uint64_t bits = mix64(key_ + (draw_index + 1) * kGoldenGamma);
        return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }

    /// Unit-mean exponential by inverse CDF, -ln(1-U), at an explicit draw index.
    double exponential_at(std::uint64_t draw_index) const noexcept {
        return -std::log1p(-uniform_at(draw_index));
    }

    double uniform() noexcept { return uniform_at(counter_++); }
    double exponential() noexcept { return exponential_at(counter_++); }

    /// Uniform strictly inside (0, 1).
    double uniform_open() noexcept {
        const double u = uniform();
        return u > 0.0 ? u : 0x1.0p-53;
    }

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace coagfrag
