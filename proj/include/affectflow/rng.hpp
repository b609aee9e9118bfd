#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace affectflow {

/// Counter-based deterministic RNG built on SplitMix64.
///
/// Streams are addressed, not shared: `Rng::stream(seed, a, b, ...)` derives an
/// independent generator from a root seed and a tuple of stream ids, so work
/// split across threads (per window, per replicate, per subject) reproduces
/// the same draws regardless of scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t state) : state_(state) {}

    /// Derive an independent stream from a root seed and up to four ids.
    static Rng stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                      std::uint64_t c = 0, std::uint64_t d = 0) {
        std::uint64_t s = mix(seed ^ 0x9e3779b97f4a7c15ULL);
        s = mix(s ^ mix(a + 0xbf58476d1ce4e5b9ULL));
        s = mix(s ^ mix(b + 0x94d049bb133111ebULL));
        s = mix(s ^ mix(c + 0xd6e8feb86659fd93ULL));
        s = mix(s ^ mix(d + 0xa0761d6478bd642fULL));
        return Rng(s);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Lemire's multiply-shift rejection method: unbiased.
        std::uint64_t x = next_u64();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            std::uint64_t t = (0 - n) % n;
            while (lo < t) {
                x = next_u64();
                m = static_cast<unsigned __int128>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal draw (Box-Muller, no cached spare so call order is
    /// exactly two uniforms per draw).
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
};

} // namespace affectflow
