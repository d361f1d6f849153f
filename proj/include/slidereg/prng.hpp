#pragma once

#include <cmath>
#include <cstdint>

namespace slidereg {

// Portable deterministic random stream. The exact bit sequence is a contract:
// benchmark bundles and bootstrap replicates must reproduce across platforms
// and implementations.
//
//   state' = state * 6364136223846793005 + 1442695040888963407   (mod 2^64)
//   output = high 32 bits of state'
//
// A stream is seeded by one LCG step over seed XOR (stream_id * odd constant),
// so distinct stream ids diverge immediately.
class PrngStream {
public:
    PrngStream(std::uint64_t seed, std::uint64_t stream_id)
        : state_(step(seed ^ (stream_id * 0x9E3779B97F4A7C15ull))) {}

    std::uint32_t next_u32() {
        state_ = step(state_);
        return static_cast<std::uint32_t>(state_ >> 32);
    }

    // Uniform in [0, 1).
    double uniform() { return next_u32() * 0x1.0p-32; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n) via the multiply-shift reduction; one u32
    // draw per call regardless of n (n < 2^32).
    std::uint32_t uniform_int(std::uint32_t n) {
        return static_cast<std::uint32_t>((static_cast<std::uint64_t>(next_u32()) * n) >> 32);
    }

    // Standard normal via Box-Muller. Draws two u32 per pair; u1 is offset by
    // half a ulp so log never sees zero. The second variate is cached.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = (next_u32() + 0.5) * 0x1.0p-32;
        double u2 = (next_u32() + 0.5) * 0x1.0p-32;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t step(std::uint64_t s) {
        return s * 6364136223846793005ull + 1442695040888963407ull;
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Named stream ids so independent draws never share a sequence.
namespace stream {
inline constexpr std::uint64_t blobs = 1;
inline constexpr std::uint64_t texture = 2;
inline constexpr std::uint64_t speckle = 3;
inline constexpr std::uint64_t pixel_noise = 4;
inline constexpr std::uint64_t warp = 5;
inline constexpr std::uint64_t stain = 6;
inline constexpr std::uint64_t landmarks = 7;
inline constexpr std::uint64_t annotator1 = 8;
inline constexpr std::uint64_t annotator2 = 9;
inline constexpr std::uint64_t ransac = 10;
inline constexpr std::uint64_t bootstrap_base = 1000; // replicate r uses bootstrap_base + r
} // namespace stream

} // namespace slidereg
