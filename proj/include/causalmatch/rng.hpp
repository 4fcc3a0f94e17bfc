#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace causalmatch {

// Stream tags keep the draws of unrelated generation stages independent even
// when they share the run seed.
namespace stream_tag {
constexpr std::uint64_t kCoefficientPairs = 1;
constexpr std::uint64_t kReplication = 2;
constexpr std::uint64_t kOracle = 3;
constexpr std::uint64_t kModelSubsets = 4;
}  // namespace stream_tag

/// Deterministic random stream keyed by (seed, tag, index, attempt).
///
/// Every replication gets its own stream, so results do not depend on how
/// replications are scheduled across worker threads. Normal deviates use an
/// explicit Box-Muller transform rather than std::normal_distribution, whose
/// algorithm is implementation-defined and would break cross-platform
/// reproducibility of stored outputs.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0,
              std::uint64_t attempt = 0) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
            static_cast<std::uint32_t>(tag),  static_cast<std::uint32_t>(index),
            static_cast<std::uint32_t>(index >> 32), static_cast<std::uint32_t>(attempt)};
        engine_.seed(seq);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal deviate (Box-Muller, pairs cached).
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [lo, hi], inclusive, via rejection sampling.
    int uniform_int(int lo, int hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return lo + static_cast<int>(v % span);
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace causalmatch
