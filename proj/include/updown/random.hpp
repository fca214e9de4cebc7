#pragma once

// Counter-based random streams (Philox4x32-10).
//
// Every stream is addressed by (seed, replication, subject, purpose); the draws
// a subject sees never depend on how many other subjects or replications were
// generated before it, nor on which thread generated them.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "updown/error.hpp"

namespace updown {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) noexcept {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

// Distinct stream families per subject so that, e.g., switching the effect
// model does not perturb the response draws.
enum class StreamPurpose : std::uint32_t {
    effect = 1,
    levels = 2,
    responses = 3,
    weight_simulation = 4,
    auxiliary = 5,
};

class RandomStream {
public:
    using result_type = std::uint32_t;

    RandomStream(std::uint64_t seed, std::uint32_t replication, std::uint32_t subject,
                 std::uint32_t purpose) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          replication_(replication), subject_(subject), purpose_(purpose) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return next_u32(); }

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return buffer_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1); safe for logs.
    double uniform_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Unbiased integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        require(n > 0, "uniform_index: empty range");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    // Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_open()));
        const double phi = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

private:
    void refill() {
        if (block_ == std::numeric_limits<std::uint32_t>::max())
            throw NumericalError("RandomStream: counter space exhausted");
        buffer_ = philox4x32_10({block_++, purpose_, subject_, replication_}, key_);
        pos_ = 0;
    }

    PhiloxKey key_;
    std::uint32_t replication_;
    std::uint32_t subject_;
    std::uint32_t purpose_;
    std::uint32_t block_ = 0;
    PhiloxBlock buffer_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Addresses the streams of one replication of one scenario.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint32_t replication = 0;

    [[nodiscard]] RandomStream stream(std::uint32_t subject, StreamPurpose purpose) const noexcept {
        return RandomStream(seed, replication, subject, static_cast<std::uint32_t>(purpose));
    }
};

}  // namespace updown
