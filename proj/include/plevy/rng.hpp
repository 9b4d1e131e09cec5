#pragma once
// Counter-based random number generation (Philox4x32-10).
//
// Every stream is keyed by (master seed, path, step, channel). Draws from
// distinct keys are statistically independent, and a stream replays
// identically no matter in which order paths or steps are executed. This is
// what makes multi-threaded runs bit-reproducible and common-random-number
// comparisons exact.

#include <array>
#include <cmath>
#include <cstdint>

#include "plevy/errors.hpp"

namespace plevy {

enum class RngChannel : uint32_t {
    wiener = 0,
    jump_count = 1,
    jump_mark = 2,
    jump_offset = 3,
    control = 4,
    initial = 5,
    probe = 6,
    validation = 7,
};

struct RngPolicy {
    uint64_t master_seed = 0;
};

namespace detail {

inline void philox_round(std::array<uint32_t, 4>& ctr, std::array<uint32_t, 2>& key) {
    constexpr uint64_t mul_a = 0xD2511F53ull;
    constexpr uint64_t mul_b = 0xCD9E8D57ull;
    const uint64_t prod_a = mul_a * ctr[0];
    const uint64_t prod_b = mul_b * ctr[2];
    const uint32_t hi_a = static_cast<uint32_t>(prod_a >> 32);
    const uint32_t lo_a = static_cast<uint32_t>(prod_a);
    const uint32_t hi_b = static_cast<uint32_t>(prod_b >> 32);
    const uint32_t lo_b = static_cast<uint32_t>(prod_b);
    ctr = {hi_b ^ ctr[1] ^ key[0], lo_b, hi_a ^ ctr[3] ^ key[1], lo_a};
    key[0] += 0x9E3779B9u;
    key[1] += 0xBB67AE85u;
}

inline std::array<uint32_t, 4> philox10(std::array<uint32_t, 4> ctr,
                                        std::array<uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) philox_round(ctr, key);
    return ctr;
}

}  // namespace detail

// A lazily advancing stream of doubles drawn from one Philox key.
class CounterStream {
public:
    CounterStream(RngPolicy policy, uint64_t path, uint64_t step, RngChannel channel)
        : key_{static_cast<uint32_t>(policy.master_seed),
               static_cast<uint32_t>(policy.master_seed >> 32)},
          base_{0u, static_cast<uint32_t>(step),
                static_cast<uint32_t>(path) ^ static_cast<uint32_t>(step >> 32),
                (static_cast<uint32_t>(channel) << 8) ^ static_cast<uint32_t>(path >> 32)} {}

    // Uniform draw on the open interval (0,1).
    double uniform() {
        if (buffered_ == 0) refill();
        return buffer_[--buffered_];
    }

    // Standard normal via Box-Muller; deterministic draw order.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    // Exact Poisson sampling. Means above the Knuth comfort zone are split
    // into independent halves drawn from the same stream.
    uint64_t poisson(double mean) {
        if (!(mean >= 0.0) || !std::isfinite(mean))
            throw NumericError("poisson: mean must be finite and non-negative");
        uint64_t total = 0;
        while (mean > 30.0) {
            total += poisson_knuth(15.0);
            mean -= 15.0;
        }
        return total + poisson_knuth(mean);
    }

private:
    uint64_t poisson_knuth(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        uint64_t count = 0;
        double product = uniform();
        while (product > limit) {
            ++count;
            product *= uniform();
        }
        return count;
    }

    void refill() {
        std::array<uint32_t, 4> ctr = base_;
        ctr[0] = block_++;
        const auto words = detail::philox10(ctr, key_);
        buffer_[1] = to_unit_double(words[0], words[1]);
        buffer_[0] = to_unit_double(words[2], words[3]);
        buffered_ = 2;
    }

    static double to_unit_double(uint32_t hi, uint32_t lo) {
        const uint64_t bits = (static_cast<uint64_t>(hi) << 32) | lo;
        // 53-bit mantissa, shifted into (0,1) so log() never sees zero.
        return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    std::array<uint32_t, 2> key_;
    std::array<uint32_t, 4> base_;
    uint32_t block_ = 0;
    double buffer_[2] = {0, 0};
    int buffered_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace plevy
