#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace seek::rng {

// Counter-based generator: Philox4x32-10 (multipliers 0xD2511F53 /
// 0xCD9E8D57, Weyl constants 0x9E3779B9 / 0xBB67AE85, 10 rounds).
//
// Every random quantity in a run is addressed, not sequenced: a draw is
// identified by (key, counter) where the 64-bit key is the seed and the
// 128-bit counter encodes (block, domain, a, b).  Streams with distinct
// (domain, a, b) prefixes never overlap, so trials may run in any order
// or in parallel and still reproduce byte-identical results.
//
// Substream layout used by this project:
//   domain 1: seed splitting (a = low word of index, b = high word)
//   domain 2: measurement noise (a = step, b = agent)
//   domain 3: disturbance vector generation (a = vector id)
//   domain 4: initial field generation
//   domain 9: test-local streams

struct Block {
    std::array<std::uint32_t, 4> w;
};

inline Block philox4x32_10(std::array<std::uint32_t, 4> ctr,
                           std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t m0 = 0xD2511F53u;
    constexpr std::uint32_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += w0;
            key[1] += w1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return Block{ctr};
}

namespace domain {
inline constexpr std::uint32_t split = 1;
inline constexpr std::uint32_t noise = 2;
inline constexpr std::uint32_t disturbance = 3;
inline constexpr std::uint32_t init_field = 4;
inline constexpr std::uint32_t testing = 9;
}  // namespace domain

/// One addressed substream.  Blocks are consumed in increasing block
/// index; outputs within a block are consumed in word order.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint32_t dom, std::uint32_t a,
           std::uint32_t b)
        : key_{static_cast<std::uint32_t>(seed),
               static_cast<std::uint32_t>(seed >> 32)},
          prefix_{dom, a, b} {}

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return buf_.w[static_cast<std::size_t>(pos_++)];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return lo | (hi << 32);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double next_range(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Standard normal via Box-Muller; the paired value is cached.
    double next_gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is finite.
        const double u1 =
            (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    void refill() {
        buf_ = philox4x32_10({block_, prefix_[0], prefix_[1], prefix_[2]},
                             key_);
        ++block_;
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 3> prefix_;
    std::uint32_t block_ = 0;
    Block buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Derives an independent 64-bit seed from a master seed, e.g. one per
/// trial.  split(m, i) == split(m, j) only if i == j.
inline std::uint64_t split(std::uint64_t master, std::uint64_t index) {
    const Block b = philox4x32_10({0, domain::split,
                                   static_cast<std::uint32_t>(index),
                                   static_cast<std::uint32_t>(index >> 32)},
                                  {static_cast<std::uint32_t>(master),
                                   static_cast<std::uint32_t>(master >> 32)});
    return static_cast<std::uint64_t>(b.w[0]) |
           (static_cast<std::uint64_t>(b.w[1]) << 32);
}

}  // namespace seek::rng
