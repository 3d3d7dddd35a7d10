#ifndef TSAD_RNG_HPP
#define TSAD_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

#include "tsad/errors.hpp"

namespace tsad {

// Counter-based deterministic random stream (SplitMix64 core).
//
// Every source of randomness in the pipeline is a stream addressed by a path
// of tags below a single root seed:
//
//   root --child(tag)--> series stream --child--> member stream --child--> ...
//
// child() derives from the seed the stream was constructed with, never from
// the evolving state, so the stream tree is a pure function of
// (root seed, tag path). This is what makes parallel ensemble training
// reproduce the sequential results bit for bit: each worker owns streams
// addressed by index, not by execution order.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), state_(seed) {}

    // SplitMix64 finalizer.
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    // Uniform in [0,1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Unbiased uniform integer in [0, bound) via rejection.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0)
            throw ArgumentError("next_below: bound must be positive");
        const std::uint64_t limit = bound * (~std::uint64_t{0} / bound);
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return r % bound;
    }

    // Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (lo > hi)
            throw ArgumentError("uniform_int: empty range");
        return lo + static_cast<std::int64_t>(
                        next_below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // Standard normal via Box-Muller (cosine branch).
    double next_normal() {
        const double u1 = 1.0 - next_double(); // (0,1]
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    // Independent stream addressed by (this stream's seed, tag).
    RngStream child(std::uint64_t tag) const {
        return RngStream(mix(seed_ ^ mix(tag)));
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

// Tag kinds for the documented stream tree. Combine with an index via
// stream_tag() so e.g. member 3's subsample stream for partition 1 is
//   RngStream(cfg.seed).child(stream_tag(StreamTag::Member, 3))
//                      .child(stream_tag(StreamTag::Subsample, 1))
enum class StreamTag : std::uint64_t {
    Series = 1,
    Member = 2,
    FeatureSubset = 3,
    Partition = 4,
    Subsample = 5,
    DetectorInit = 6,
    BatchShuffle = 7,
    Synthetic = 8,
};

inline std::uint64_t stream_tag(StreamTag kind, std::uint64_t index = 0) {
    return (static_cast<std::uint64_t>(kind) << 32) | index;
}

} // namespace tsad

#endif
