#pragma once

#include <cstdint>
#include <limits>

namespace slts {

/// Counter-based generator: the k-th output of stream s under key `seed` is a
/// pure function of (seed, s, k). Independent streams let callers tie draws to
/// a row or a column so that changing n or d leaves other draws untouched.
///
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(mix(seed) ^ (stream * 0xD1B54A32D192ED03ULL))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

    std::uint64_t counter() const { return counter_; }

    // SplitMix64 finalizer.
    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Stream identifiers: a tag in the high bits, an index (row, column, start) below.
enum class StreamTag : std::uint64_t {
    CovariateRow = 1,
    NoiseRow = 2,
    Coefficient = 3,
    OutlierPick = 4,
    Intercept = 5,
    ElementalStart = 6,
    SolverInit = 7,
};

inline CounterRng make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
    return CounterRng(seed, (static_cast<std::uint64_t>(tag) << 48) ^ index);
}

} // namespace slts
