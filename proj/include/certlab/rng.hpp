#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace certlab {

/// Reproducible random stream identified by (seed, stream_id).
///
/// Two streams with the same identifier produce identical sequences; streams
/// with different identifiers are seeded through independent SplitMix64
/// mixing and are treated as statistically independent. Satisfies the
/// UniformRandomBitGenerator requirements so it can drive <random>
/// distributions directly.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Child stream keyed on this stream's identity and `index`. Does not
    /// depend on how much of this stream has already been consumed.
    RngStream substream(std::uint64_t index) const;

    static constexpr result_type min() { return std::numeric_limits<result_type>::min(); }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return engine_(); }

    // Uniform on the open interval (0, 1).
    double uniform_open();
    bool coin() { return (engine_() >> 63) != 0; }
    double exponential() { return -std::log(uniform_open()); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Mixes an arbitrary list of 64-bit words into a single seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t word);

}  // namespace certlab
