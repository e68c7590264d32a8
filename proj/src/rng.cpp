#include "certlab/rng.hpp"

#include <array>
#include <cmath>

namespace certlab {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t word) {
    return splitmix64(seed ^ splitmix64(word + 0x632BE59BD9B4E019ULL));
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ stream_id);
    const std::uint64_t c = splitmix64(b + 0x2545F4914F6CDD1DULL);
    std::array<std::uint32_t, 6> words{
        static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
        static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
        static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
}

RngStream RngStream::substream(std::uint64_t index) const {
    return RngStream(seed_, mix_seed(stream_id_, index));
}

double RngStream::uniform_open() {
    // 53 random bits, offset by half an ulp so neither endpoint is reachable.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace certlab
