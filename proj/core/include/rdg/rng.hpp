#pragma once

#include <cstdint>
#include <random>

namespace rdg {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based hash of (seed, a, b, c). Used wherever a random draw must be
/// addressable by its coordinates (agent, neighbor slot, time) rather than by
/// position in a stream, so results do not depend on evaluation order.
constexpr std::uint64_t hash_coords(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                    std::uint64_t c = 0) {
    return mix64(seed ^ mix64(a ^ mix64(b ^ mix64(c + 0x632be59bd9b4e019ULL))));
}

/// Maps 64 random bits to [0, 1) with 53-bit resolution.
constexpr double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Derives the seed of replication `index` from a base seed.
constexpr std::uint64_t replication_seed(std::uint64_t base_seed, std::uint64_t index) {
    return mix64(base_seed ^ mix64(index + 1));
}

/// Sequential generator for construction-time randomness (graph generation).
/// std::mt19937_64 is fully specified by the standard; the distributions are
/// not, so bounded draws are done here to keep outputs portable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    std::uint64_t next() { return engine_(); }
    double uniform() { return to_unit(engine_()); }

    /// Uniform integer in [0, bound), bound > 0. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = bound * (UINT64_MAX / bound);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace rdg
