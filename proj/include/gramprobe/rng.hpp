#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace gramprobe {

/// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Portable seeded generator.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. All derived draws (bounded integers, unit reals, normals,
/// shuffles) are implemented here rather than through <random>
/// distributions, whose algorithms are implementation-defined.
///
/// Streams: `Rng::stream(seed, id)` seeds the engine with
/// splitmix64(splitmix64(seed) ^ id). Per-sentence perturbations use the
/// sentence index as id, bootstrap resamples and neuron subsets use a
/// counter, and fixed purposes use the reserved ids in `StreamId`.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    static Rng stream(std::uint64_t seed, std::uint64_t id) {
        return Rng(Raw{}, splitmix64(splitmix64(seed) ^ id));
    }

    /// Counter-indexed sub-stream of a purpose-specific stream.
    static Rng stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t counter) {
        return stream(splitmix64(seed ^ purpose), counter);
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n). Rejection sampling, unbiased. n > 0.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (one value per call, the sine half is discarded).
    double normal();

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    /// `count` distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count);

private:
    struct Raw {};
    Rng(Raw, std::uint64_t engine_seed) : engine_(engine_seed) {}

    std::mt19937_64 engine_;
};

namespace StreamId {
inline constexpr std::uint64_t kSplit = 0xFFFF'FFFF'0000'0001ULL;
inline constexpr std::uint64_t kVocab = 0xFFFF'FFFF'0000'0002ULL;
inline constexpr std::uint64_t kAssignment = 0xFFFF'FFFF'0000'0003ULL;
inline constexpr std::uint64_t kBootstrap = 0xFFFF'FFFF'0000'0004ULL;
inline constexpr std::uint64_t kNeuronSubset = 0xFFFF'FFFF'0000'0005ULL;
inline constexpr std::uint64_t kRidgeSplit = 0xFFFF'FFFF'0000'0006ULL;
inline constexpr std::uint64_t kSynthetic = 0xFFFF'FFFF'0000'0007ULL;
}  // namespace StreamId

}  // namespace gramprobe
