#pragma once
// Seeded randomness. Every random choice in the pipeline draws from a
// substream derived from the master seed and a purpose tag, so results do
// not depend on thread count or on the order unrelated stages run in.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace kgtrim {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stable stream id from (seed, tag, index).
inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
    std::uint64_t h = seed;
    for (char c : tag) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    return splitmix64(h ^ index);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
    return std::mt19937_64(substream_seed(seed, tag, index));
}

// Uniform integer in [0, n) by rejection; avoids stdlib distribution
// implementation differences.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
    return lo + u * (hi - lo);
}

// Uniform k-subset of items[0..n), preserving no particular order.
// Partial Fisher-Yates over a copy of the index range.
template <typename T>
std::vector<T> sample_without_replacement(std::mt19937_64& rng, const std::vector<T>& pool, std::size_t k) {
    if (k >= pool.size()) return pool;
    std::vector<T> work = pool;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, work.size() - i));
        std::swap(work[i], work[j]);
    }
    work.resize(k);
    return work;
}

}  // namespace kgtrim
