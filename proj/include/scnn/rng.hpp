#pragma once

#include <cstdint>
#include <random>

namespace scnn {

using Rng = std::mt19937_64;

/// Independent RNG streams derived from one master seed.
enum class Stream : std::uint64_t {
    init = 1,
    shuffle = 2,
    dropout = 3,
    folds = 4,
    embeddings = 5,
    probe = 6,
    data = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
    return splitmix64(splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(stream))) + index);
}

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
    return Rng(derive_seed(master, stream, index));
}

/// Fisher-Yates with our own index draw so the permutation does not depend on
/// the standard library's shuffle implementation.
template <typename It>
void shuffle_range(It first, It last, Rng& rng) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        const std::uint64_t j = rng() % i;
        std::swap(first[i - 1], first[j]);
    }
}

} // namespace scnn
