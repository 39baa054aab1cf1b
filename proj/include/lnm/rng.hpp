#ifndef LNM_RNG_HPP
#define LNM_RNG_HPP

#include <cstdint>
#include <random>

namespace lnm {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of stream `index` derived from a root seed. Streams never depend on
/// the order in which they are requested, so per-observation generation is
/// scheduling independent.
constexpr std::uint64_t stream_seed(std::uint64_t root, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(root) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_stream(std::uint64_t root, std::uint64_t index) {
    return Rng(stream_seed(root, index));
}

// Distinct purposes drawing from the same root seed get disjoint tags.
namespace stream_tag {
inline constexpr std::uint64_t simulate = 0x51u;
inline constexpr std::uint64_t kmeans = 0x4bu;
inline constexpr std::uint64_t mcmc = 0x4du;
}  // namespace stream_tag

inline std::uint64_t tagged_seed(std::uint64_t root, std::uint64_t tag) noexcept {
    return stream_seed(root, tag << 56);
}

}  // namespace lnm

#endif
