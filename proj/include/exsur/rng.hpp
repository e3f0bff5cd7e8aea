#ifndef EXSUR_RNG_HPP
#define EXSUR_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace exsur {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace detail

/// Seed derivation used throughout: a base seed plus a role tag gives an
/// independent stream seed, e.g. derive_seed(7, "candidates").
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view role) noexcept {
    return detail::splitmix64(detail::splitmix64(seed) ^ detail::fnv1a(role));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view role,
                                    std::uint64_t index) noexcept {
    return detail::splitmix64(derive_seed(seed, role) + detail::splitmix64(index));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace exsur

#endif  // EXSUR_RNG_HPP
