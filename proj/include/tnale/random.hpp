#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tnale {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_name(std::string_view name) noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Seed of a named sub-stream; streams with different names or salts are
/// independent of each other and of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t salt = 0) noexcept {
    return mix64(mix64(seed ^ hash_name(stream)) ^ mix64(salt + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t salt = 0) {
    return Rng(derive_seed(seed, stream, salt));
}

}  // namespace tnale
