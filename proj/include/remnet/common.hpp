#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>

namespace remnet {

// Error raised when tensor shapes or argument domains do not match a contract.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Error raised for invalid values (non-finite numbers, out-of-range inputs).
struct ValueError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Error raised for malformed files and unparsable external inputs.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic child-seed derivation: every consumer of randomness gets its
// own stream keyed by (base seed, purpose/indices), independent of call order.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = mix64(base);
    for (std::uint64_t p : parts) h = mix64(h ^ p);
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, const std::string& tag) {
    std::uint64_t h = mix64(base);
    for (char c : tag) h = mix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    return h;
}

using Rng = std::mt19937_64;

// Uniform double in [0, 1). Built directly from the generator output so the
// value sequence does not depend on the standard library implementation.
inline double next_double(Rng& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Unbiased integer in [0, n). Rejection sampling, no modulo bias.
inline std::uint64_t uniform_below(Rng& g, std::uint64_t n) {
    if (n == 0) throw ValueError("uniform_below: n must be positive");
    std::uint64_t x, r;
    do {
        x = g();
        r = x % n;
    } while (x - r > std::uint64_t(0) - n);
    return r;
}

// Standard normal via Box-Muller, again implementation-independent.
inline double next_gaussian(Rng& g) {
    double u1 = next_double(g);
    double u2 = next_double(g);
    while (u1 <= 1e-300) u1 = next_double(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

template <typename It>
void shuffle_inplace(It begin, It end, Rng& g) {
    const auto n = static_cast<std::uint64_t>(end - begin);
    for (std::uint64_t i = n; i > 1; --i) {
        std::uint64_t j = uniform_below(g, i);
        std::swap(begin[i - 1], begin[j]);
    }
}

}  // namespace remnet
