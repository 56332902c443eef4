#pragma once

#include "remnet/common.hpp"
#include "remnet/tensor.hpp"

namespace remnet {

struct FanPair {
    double fan_in, fan_out;
};

// Fan computation: conv weights are laid out (K, K, Cin, Cout), dense weights
// (in, out); anything else falls back to the element count.
inline FanPair glorot_fans(const Shape& shape) {
    if (shape.size() == 4) {
        const double k2 = static_cast<double>(shape[0]) * shape[1];
        return {k2 * shape[2], k2 * shape[3]};
    }
    if (shape.size() == 2) return {static_cast<double>(shape[0]), static_cast<double>(shape[1])};
    const double n = static_cast<double>(shape_numel(shape));
    return {n, n};
}

// Uniform on [-L, L] with L = sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(const Shape& shape, std::uint64_t seed) {
    if (shape.empty()) throw ShapeError("glorot_uniform: shape must be non-empty");
    FanPair f = glorot_fans(shape);
    const double limit = std::sqrt(6.0 / (f.fan_in + f.fan_out));
    Tensor out(shape);
    Rng rng(seed);
    for (auto& v : out.data) v = static_cast<float>((2.0 * next_double(rng) - 1.0) * limit);
    return out;
}

inline double glorot_limit(const Shape& shape) {
    FanPair f = glorot_fans(shape);
    return std::sqrt(6.0 / (f.fan_in + f.fan_out));
}

}  // namespace remnet
