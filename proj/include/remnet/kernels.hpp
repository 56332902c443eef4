#pragma once

#include <algorithm>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "remnet/tensor.hpp"

namespace remnet {

inline int thread_count() {
#ifdef _OPENMP
    static int n = [] {
        if (const char* env = std::getenv("REMNET_THREADS")) {
            int v = std::atoi(env);
            if (v > 0) return v;
        }
        return omp_get_max_threads();
    }();
    return n;
#else
    return 1;
#endif
}

// Output extent for stride-s "same" convolution: ceil(in / s).
inline int conv_out_extent(int in, int stride) { return (in + stride - 1) / stride; }

// Zero padding distributed with the extra element at the bottom/right.
inline int conv_pad_begin(int in, int k, int stride) {
    int out = conv_out_extent(in, stride);
    int total = std::max(0, (out - 1) * stride + k - in);
    return total / 2;
}

struct ConvDims {
    int batch, in_h, in_w, in_c;
    int k, out_c, stride;
    int out_h, out_w, pad_t, pad_l;
};

template <typename T>
ConvDims conv_dims(const TensorT<T>& input, const TensorT<T>& weight, int stride) {
    if (input.shape.size() != 4) throw ShapeError("conv2d: input must be rank 4, got " + shape_str(input.shape));
    if (weight.shape.size() != 4) throw ShapeError("conv2d: weight must be rank 4, got " + shape_str(weight.shape));
    if (weight.shape[0] != weight.shape[1]) throw ShapeError("conv2d: kernel must be square, got " + shape_str(weight.shape));
    if (stride < 1) throw ValueError("conv2d: stride must be >= 1");
    if (input.shape[1] < 1 || input.shape[2] < 1) throw ShapeError("conv2d: input spatial extents must be >= 1");
    if (input.shape[3] != weight.shape[2])
        throw ShapeError("conv2d: input channel count does not match weight: input " +
                         shape_str(input.shape) + " has " + std::to_string(input.shape[3]) +
                         " channels, weight " + shape_str(weight.shape) + " expects " +
                         std::to_string(weight.shape[2]));
    ConvDims d;
    d.batch = input.shape[0];
    d.in_h = input.shape[1];
    d.in_w = input.shape[2];
    d.in_c = input.shape[3];
    d.k = weight.shape[0];
    d.out_c = weight.shape[3];
    d.stride = stride;
    d.out_h = conv_out_extent(d.in_h, stride);
    d.out_w = conv_out_extent(d.in_w, stride);
    d.pad_t = conv_pad_begin(d.in_h, d.k, stride);
    d.pad_l = conv_pad_begin(d.in_w, d.k, stride);
    return d;
}

// Forward convolution. Each output element accumulates over (u, v, c) in that
// fixed order into its own accumulator; the inner loop runs across output
// channels so it vectorizes without reassociating any single sum.
template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                          int stride) {
    ConvDims d = conv_dims(input, weight, stride);
    if (bias.shape != Shape{d.out_c})
        throw ShapeError("conv2d: bias shape " + shape_str(bias.shape) + " must be " +
                         shape_str({d.out_c}));
    TensorT<T> out({d.batch, d.out_h, d.out_w, d.out_c});
    const T* in = input.data.data();
    const T* w = weight.data.data();
    const T* bs = bias.data.data();
    T* o = out.data.data();
    const long total = static_cast<long>(d.batch) * d.out_h * d.out_w;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
    for (long idx = 0; idx < total; ++idx) {
        const int b = static_cast<int>(idx / (d.out_h * d.out_w));
        const int i = static_cast<int>((idx / d.out_w) % d.out_h);
        const int j = static_cast<int>(idx % d.out_w);
        T* acc = o + idx * d.out_c;
        for (int f = 0; f < d.out_c; ++f) acc[f] = bs[f];
        for (int u = 0; u < d.k; ++u) {
            const int y = i * d.stride + u - d.pad_t;
            if (y < 0 || y >= d.in_h) continue;
            for (int v = 0; v < d.k; ++v) {
                const int x = j * d.stride + v - d.pad_l;
                if (x < 0 || x >= d.in_w) continue;
                const T* in_px = in + ((static_cast<std::size_t>(b) * d.in_h + y) * d.in_w + x) * d.in_c;
                const T* w_uv = w + (static_cast<std::size_t>(u) * d.k + v) * d.in_c * d.out_c;
                for (int c = 0; c < d.in_c; ++c) {
                    const T xv = in_px[c];
                    const T* wr = w_uv + static_cast<std::size_t>(c) * d.out_c;
                    for (int f = 0; f < d.out_c; ++f) acc[f] += xv * wr[f];
                }
            }
        }
    }
    return out;
}

// Gradient w.r.t. the weight: parallel over (u, v, c) rows, each owned by one
// thread, so results do not depend on scheduling.
template <typename T>
TensorT<T> conv2d_backward_weight(const TensorT<T>& input, const TensorT<T>& grad_out,
                                  const ConvDims& d) {
    TensorT<T> dw({d.k, d.k, d.in_c, d.out_c});
    const T* in = input.data.data();
    const T* go = grad_out.data.data();
    T* dwp = dw.data.data();
    const long rows = static_cast<long>(d.k) * d.k * d.in_c;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
    for (long row = 0; row < rows; ++row) {
        const int u = static_cast<int>(row / (d.k * d.in_c));
        const int v = static_cast<int>((row / d.in_c) % d.k);
        const int c = static_cast<int>(row % d.in_c);
        T* acc = dwp + row * d.out_c;
        for (int b = 0; b < d.batch; ++b) {
            for (int i = 0; i < d.out_h; ++i) {
                const int y = i * d.stride + u - d.pad_t;
                if (y < 0 || y >= d.in_h) continue;
                for (int j = 0; j < d.out_w; ++j) {
                    const int x = j * d.stride + v - d.pad_l;
                    if (x < 0 || x >= d.in_w) continue;
                    const T xv = in[((static_cast<std::size_t>(b) * d.in_h + y) * d.in_w + x) * d.in_c + c];
                    const T* g = go + ((static_cast<std::size_t>(b) * d.out_h + i) * d.out_w + j) * d.out_c;
                    for (int f = 0; f < d.out_c; ++f) acc[f] += xv * g[f];
                }
            }
        }
    }
    return dw;
}

template <typename T>
TensorT<T> conv2d_backward_bias(const TensorT<T>& grad_out, const ConvDims& d) {
    TensorT<T> db({d.out_c});
    const T* go = grad_out.data.data();
    const long total = static_cast<long>(d.batch) * d.out_h * d.out_w;
    for (long idx = 0; idx < total; ++idx)
        for (int f = 0; f < d.out_c; ++f) db.data[f] += go[idx * d.out_c + f];
    return db;
}

// Gradient w.r.t. the input: gather form, parallel over input pixels. The
// weight is transposed once so the inner loop is contiguous over c.
template <typename T>
TensorT<T> conv2d_backward_input(const TensorT<T>& weight, const TensorT<T>& grad_out,
                                 const ConvDims& d) {
    TensorT<T> wt({d.k, d.k, d.out_c, d.in_c});
    for (int u = 0; u < d.k; ++u)
        for (int v = 0; v < d.k; ++v)
            for (int c = 0; c < d.in_c; ++c)
                for (int f = 0; f < d.out_c; ++f)
                    wt.data[((static_cast<std::size_t>(u) * d.k + v) * d.out_c + f) * d.in_c + c] =
                        weight.data[((static_cast<std::size_t>(u) * d.k + v) * d.in_c + c) * d.out_c + f];

    TensorT<T> dx({d.batch, d.in_h, d.in_w, d.in_c});
    const T* go = grad_out.data.data();
    const T* wtp = wt.data.data();
    T* dxp = dx.data.data();
    const long total = static_cast<long>(d.batch) * d.in_h * d.in_w;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
    for (long idx = 0; idx < total; ++idx) {
        const int b = static_cast<int>(idx / (d.in_h * d.in_w));
        const int y = static_cast<int>((idx / d.in_w) % d.in_h);
        const int x = static_cast<int>(idx % d.in_w);
        T* acc = dxp + idx * d.in_c;
        for (int u = 0; u < d.k; ++u) {
            const int ty = y + d.pad_t - u;
            if (ty < 0 || ty % d.stride != 0) continue;
            const int i = ty / d.stride;
            if (i >= d.out_h) continue;
            for (int v = 0; v < d.k; ++v) {
                const int tx = x + d.pad_l - v;
                if (tx < 0 || tx % d.stride != 0) continue;
                const int j = tx / d.stride;
                if (j >= d.out_w) continue;
                const T* g = go + ((static_cast<std::size_t>(b) * d.out_h + i) * d.out_w + j) * d.out_c;
                const T* wrow = wtp + (static_cast<std::size_t>(u) * d.k + v) * d.out_c * d.in_c;
                for (int f = 0; f < d.out_c; ++f) {
                    const T gv = g[f];
                    const T* wr = wrow + static_cast<std::size_t>(f) * d.in_c;
                    for (int c = 0; c < d.in_c; ++c) acc[c] += gv * wr[c];
                }
            }
        }
    }
    return dx;
}

}  // namespace remnet
