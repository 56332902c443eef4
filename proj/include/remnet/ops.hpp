#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "remnet/graph.hpp"
#include "remnet/kernels.hpp"

namespace remnet {

template <typename T>
VarT<T> conv2d(const VarT<T>& input, const VarT<T>& weight, const VarT<T>& bias, int stride) {
    ConvDims d = conv_dims(input.value(), weight.value(), stride);
    TensorT<T> out = conv2d_forward(input.value(), weight.value(), bias.value(), stride);
    auto px = input.node();
    auto pw = weight.node();
    auto pb = bias.node();
    return VarT<T>::make(std::move(out), {px, pw, pb}, [px, pw, pb, d](GraphNode<T>& self) {
        if (px->requires_grad) px->accumulate(conv2d_backward_input(pw->value, self.grad, d));
        if (pw->requires_grad) pw->accumulate(conv2d_backward_weight(px->value, self.grad, d));
        if (pb->requires_grad) pb->accumulate(conv2d_backward_bias(self.grad, d));
    });
}

template <typename T>
struct BatchNormResult {
    VarT<T> out;
    TensorT<T> batch_mean;  // per channel
    TensorT<T> batch_var;   // per channel, population variance
};

// Training-mode batch normalization over (batch, height, width) per channel.
template <typename T>
BatchNormResult<T> batch_norm_train(const VarT<T>& input, const VarT<T>& gamma, const VarT<T>& beta,
                                    T eps) {
    const TensorT<T>& x = input.value();
    if (x.shape.size() != 4) throw ShapeError("batch_norm: input must be rank 4");
    const int ch = x.shape[3];
    const std::size_t m = x.numel() / static_cast<std::size_t>(ch);
    if (m < 2) throw ValueError("batch_norm: train mode needs at least 2 values per channel");
    if (gamma.value().shape != Shape{ch} || beta.value().shape != Shape{ch})
        throw ShapeError("batch_norm: gamma/beta must have one value per channel");

    TensorT<T> mean({ch});
    TensorT<T> var({ch});
    const T* xp = x.data.data();
    const std::size_t n = x.numel();
    {
        std::vector<double> sum(ch, 0.0), sumsq(ch, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = xp[i];
            const int c = static_cast<int>(i % ch);
            sum[c] += v;
            sumsq[c] += v * v;
        }
        for (int c = 0; c < ch; ++c) {
            const double mu = sum[c] / static_cast<double>(m);
            mean.data[c] = static_cast<T>(mu);
            var.data[c] = static_cast<T>(std::max(0.0, sumsq[c] / static_cast<double>(m) - mu * mu));
        }
    }

    TensorT<T> inv_std({ch});
    for (int c = 0; c < ch; ++c) inv_std.data[c] = T(1) / std::sqrt(var.data[c] + eps);

    TensorT<T> out(x.shape);
    const T* g = gamma.value().data.data();
    const T* b = beta.value().data.data();
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % ch);
        out.data[i] = (xp[i] - mean.data[c]) * inv_std.data[c] * g[c] + b[c];
    }

    auto px = input.node();
    auto pg = gamma.node();
    auto pb = beta.node();
    VarT<T> y = VarT<T>::make(
        std::move(out), {px, pg, pb}, [px, pg, pb, mean, inv_std, ch, m](GraphNode<T>& self) {
            const std::size_t n = self.value.numel();
            const T* xp = px->value.data.data();
            const T* dy = self.grad.data.data();
            const T* g = pg->value.data.data();
            // per-channel reductions
            std::vector<double> sum_dy(ch, 0.0), sum_dy_xhat(ch, 0.0);
            std::vector<T> xhat(n);
            for (std::size_t i = 0; i < n; ++i) {
                const int c = static_cast<int>(i % ch);
                xhat[i] = (xp[i] - mean.data[c]) * inv_std.data[c];
                sum_dy[c] += dy[i];
                sum_dy_xhat[c] += static_cast<double>(dy[i]) * xhat[i];
            }
            if (pg->requires_grad) {
                TensorT<T> dg({ch});
                for (int c = 0; c < ch; ++c) dg.data[c] = static_cast<T>(sum_dy_xhat[c]);
                pg->accumulate(dg);
            }
            if (pb->requires_grad) {
                TensorT<T> db({ch});
                for (int c = 0; c < ch; ++c) db.data[c] = static_cast<T>(sum_dy[c]);
                pb->accumulate(db);
            }
            if (px->requires_grad) {
                TensorT<T> dx(px->value.shape);
                const double inv_m = 1.0 / static_cast<double>(m);
                for (std::size_t i = 0; i < n; ++i) {
                    const int c = static_cast<int>(i % ch);
                    const double t = dy[i] - inv_m * sum_dy[c] - xhat[i] * inv_m * sum_dy_xhat[c];
                    dx.data[i] = static_cast<T>(g[c] * inv_std.data[c] * t);
                }
                px->accumulate(dx);
            }
        });
    return {y, mean, var};
}

// Inference-mode batch normalization: a fixed per-channel affine map.
template <typename T>
VarT<T> batch_norm_infer(const VarT<T>& input, const VarT<T>& gamma, const VarT<T>& beta,
                         const TensorT<T>& running_mean, const TensorT<T>& running_var, T eps) {
    const TensorT<T>& x = input.value();
    if (x.shape.size() != 4) throw ShapeError("batch_norm: input must be rank 4");
    const int ch = x.shape[3];
    TensorT<T> inv_std({ch});
    for (int c = 0; c < ch; ++c) inv_std.data[c] = T(1) / std::sqrt(running_var.data[c] + eps);
    TensorT<T> out(x.shape);
    const std::size_t n = x.numel();
    const T* xp = x.data.data();
    const T* g = gamma.value().data.data();
    const T* b = beta.value().data.data();
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % ch);
        out.data[i] = (xp[i] - running_mean.data[c]) * inv_std.data[c] * g[c] + b[c];
    }
    auto px = input.node();
    auto pg = gamma.node();
    auto pb = beta.node();
    TensorT<T> rm = running_mean;
    return VarT<T>::make(std::move(out), {px, pg, pb},
                         [px, pg, pb, rm, inv_std, ch](GraphNode<T>& self) {
                             const std::size_t n = self.value.numel();
                             const T* dy = self.grad.data.data();
                             const T* xp = px->value.data.data();
                             const T* g = pg->value.data.data();
                             if (pg->requires_grad || pb->requires_grad) {
                                 TensorT<T> dg({ch}), db({ch});
                                 for (std::size_t i = 0; i < n; ++i) {
                                     const int c = static_cast<int>(i % ch);
                                     dg.data[c] += dy[i] * (xp[i] - rm.data[c]) * inv_std.data[c];
                                     db.data[c] += dy[i];
                                 }
                                 if (pg->requires_grad) pg->accumulate(dg);
                                 if (pb->requires_grad) pb->accumulate(db);
                             }
                             if (px->requires_grad) {
                                 TensorT<T> dx(px->value.shape);
                                 for (std::size_t i = 0; i < n; ++i) {
                                     const int c = static_cast<int>(i % ch);
                                     dx.data[i] = dy[i] * g[c] * inv_std.data[c];
                                 }
                                 px->accumulate(dx);
                             }
                         });
}

// PReLU with one learnable slope per channel.
template <typename T>
VarT<T> prelu(const VarT<T>& input, const VarT<T>& alpha) {
    const TensorT<T>& x = input.value();
    const int ch = x.shape.back();
    if (alpha.value().shape != Shape{ch})
        throw ShapeError("prelu: alpha length " + shape_str(alpha.value().shape) +
                         " does not match channel count " + std::to_string(ch));
    TensorT<T> out(x.shape);
    const std::size_t n = x.numel();
    const T* xp = x.data.data();
    const T* a = alpha.value().data.data();
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % ch);
        out.data[i] = xp[i] > T(0) ? xp[i] : a[c] * xp[i];
    }
    auto px = input.node();
    auto pa = alpha.node();
    return VarT<T>::make(std::move(out), {px, pa}, [px, pa, ch](GraphNode<T>& self) {
        const std::size_t n = self.value.numel();
        const T* dy = self.grad.data.data();
        const T* xp = px->value.data.data();
        const T* a = pa->value.data.data();
        if (px->requires_grad) {
            TensorT<T> dx(px->value.shape);
            for (std::size_t i = 0; i < n; ++i) {
                const int c = static_cast<int>(i % ch);
                dx.data[i] = xp[i] > T(0) ? dy[i] : a[c] * dy[i];
            }
            px->accumulate(dx);
        }
        if (pa->requires_grad) {
            TensorT<T> da({ch});
            for (std::size_t i = 0; i < n; ++i) {
                const int c = static_cast<int>(i % ch);
                if (xp[i] <= T(0)) da.data[c] += dy[i] * xp[i];
            }
            pa->accumulate(da);
        }
    });
}

// Non-overlapping k x k mean pooling; spatial extents must divide by k.
template <typename T>
VarT<T> avg_pool(const VarT<T>& input, int k) {
    const TensorT<T>& x = input.value();
    if (x.shape.size() != 4) throw ShapeError("avg_pool: input must be rank 4");
    const int B = x.shape[0], H = x.shape[1], W = x.shape[2], C = x.shape[3];
    if (k < 1 || H % k != 0 || W % k != 0)
        throw ShapeError("avg_pool: extents " + std::to_string(H) + "x" + std::to_string(W) +
                         " not divisible by window " + std::to_string(k));
    const int oh = H / k, ow = W / k;
    TensorT<T> out({B, oh, ow, C});
    const T inv = T(1) / static_cast<T>(k * k);
    for (int b = 0; b < B; ++b)
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j)
                for (int c = 0; c < C; ++c) {
                    T acc = T(0);
                    for (int u = 0; u < k; ++u)
                        for (int v = 0; v < k; ++v) acc += x.at4(b, i * k + u, j * k + v, c);
                    out.at4(b, i, j, c) = acc * inv;
                }
    auto px = input.node();
    return VarT<T>::make(std::move(out), {px}, [px, k, inv](GraphNode<T>& self) {
        if (!px->requires_grad) return;
        const int B = self.value.shape[0], oh = self.value.shape[1], ow = self.value.shape[2],
                  C = self.value.shape[3];
        TensorT<T> dx(px->value.shape);
        for (int b = 0; b < B; ++b)
            for (int i = 0; i < oh; ++i)
                for (int j = 0; j < ow; ++j)
                    for (int c = 0; c < C; ++c) {
                        const T g = self.grad.at4(b, i, j, c) * inv;
                        for (int u = 0; u < k; ++u)
                            for (int v = 0; v < k; ++v) dx.at4(b, i * k + u, j * k + v, c) += g;
                    }
        px->accumulate(dx);
    });
}

// Concatenate along the channel axis; batch and spatial extents must match.
template <typename T>
VarT<T> concat_channels(const VarT<T>& a, const VarT<T>& b) {
    const TensorT<T>& xa = a.value();
    const TensorT<T>& xb = b.value();
    if (xa.shape.size() != 4 || xb.shape.size() != 4)
        throw ShapeError("concat_channels: inputs must be rank 4");
    if (xa.shape[0] != xb.shape[0] || xa.shape[1] != xb.shape[1] || xa.shape[2] != xb.shape[2])
        throw ShapeError("concat_channels: batch/spatial mismatch " + shape_str(xa.shape) + " vs " +
                         shape_str(xb.shape));
    const int B = xa.shape[0], H = xa.shape[1], W = xa.shape[2];
    const int ca = xa.shape[3], cb = xb.shape[3];
    TensorT<T> out({B, H, W, ca + cb});
    const std::size_t rows = static_cast<std::size_t>(B) * H * W;
    for (std::size_t r = 0; r < rows; ++r) {
        T* dst = out.data.data() + r * (ca + cb);
        const T* pa = xa.data.data() + r * ca;
        const T* pb = xb.data.data() + r * cb;
        for (int c = 0; c < ca; ++c) dst[c] = pa[c];
        for (int c = 0; c < cb; ++c) dst[ca + c] = pb[c];
    }
    auto na = a.node();
    auto nb = b.node();
    return VarT<T>::make(std::move(out), {na, nb}, [na, nb, ca, cb](GraphNode<T>& self) {
        const std::size_t rows = self.value.numel() / static_cast<std::size_t>(ca + cb);
        if (na->requires_grad) {
            TensorT<T> da(na->value.shape);
            for (std::size_t r = 0; r < rows; ++r)
                for (int c = 0; c < ca; ++c) da.data[r * ca + c] = self.grad.data[r * (ca + cb) + c];
            na->accumulate(da);
        }
        if (nb->requires_grad) {
            TensorT<T> db(nb->value.shape);
            for (std::size_t r = 0; r < rows; ++r)
                for (int c = 0; c < cb; ++c)
                    db.data[r * cb + c] = self.grad.data[r * (ca + cb) + ca + c];
            nb->accumulate(db);
        }
    });
}

template <typename T>
VarT<T> subtract(const VarT<T>& a, const VarT<T>& b) {
    require_same_shape(a.value(), b.value(), "subtract");
    TensorT<T> out(a.value().shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = a.value().data[i] - b.value().data[i];
    auto na = a.node();
    auto nb = b.node();
    return VarT<T>::make(std::move(out), {na, nb}, [na, nb](GraphNode<T>& self) {
        if (na->requires_grad) na->accumulate(self.grad);
        if (nb->requires_grad) {
            TensorT<T> neg(self.grad.shape);
            for (std::size_t i = 0; i < neg.numel(); ++i) neg.data[i] = -self.grad.data[i];
            nb->accumulate(neg);
        }
    });
}

// Flatten/reshape without changing element order.
template <typename T>
VarT<T> reshape(const VarT<T>& x, Shape new_shape) {
    if (shape_numel(new_shape) != x.value().numel())
        throw ShapeError("reshape: element count mismatch " + shape_str(x.value().shape) + " -> " +
                         shape_str(new_shape));
    TensorT<T> out;
    out.shape = std::move(new_shape);
    out.data = x.value().data;
    auto px = x.node();
    return VarT<T>::make(std::move(out), {px}, [px](GraphNode<T>& self) {
        if (!px->requires_grad) return;
        TensorT<T> g;
        g.shape = px->value.shape;
        g.data = self.grad.data;
        px->accumulate(g);
    });
}

// Row-wise softmax on [B, N] logits, numerically stabilized.
template <typename T>
TensorT<T> softmax_rows(const TensorT<T>& logits) {
    if (logits.shape.size() != 2) throw ShapeError("softmax: logits must be rank 2");
    const int B = logits.shape[0], N = logits.shape[1];
    TensorT<T> p(logits.shape);
    for (int r = 0; r < B; ++r) {
        const T* z = logits.data.data() + static_cast<std::size_t>(r) * N;
        T* pr = p.data.data() + static_cast<std::size_t>(r) * N;
        T mx = z[0];
        for (int i = 1; i < N; ++i) mx = std::max(mx, z[i]);
        double sum = 0.0;
        for (int i = 0; i < N; ++i) {
            pr[i] = static_cast<T>(std::exp(static_cast<double>(z[i] - mx)));
            sum += pr[i];
        }
        const T inv = static_cast<T>(1.0 / sum);
        for (int i = 0; i < N; ++i) pr[i] *= inv;
    }
    return p;
}

template <typename T>
struct SoftmaxLoss {
    VarT<T> loss;       // scalar
    TensorT<T> probs;   // [B, N]
};

// Mean negative log-likelihood over the batch with fused softmax.
template <typename T>
SoftmaxLoss<T> softmax_cross_entropy(const VarT<T>& logits, const std::vector<int>& labels) {
    const TensorT<T>& z = logits.value();
    if (z.shape.size() != 2) throw ShapeError("softmax_cross_entropy: logits must be rank 2");
    const int B = z.shape[0], N = z.shape[1];
    if (N < 2) throw ShapeError("softmax_cross_entropy: need at least 2 classes");
    if (static_cast<int>(labels.size()) != B)
        throw ShapeError("softmax_cross_entropy: batch size " + std::to_string(B) + " but " +
                         std::to_string(labels.size()) + " labels");
    for (int l : labels)
        if (l < 0 || l >= N)
            throw ValueError("softmax_cross_entropy: label " + std::to_string(l) +
                             " outside [0, " + std::to_string(N) + ")");
    TensorT<T> p = softmax_rows(z);
    double total = 0.0;
    for (int r = 0; r < B; ++r) {
        const double pt = std::max(static_cast<double>(p.at2(r, labels[r])), 1e-30);
        total -= std::log(pt);
    }
    TensorT<T> loss_val({1});
    loss_val.data[0] = static_cast<T>(total / B);

    auto pz = logits.node();
    TensorT<T> probs_copy = p;
    std::vector<int> labels_copy = labels;
    VarT<T> loss = VarT<T>::make(std::move(loss_val), {pz},
                                 [pz, probs_copy, labels_copy, B, N](GraphNode<T>& self) {
                                     if (!pz->requires_grad) return;
                                     const T upstream = self.grad.data[0];
                                     TensorT<T> dz(pz->value.shape);
                                     const T invb = T(1) / static_cast<T>(B);
                                     for (int r = 0; r < B; ++r)
                                         for (int i = 0; i < N; ++i) {
                                             T g = probs_copy.at2(r, i);
                                             if (i == labels_copy[r]) g -= T(1);
                                             dz.at2(r, i) = g * invb * upstream;
                                         }
                                     pz->accumulate(dz);
                                 });
    return {loss, std::move(p)};
}

}  // namespace remnet
