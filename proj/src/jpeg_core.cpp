#include "remnet/jpeg_core.hpp"

#include <array>
#include <cmath>

#include "remnet/common.hpp"

namespace remnet {

namespace {

// Standard base quantization tables (luminance / chrominance).
constexpr int kLumaQ[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
constexpr int kChromaQ[64] = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

struct CosTable {
    double c[8][8];  // c[x][u] = C(u)/2 · cos((2x+1)uπ/16)
    CosTable() {
        for (int x = 0; x < 8; ++x)
            for (int u = 0; u < 8; ++u) {
                const double cu = u == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
                c[x][u] = 0.5 * cu * std::cos((2 * x + 1) * u * M_PI / 16.0);
            }
    }
};
const CosTable kCos;

void dct8x8(const double in[64], double out[64]) {
    double tmp[64];
    for (int y = 0; y < 8; ++y)
        for (int u = 0; u < 8; ++u) {
            double s = 0.0;
            for (int x = 0; x < 8; ++x) s += in[y * 8 + x] * kCos.c[x][u];
            tmp[y * 8 + u] = s;
        }
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int y = 0; y < 8; ++y) s += tmp[y * 8 + u] * kCos.c[y][v];
            out[v * 8 + u] = s;
        }
}

void idct8x8(const double in[64], double out[64]) {
    double tmp[64];
    for (int v = 0; v < 8; ++v)
        for (int x = 0; x < 8; ++x) {
            double s = 0.0;
            for (int u = 0; u < 8; ++u) s += in[v * 8 + u] * kCos.c[x][u];
            tmp[v * 8 + x] = s;
        }
    for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y) {
            double s = 0.0;
            for (int v = 0; v < 8; ++v) s += tmp[v * 8 + x] * kCos.c[y][v];
            out[y * 8 + x] = s;
        }
}

std::array<double, 64> scaled_table(const int* base, int qf, double quant_scale) {
    const int s = qf < 50 ? 5000 / qf : 200 - 2 * qf;
    std::array<double, 64> q;
    for (int i = 0; i < 64; ++i) {
        int v = (base[i] * s + 50) / 100;
        v = std::min(255, std::max(1, v));
        q[i] = std::max(1.0, std::round(v * quant_scale));
    }
    return q;
}

// One channel plane, replicate-padded to block multiples.
void round_trip_plane(std::vector<double>& plane, int w, int h, const std::array<double, 64>& q) {
    const int bw = (w + 7) / 8, bh = (h + 7) / 8;
    double blk[64], coef[64];
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx) {
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    const int sy = std::min(h - 1, by * 8 + y);
                    const int sx = std::min(w - 1, bx * 8 + x);
                    blk[y * 8 + x] = plane[static_cast<std::size_t>(sy) * w + sx] - 128.0;
                }
            dct8x8(blk, coef);
            for (int i = 0; i < 64; ++i) coef[i] = std::round(coef[i] / q[i]) * q[i];
            idct8x8(coef, blk);
            for (int y = 0; y < 8; ++y) {
                const int sy = by * 8 + y;
                if (sy >= h) break;
                for (int x = 0; x < 8; ++x) {
                    const int sx = bx * 8 + x;
                    if (sx >= w) break;
                    plane[static_cast<std::size_t>(sy) * w + sx] = blk[y * 8 + x] + 128.0;
                }
            }
        }
}

}  // namespace

ImageU8 jpeg_round_trip(const ImageU8& img, int quality_factor, double quant_scale) {
    if (quality_factor < 1 || quality_factor > 100)
        throw ValueError("jpeg_round_trip: quality factor must be in [1,100]");
    if (quant_scale <= 0.0) throw ValueError("jpeg_round_trip: quant_scale must be positive");
    const int w = img.width, h = img.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    std::vector<double> Y(n), Cb(n), Cr(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = img.pixels[i * 3 + 0];
        const double g = img.pixels[i * 3 + 1];
        const double b = img.pixels[i * 3 + 2];
        Y[i] = 0.299 * r + 0.587 * g + 0.114 * b;
        Cb[i] = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
        Cr[i] = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
    }

    const auto lq = scaled_table(kLumaQ, quality_factor, quant_scale);
    const auto cq = scaled_table(kChromaQ, quality_factor, quant_scale);
    round_trip_plane(Y, w, h, lq);
    round_trip_plane(Cb, w, h, cq);
    round_trip_plane(Cr, w, h, cq);

    ImageU8 out(w, h);
    for (std::size_t i = 0; i < n; ++i) {
        const double cb = Cb[i] - 128.0, cr = Cr[i] - 128.0;
        const double r = Y[i] + 1.402 * cr;
        const double g = Y[i] - 0.344136 * cb - 0.714136 * cr;
        const double b = Y[i] + 1.772 * cb;
        auto q8 = [](double v) {
            return static_cast<std::uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
        };
        out.pixels[i * 3 + 0] = q8(r);
        out.pixels[i * 3 + 1] = q8(g);
        out.pixels[i * 3 + 2] = q8(b);
    }
    return out;
}

}  // namespace remnet
