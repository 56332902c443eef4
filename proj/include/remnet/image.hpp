#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "remnet/tensor.hpp"

namespace remnet {

// 8-bit RGB image, interleaved, row-major.
struct ImageU8 {
    int width = 0, height = 0;
    std::vector<std::uint8_t> pixels;

    ImageU8() = default;
    ImageU8(int w, int h);

    std::uint8_t& at(int y, int x, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

// Binary PPM (P6, maxval 255) — the lossless container used for all
// synthetic and intermediate images.
void write_ppm(const std::string& path, const ImageU8& img);
ImageU8 read_ppm(const std::string& path);
// Header probe: (width, height) without reading pixel data.
std::pair<int, int> read_ppm_size(const std::string& path);

// [H,W,3] values in [0,1].
Tensor image_to_float(const ImageU8& img);
// Clamps to [0,1] and rounds to 8 bits.
ImageU8 float_to_image(const Tensor& t);

// Peak signal-to-noise ratio in dB; identical images give +inf.
double psnr(const ImageU8& a, const ImageU8& b);

}  // namespace remnet
