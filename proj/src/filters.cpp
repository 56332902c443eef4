#include "remnet/filters.hpp"

#include <algorithm>

#include "remnet/common.hpp"

namespace remnet {

namespace {

void require_hw3(const Tensor& img) {
    if (img.shape.size() != 3 || img.shape[2] != 3)
        throw ShapeError("filter: expected [H,W,3], got " + shape_str(img.shape));
}

}  // namespace

Tensor median_residual(const Tensor& img, int window) {
    require_hw3(img);
    if (window < 1 || window % 2 == 0) throw ValueError("median filter: window must be odd");
    const int h = img.shape[0], w = img.shape[1], r = window / 2;
    Tensor out(img.shape);
    std::vector<float> vals;
    vals.reserve(static_cast<std::size_t>(window) * window);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                vals.clear();
                for (int dy = -r; dy <= r; ++dy) {
                    const int yy = y + dy;
                    if (yy < 0 || yy >= h) continue;
                    for (int dx = -r; dx <= r; ++dx) {
                        const int xx = x + dx;
                        if (xx < 0 || xx >= w) continue;
                        vals.push_back(img.data[(static_cast<std::size_t>(yy) * w + xx) * 3 + c]);
                    }
                }
                auto mid = vals.begin() + vals.size() / 2;
                std::nth_element(vals.begin(), mid, vals.end());
                float med = *mid;
                if (vals.size() % 2 == 0) {
                    // mean of the two central order statistics
                    const float hi = med;
                    std::nth_element(vals.begin(), mid - 1, mid);
                    med = 0.5f * (hi + *(mid - 1));
                }
                const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3 + c;
                out.data[i] = img.data[i] - med;
            }
    return out;
}

Tensor highpass_filter(const Tensor& img) {
    require_hw3(img);
    const int h = img.shape[0], w = img.shape[1];
    Tensor out(img.shape);
    auto px = [&](int y, int x, int c) {
        y = std::min(h - 1, std::max(0, y));
        x = std::min(w - 1, std::max(0, x));
        return img.data[(static_cast<std::size_t>(y) * w + x) * 3 + c];
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                float acc = 8.0f * px(y, x, c);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        if (dy != 0 || dx != 0) acc -= px(y + dy, x + dx, c);
                out.data[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc / 8.0f;
            }
    return out;
}

}  // namespace remnet
