#include "remnet/quality.hpp"

#include <algorithm>

namespace remnet {

double quality_score(const Tensor& pixels, const QualityConstants& qc) {
    if (pixels.shape.size() != 3 || pixels.shape[2] != 3)
        throw ShapeError("quality_score: expected [H,W,3], got " + shape_str(pixels.shape));
    const std::size_t n = pixels.numel() / 3;
    double sum[3] = {0, 0, 0}, sumsq[3] = {0, 0, 0};
    for (std::size_t i = 0; i < pixels.data.size(); ++i) {
        const double v = pixels.data[i];
        if (!(v >= 0.0 && v <= 1.0))
            throw ValueError("quality_score: pixel values must be normalized to [0,1]");
        const int c = static_cast<int>(i % 3);
        sum[c] += v;
        sumsq[c] += v * v;
    }
    double q = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double mu = sum[c] / static_cast<double>(n);
        const double var = std::max(0.0, sumsq[c] / static_cast<double>(n) - mu * mu);
        const double sigma = std::sqrt(var);
        q += qc.alpha * qc.beta * (mu - mu * mu) + (1.0 - qc.alpha) * (1.0 - std::exp(qc.gamma * sigma));
    }
    return q / 3.0;
}

Tensor ClusterRecord::to_float() const {
    Tensor t({size, size, 3});
    constexpr float scale = 1.0f / 255.0f;
    for (std::size_t i = 0; i < pixels.size(); ++i) t.data[i] = pixels[i] * scale;
    return t;
}

namespace {

// Grid offsets 0, stride, 2·stride, … plus the final edge-aligned window.
std::vector<int> window_origins(int extent, int size, int stride) {
    std::vector<int> v;
    for (int o = 0; o + size <= extent; o += stride) v.push_back(o);
    if (v.empty() || v.back() != extent - size) v.push_back(extent - size);
    return v;
}

}  // namespace

std::vector<ClusterRecord> extract_top_clusters(const ImageU8& img, int count, int stride,
                                                int size, const QualityConstants& qc) {
    if (count < 1) throw ValueError("extract_top_clusters: count must be positive");
    if (stride < 1) throw ValueError("extract_top_clusters: stride must be positive");
    if (img.width < size || img.height < size)
        throw ValueError("extract_top_clusters: image " + std::to_string(img.width) + "x" +
                         std::to_string(img.height) + " is smaller than the " +
                         std::to_string(size) + "-pixel cluster size");

    struct Candidate {
        int row, col;
        double q;
    };
    std::vector<Candidate> cands;
    Tensor window({size, size, 3});
    for (int row : window_origins(img.height, size, stride))
        for (int col : window_origins(img.width, size, stride)) {
            constexpr float scale = 1.0f / 255.0f;
            for (int y = 0; y < size; ++y) {
                const std::uint8_t* src = &img.pixels[((static_cast<std::size_t>(row) + y) * img.width + col) * 3];
                float* dst = window.data.data() + static_cast<std::size_t>(y) * size * 3;
                for (int i = 0; i < size * 3; ++i) dst[i] = src[i] * scale;
            }
            cands.push_back({row, col, quality_score(window, qc)});
        }

    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.q != b.q) return a.q > b.q;
        if (a.row != b.row) return a.row < b.row;
        return a.col < b.col;
    });
    const std::size_t keep = std::min<std::size_t>(cands.size(), static_cast<std::size_t>(count));

    std::vector<ClusterRecord> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        ClusterRecord rec;
        rec.row = cands[i].row;
        rec.col = cands[i].col;
        rec.size = size;
        rec.quality = cands[i].q;
        rec.pixels.resize(static_cast<std::size_t>(size) * size * 3);
        for (int y = 0; y < size; ++y) {
            const std::uint8_t* src =
                &img.pixels[((static_cast<std::size_t>(rec.row) + y) * img.width + rec.col) * 3];
            std::copy(src, src + static_cast<std::size_t>(size) * 3,
                      rec.pixels.begin() + static_cast<std::size_t>(y) * size * 3);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

namespace {

Tensor crop_at(const Tensor& cluster, int top, int left, int patch) {
    const int h = cluster.shape[0], w = cluster.shape[1];
    if (top < 0 || left < 0 || top + patch > h || left + patch > w)
        throw ValueError("patch crop outside cluster bounds");
    Tensor out({patch, patch, 3});
    for (int y = 0; y < patch; ++y) {
        const float* src = cluster.data.data() + ((static_cast<std::size_t>(top) + y) * w + left) * 3;
        std::copy(src, src + static_cast<std::size_t>(patch) * 3,
                  out.data.data() + static_cast<std::size_t>(y) * patch * 3);
    }
    return out;
}

void require_cluster(const Tensor& cluster, int patch) {
    if (cluster.shape.size() != 3 || cluster.shape[2] != 3)
        throw ShapeError("expected [H,W,3] cluster, got " + shape_str(cluster.shape));
    if (cluster.shape[0] < patch || cluster.shape[1] < patch)
        throw ValueError("cluster smaller than patch size");
}

}  // namespace

Tensor random_patch_crop(const Tensor& cluster, Rng& rng, int patch) {
    require_cluster(cluster, patch);
    const int max_top = cluster.shape[0] - patch;
    const int max_left = cluster.shape[1] - patch;
    const int top = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(max_top) + 1));
    const int left = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(max_left) + 1));
    return crop_at(cluster, top, left, patch);
}

std::vector<Tensor> non_overlapping_patches(const Tensor& cluster, int patch) {
    require_cluster(cluster, patch);
    const int rows = cluster.shape[0] / patch, cols = cluster.shape[1] / patch;
    std::vector<Tensor> out;
    out.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out.push_back(crop_at(cluster, r * patch, c * patch, patch));
    return out;
}

Tensor center_crop(const Tensor& cluster, int patch) {
    require_cluster(cluster, patch);
    return crop_at(cluster, (cluster.shape[0] - patch) / 2, (cluster.shape[1] - patch) / 2, patch);
}

}  // namespace remnet
