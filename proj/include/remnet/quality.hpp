#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "remnet/common.hpp"
#include "remnet/image.hpp"
#include "remnet/tensor.hpp"

namespace remnet {

// Constants of the patch-quality measure; defaults are the standard values.
struct QualityConstants {
    double alpha = 0.7;
    double beta = 4.0;
    double gamma = std::log(0.01);
};

// Q = (1/3) Σ_c [ α·β·(μ_c − μ_c²) + (1−α)·(1 − e^{γ·σ_c}) ] over RGB
// channels, with per-channel mean μ and population standard deviation σ of
// pixels normalized to [0,1]. Rejects values outside [0,1].
double quality_score(const Tensor& pixels, const QualityConstants& qc = {});

// A 256×256 region cut from a source image, scored and ready for patching.
struct ClusterRecord {
    int source_index = -1;  // manifest row of the source image
    int label = -1;         // class id carried along for training
    int row = 0, col = 0;   // top-left origin in the source image
    int size = 256;
    double quality = 0.0;
    std::vector<std::uint8_t> pixels;  // size×size×3 interleaved RGB

    Tensor to_float() const;  // [size,size,3] in [0,1]
};

// Scores every size×size window on a `stride` grid (plus the bottom/right
// edge-aligned windows) and returns the `count` best by Q, sorted descending,
// ties broken by (row, col) ascending. Returns fewer when the image has fewer
// windows than `count`.
std::vector<ClusterRecord> extract_top_clusters(const ImageU8& img, int count, int stride = 64,
                                                int size = 256, const QualityConstants& qc = {});

// Uniformly random patch×patch crop; offsets in [0, size−patch]².
Tensor random_patch_crop(const Tensor& cluster, Rng& rng, int patch = 64);

// The (size/patch)² non-overlapping tiling in row-major order.
std::vector<Tensor> non_overlapping_patches(const Tensor& cluster, int patch = 64);

Tensor center_crop(const Tensor& cluster, int patch = 64);

}  // namespace remnet
