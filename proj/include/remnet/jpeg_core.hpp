#pragma once

#include "remnet/image.hpp"

namespace remnet {

// In-memory baseline-DCT compression round trip: RGB → YCbCr, per-channel 8×8
// DCT, quantization with the standard tables scaled by `quality_factor`
// (1..100, higher = finer), dequantization, inverse DCT, back to RGB. No
// subsampling and no entropy coding — only the lossy stage, which is all the
// augmentation and sensor simulation need. `quant_scale` additionally
// multiplies the quantization tables (1.0 = standard behaviour).
ImageU8 jpeg_round_trip(const ImageU8& img, int quality_factor, double quant_scale = 1.0);

}  // namespace remnet
