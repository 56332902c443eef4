#pragma once

#include <string>
#include <vector>

#include "remnet/image.hpp"

namespace remnet {

// One augmentation operation. Legal factors: jpeg quality in {70,80,90},
// rescale in {0.5,0.8,1.5,2.0}, gamma in {0.8,1.2}; `none` ignores the factor.
struct AugmentationSpec {
    enum class Kind { none, jpeg, rescale, gamma };
    Kind kind = Kind::none;
    double factor = 0.0;

    void validate() const;
    // Filesystem-safe label, e.g. "jpeg_70", "rescale_0p5".
    std::string tag() const;
    // Parses tags of the form "none", "jpeg:70", "rescale:0.5", "gamma:1.2".
    static AugmentationSpec parse(const std::string& text);
};

// The standard 9-fold augmentation family (3 compressions, 4 rescales, 2
// gamma corrections).
std::vector<AugmentationSpec> nine_fold_specs();

ImageU8 augment(const ImageU8& img, const AugmentationSpec& spec);

// Cubic-convolution resampling of both dimensions by `factor`.
ImageU8 rescale_bicubic(const ImageU8& img, double factor);
// out = in^g on [0,1] per channel, re-quantized to 8 bits.
ImageU8 gamma_correct(const ImageU8& img, double g);

}  // namespace remnet
