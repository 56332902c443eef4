#pragma once

#include "remnet/tensor.hpp"

namespace remnet {

// image − medianfilter(image), per channel; `window` is the odd filter extent.
// Borders use the window clipped to the image.
Tensor median_residual(const Tensor& img, int window = 3);

// Convolution with the zero-sum kernel [[-1,-1,-1],[-1,8,-1],[-1,-1,-1]]/8,
// identical per channel, replicate-padded so constant images map to zero.
Tensor highpass_filter(const Tensor& img);

}  // namespace remnet
