#pragma once

#include <vector>

#include "palsim/image.hpp"

namespace palsim::net {

// Feature tensors reuse the interleaved float image type (H x W x C).
using FeatureTensor = Image;

// Space-to-channel rearrangement; output channel index is c*r^2 + dy*r + dx.
// pixel_shuffle is its exact inverse.
FeatureTensor pixel_unshuffle(const FeatureTensor& x, int r);
FeatureTensor pixel_shuffle(const FeatureTensor& x, int r);

// Dense 2-D convolution, zero padding, stride 1. weight is
// [out_ch][in_ch][k][k] flattened row-major; bias has out_ch entries.
FeatureTensor conv2d(const FeatureTensor& x, const std::vector<float>& weight,
                     const std::vector<float>& bias, int out_ch, int ksize, int threads = 1);

// Pointwise linear layer: weight [out][in].
FeatureTensor linear_pointwise(const FeatureTensor& x, const std::vector<float>& weight,
                               const std::vector<float>& bias, int out_ch, int threads = 1);

FeatureTensor avg_pool(const FeatureTensor& x, int size);
FeatureTensor max_pool(const FeatureTensor& x, int size);

// Bilinear upsample by an integer factor, half-pixel aligned (a constant map
// stays constant exactly).
FeatureTensor bilinear_upsample(const FeatureTensor& x, int factor);

// Per-pixel, per-channel k x k filtering with kernels stored channel-last as
// c*k^2 + (ky*k + kx); x is replicate-padded.
FeatureTensor apply_pixel_kernels(const FeatureTensor& x, const FeatureTensor& kernel_map, int k,
                                  int threads = 1);

// LayerNorm over the channel dimension of each pixel.
FeatureTensor layer_norm(const FeatureTensor& x, const std::vector<float>& gamma,
                         const std::vector<float>& beta, double eps);

FeatureTensor gelu(const FeatureTensor& x);
FeatureTensor relu(const FeatureTensor& x);

FeatureTensor concat_channels(const FeatureTensor& a, const FeatureTensor& b);
FeatureTensor slice_channels(const FeatureTensor& x, int from, int count);
FeatureTensor add(const FeatureTensor& a, const FeatureTensor& b);

// Replicate-pad on the bottom/right up to multiples of `multiple`.
FeatureTensor pad_to_multiple(const FeatureTensor& x, int multiple);
FeatureTensor crop(const FeatureTensor& x, int height, int width);

} // namespace palsim::net
