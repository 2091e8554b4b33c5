#pragma once

#include "palsim/net/attention.hpp"
#include "palsim/net/layers.hpp"
#include "palsim/net/weights.hpp"
#include "palsim/psfmap.hpp"

namespace palsim::net {

// PSF feature extraction: one 3x3 convolution over the PSF map tensor.
FeatureTensor psf_feature_extract(const FeatureTensor& psf_map, const PartWeights& weights,
                                  const PartConfig& config, int threads = 1);

// PSF-guided per-pixel filtering: the kernel predictor (4x4 average pool, 2x2
// max pool, residual 1x1 block, 1x1 projection) runs at 1/8 resolution, the
// kernel map is bilinearly upsampled x8 and applied as per-pixel, per-channel
// k x k filters. Feature dims must divide by 8.
FeatureTensor pfm_forward(const FeatureTensor& x_img, const FeatureTensor& x_psf_feat,
                          const PartWeights& weights, const std::string& prefix, int k,
                          int threads = 1);

// Mix-attention block: channel split into window attention and varied-size
// attention halves, parallel 1x1 PFM scaled by alpha, residual, then FFN.
FeatureTensor pmab_forward(const FeatureTensor& x, const FeatureTensor& x_psf_feat,
                           const PartWeights& weights, const std::string& prefix,
                           const PartConfig& config, AttnProbe* probe = nullptr, int threads = 1);

struct PartRunInfo {
    int feature_height = 0;
    int feature_width = 0;
    AttnProbe probe;
};

// Full forward pass: task processing (pixel-unshuffle for AC), PSF-map
// concatenation, feature extraction, PFM-bracketed residual transformer
// blocks, reconstruction upsampling. Output is clipped to [0, 1].
AnnularImage part_forward(const AnnularImage& input, const PsfMap& map, const PartConfig& config,
                          const PartWeights& weights, PartRunInfo* info = nullptr,
                          int threads = 0);

} // namespace palsim::net
