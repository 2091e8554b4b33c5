#pragma once

#include <string>

#include "palsim/net/layers.hpp"
#include "palsim/net/weights.hpp"

namespace palsim::net {

// Records softmax row sums across every window and head so tests can assert
// they stay at 1.
struct AttnProbe {
    double min_row_sum = 1e300;
    double max_row_sum = -1e300;
    void note(double s) {
        min_row_sum = std::min(min_row_sum, s);
        max_row_sum = std::max(max_row_sum, s);
    }
};

// Window multi-head self-attention with relative position bias. Non-divisible
// dimensions are replicate-padded and cropped back. Weight names under
// `prefix`: qkv_w, qkv_b, proj_w, proj_b, rel_bias.
FeatureTensor wmsa_forward(const FeatureTensor& x, const PartWeights& weights,
                           const std::string& prefix, int window, int heads,
                           AttnProbe* probe = nullptr, int threads = 1);

// Varied-size cross attention: per window and head a scale/offset pair is
// predicted from the window-averaged PSF features (wt_w, wt_b); key/value
// token grids are bilinearly sampled from the affinely transformed window
// (clamped to bounds) and attended against the default-window queries. The
// default-window relative position bias is reused.
FeatureTensor pvsa_forward(const FeatureTensor& x, const FeatureTensor& psf_feat,
                           const PartWeights& weights, const std::string& prefix, int window,
                           int heads, AttnProbe* probe = nullptr, int threads = 1);

} // namespace palsim::net
