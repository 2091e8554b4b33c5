#include "palsim/net/part.hpp"

#include <cmath>

#include "palsim/error.hpp"

namespace palsim::net {

FeatureTensor psf_feature_extract(const FeatureTensor& psf_map, const PartWeights& weights,
                                  const PartConfig& config, int threads) {
    if (psf_map.channels != config.map_channels())
        throw argument_error("psf_feature_extract: map channels do not match k_prime");
    return conv2d(psf_map, weights.get("e_psf_w"), weights.get("e_psf_b"), config.channels, 3,
                  threads);
}

FeatureTensor pfm_forward(const FeatureTensor& x_img, const FeatureTensor& x_psf_feat,
                          const PartWeights& weights, const std::string& prefix, int k,
                          int threads) {
    if (x_img.height != x_psf_feat.height || x_img.width != x_psf_feat.width)
        throw argument_error("pfm: feature resolution mismatch");
    if (x_img.height % 8 != 0 || x_img.width % 8 != 0)
        throw argument_error("pfm: feature dimensions must divide by 8");
    const int C = x_img.channels;

    FeatureTensor z = avg_pool(x_psf_feat, 4);
    z = max_pool(z, 2);
    FeatureTensor r = conv2d(z, weights.get(prefix + ".res1_w"), weights.get(prefix + ".res1_b"),
                             C, 1, threads);
    r = relu(r);
    r = conv2d(r, weights.get(prefix + ".res2_w"), weights.get(prefix + ".res2_b"), C, 1,
               threads);
    z = add(z, r);
    FeatureTensor kernel_small = conv2d(z, weights.get(prefix + ".out_w"),
                                        weights.get(prefix + ".out_b"), C * k * k, 1, threads);
    FeatureTensor kernel_map = bilinear_upsample(kernel_small, 8);
    return apply_pixel_kernels(x_img, kernel_map, k, threads);
}

FeatureTensor pmab_forward(const FeatureTensor& x, const FeatureTensor& x_psf_feat,
                           const PartWeights& weights, const std::string& prefix,
                           const PartConfig& config, AttnProbe* probe, int threads) {
    const int C = x.channels;
    if (C % 2 != 0) throw argument_error("pmab: channels must be even");
    const int Ch = C / 2;

    FeatureTensor h1 = slice_channels(x, 0, Ch);
    FeatureTensor h2 = slice_channels(x, Ch, Ch);
    FeatureTensor a1 = wmsa_forward(h1, weights, prefix + ".wmsa", config.window_size,
                                    config.heads, probe, threads);
    FeatureTensor a2 = pvsa_forward(h2, x_psf_feat, weights, prefix + ".pvsa",
                                    config.window_size, config.heads, probe, threads);
    FeatureTensor x_attn = concat_channels(a1, a2);

    FeatureTensor modulated = pfm_forward(x, x_psf_feat, weights, prefix + ".pfm", 1, threads);
    FeatureTensor x_mix = x;
    for (std::size_t i = 0; i < x_mix.data.size(); ++i)
        x_mix.data[i] = static_cast<float>(x_attn.data[i] +
                                           config.alpha * modulated.data[i] + x.data[i]);

    FeatureTensor y = layer_norm(x_mix, weights.get(prefix + ".ffn.ln_g"),
                                 weights.get(prefix + ".ffn.ln_b"), config.ln_eps);
    y = linear_pointwise(y, weights.get(prefix + ".ffn.fc1_w"), weights.get(prefix + ".ffn.fc1_b"),
                         config.ffn_ratio * C, threads);
    y = gelu(y);
    y = linear_pointwise(y, weights.get(prefix + ".ffn.fc2_w"), weights.get(prefix + ".ffn.fc2_b"),
                         C, threads);
    return add(x_mix, y);
}

namespace {

FeatureTensor prtb_forward(const FeatureTensor& x, const FeatureTensor& x_psf_feat,
                           const PartWeights& weights, const std::string& prefix,
                           const PartConfig& config, AttnProbe* probe, int threads) {
    FeatureTensor z = x;
    for (int j = 0; j < config.n_pmab; ++j)
        z = pmab_forward(z, x_psf_feat, weights, prefix + ".pmab" + std::to_string(j), config,
                         probe, threads);
    z = conv2d(z, weights.get(prefix + ".conv_w"), weights.get(prefix + ".conv_b"),
               config.channels, 3, threads);
    z = pfm_forward(z, x_psf_feat, weights, prefix + ".pfm", config.pfm_kernel, threads);
    return add(z, x);
}

} // namespace

AnnularImage part_forward(const AnnularImage& input, const PsfMap& map, const PartConfig& config,
                          const PartWeights& weights, PartRunInfo* info, int threads) {
    config.validate();
    if (threads <= 0) threads = 1;
    const Image& img = input.pixels;
    if (img.channels != 3) throw config_error("part_forward: expected a 3-channel image");

    const int r = config.unshuffle_factor();
    if (img.height % r != 0 || img.width % r != 0)
        throw config_error("part_forward: input dimensions must divide by the unshuffle factor");
    FeatureTensor x_in = pixel_unshuffle(img, r);
    const int fh = x_in.height, fw = x_in.width;
    if (fh % 8 != 0 || fw % 8 != 0)
        throw config_error("part_forward: representation resolution must divide by 8");
    if (map.data.height != fh || map.data.width != fw)
        throw config_error("part_forward: psf map resolution must match the representation "
                           "resolution (use downscale_map for AC)");
    if (map.k_prime != config.k_prime)
        throw config_error("part_forward: psf map k_prime does not match the config");

    FeatureTensor x_cat = concat_channels(x_in, map.data);
    FeatureTensor feat = conv2d(x_cat, weights.get("feat_w"), weights.get("feat_b"),
                                config.channels, 3, threads);
    FeatureTensor psf_feat = psf_feature_extract(map.data, weights, config, threads);

    AttnProbe probe;
    FeatureTensor z = pfm_forward(feat, psf_feat, weights, "pfm_in", config.pfm_kernel, threads);
    for (int i = 0; i < config.n_prtb; ++i)
        z = prtb_forward(z, psf_feat, weights, "prtb" + std::to_string(i), config, &probe,
                         threads);
    z = pfm_forward(z, psf_feat, weights, "pfm_out", config.pfm_kernel, threads);

    FeatureTensor up = conv2d(z, weights.get("recon.up_w"), weights.get("recon.up_b"),
                              3 * config.upscale * config.upscale, 3, threads);
    up = pixel_shuffle(up, config.upscale);
    FeatureTensor out = conv2d(up, weights.get("recon.out_w"), weights.get("recon.out_b"), 3, 3,
                               threads);
    for (auto& v : out.data) v = std::clamp(v, 0.0f, 1.0f);

    if (info) {
        info->feature_height = fh;
        info->feature_width = fw;
        info->probe = probe;
    }

    AnnularImage result;
    result.pixels = std::move(out);
    result.geometry = input.geometry;
    if (config.mode == TaskMode::SRAC) {
        int s = config.upscale;
        result.geometry.cx = input.geometry.cx * s + 0.5 * (s - 1);
        result.geometry.cy = input.geometry.cy * s + 0.5 * (s - 1);
        result.geometry.r_blind = input.geometry.r_blind * s;
        result.geometry.r_max = input.geometry.r_max * s;
    }
    return result;
}

} // namespace palsim::net
