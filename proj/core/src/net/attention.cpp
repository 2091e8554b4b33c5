#include "palsim/net/attention.hpp"

#include <cmath>

#include "palsim/error.hpp"
#include "palsim/parallel.hpp"

namespace palsim::net {

namespace {

struct WindowGrid {
    int wins_y = 0;
    int wins_x = 0;
};

// Relative position bias index for token pair (iy,ix) -> (jy,jx).
inline int rel_index(int iy, int ix, int jy, int jx, int window) {
    int dy = jy - iy + window - 1;
    int dx = jx - ix + window - 1;
    return dy * (2 * window - 1) + dx;
}

} // namespace

FeatureTensor wmsa_forward(const FeatureTensor& x, const PartWeights& weights,
                           const std::string& prefix, int window, int heads,
                           AttnProbe* probe, int threads) {
    const int ch = x.channels;
    if (ch % heads != 0) throw argument_error("wmsa: channels must divide by heads");
    FeatureTensor padded = pad_to_multiple(x, window);
    const int h = padded.height, w = padded.width;
    WindowGrid grid{h / window, w / window};
    const int head_dim = ch / heads;
    const int tokens = window * window;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    FeatureTensor qkv = linear_pointwise(padded, weights.get(prefix + ".qkv_w"),
                                         weights.get(prefix + ".qkv_b"), 3 * ch, threads);
    const auto& rel_bias = weights.get(prefix + ".rel_bias");
    FeatureTensor attended(h, w, ch);

    std::vector<AttnProbe> probes(static_cast<std::size_t>(grid.wins_y) * grid.wins_x);
    parallel_for(static_cast<std::size_t>(grid.wins_y) * grid.wins_x, threads,
                 [&](std::size_t win) {
        int wy = static_cast<int>(win) / grid.wins_x;
        int wx = static_cast<int>(win) % grid.wins_x;
        int y0 = wy * window, x0 = wx * window;
        std::vector<double> logits(static_cast<std::size_t>(tokens));
        for (int hd = 0; hd < heads; ++hd) {
            int qo = hd * head_dim, ko = ch + hd * head_dim, vo = 2 * ch + hd * head_dim;
            for (int ti = 0; ti < tokens; ++ti) {
                int iy = ti / window, ix = ti % window;
                double maxlog = -1e300;
                for (int tj = 0; tj < tokens; ++tj) {
                    int jy = tj / window, jx = tj % window;
                    double dot = 0.0;
                    for (int d = 0; d < head_dim; ++d)
                        dot += static_cast<double>(qkv.at(y0 + iy, x0 + ix, qo + d)) *
                               qkv.at(y0 + jy, x0 + jx, ko + d);
                    dot = dot * scale +
                          rel_bias[static_cast<std::size_t>(rel_index(iy, ix, jy, jx, window)) *
                                       heads +
                                   hd];
                    logits[static_cast<std::size_t>(tj)] = dot;
                    maxlog = std::max(maxlog, dot);
                }
                double denom = 0.0;
                for (int tj = 0; tj < tokens; ++tj) {
                    logits[static_cast<std::size_t>(tj)] =
                        std::exp(logits[static_cast<std::size_t>(tj)] - maxlog);
                    denom += logits[static_cast<std::size_t>(tj)];
                }
                double row_sum = 0.0;
                for (int d = 0; d < head_dim; ++d) {
                    double acc = 0.0;
                    for (int tj = 0; tj < tokens; ++tj) {
                        int jy = tj / window, jx = tj % window;
                        acc += logits[static_cast<std::size_t>(tj)] / denom *
                               qkv.at(y0 + jy, x0 + jx, vo + d);
                    }
                    attended.at(y0 + iy, x0 + ix, qo + d) = static_cast<float>(acc);
                }
                for (int tj = 0; tj < tokens; ++tj)
                    row_sum += logits[static_cast<std::size_t>(tj)] / denom;
                probes[win].note(row_sum);
            }
        }
    });
    if (probe)
        for (const auto& p : probes) {
            probe->note(p.min_row_sum);
            probe->note(p.max_row_sum);
        }

    FeatureTensor out = linear_pointwise(attended, weights.get(prefix + ".proj_w"),
                                         weights.get(prefix + ".proj_b"), ch, threads);
    return crop(out, x.height, x.width);
}

FeatureTensor pvsa_forward(const FeatureTensor& x, const FeatureTensor& psf_feat,
                           const PartWeights& weights, const std::string& prefix, int window,
                           int heads, AttnProbe* probe, int threads) {
    const int ch = x.channels;
    if (ch % heads != 0) throw argument_error("pvsa: channels must divide by heads");
    if (psf_feat.height != x.height || psf_feat.width != x.width)
        throw argument_error("pvsa: psf feature resolution mismatch");
    FeatureTensor padded = pad_to_multiple(x, window);
    FeatureTensor psf_padded = pad_to_multiple(psf_feat, window);
    const int h = padded.height, w = padded.width;
    WindowGrid grid{h / window, w / window};
    const int head_dim = ch / heads;
    const int tokens = window * window;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    FeatureTensor qkv = linear_pointwise(padded, weights.get(prefix + ".qkv_w"),
                                         weights.get(prefix + ".qkv_b"), 3 * ch, threads);
    const auto& rel_bias = weights.get(prefix + ".rel_bias");
    const auto& wt_w = weights.get(prefix + ".wt_w");
    const auto& wt_b = weights.get(prefix + ".wt_b");
    const int psf_ch = psf_padded.channels;
    if (wt_w.size() != static_cast<std::size_t>(4 * heads) * psf_ch)
        throw argument_error("pvsa: window transform weight shape mismatch");

    // Bilinear sample of one K/V channel from the padded qkv tensor.
    auto sample = [&](double sy, double sx, int channel) {
        sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
        sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
        int y0 = static_cast<int>(std::floor(sy));
        int x0 = static_cast<int>(std::floor(sx));
        int y1 = std::min(y0 + 1, h - 1);
        int x1 = std::min(x0 + 1, w - 1);
        double fy = sy - y0, fx = sx - x0;
        return (1.0 - fy) * ((1.0 - fx) * qkv.at(y0, x0, channel) + fx * qkv.at(y0, x1, channel)) +
               fy * ((1.0 - fx) * qkv.at(y1, x0, channel) + fx * qkv.at(y1, x1, channel));
    };

    FeatureTensor attended(h, w, ch);
    std::vector<AttnProbe> probes(static_cast<std::size_t>(grid.wins_y) * grid.wins_x);
    parallel_for(static_cast<std::size_t>(grid.wins_y) * grid.wins_x, threads,
                 [&](std::size_t win) {
        int wy = static_cast<int>(win) / grid.wins_x;
        int wx = static_cast<int>(win) % grid.wins_x;
        int y0 = wy * window, x0 = wx * window;
        double wcy = y0 + 0.5 * (window - 1);
        double wcx = x0 + 0.5 * (window - 1);

        // Window transform from the pooled PSF features (Sx, Sy, Ox, Oy per head).
        std::vector<double> pooled(static_cast<std::size_t>(psf_ch), 0.0);
        for (int iy = 0; iy < window; ++iy)
            for (int ix = 0; ix < window; ++ix)
                for (int c = 0; c < psf_ch; ++c)
                    pooled[static_cast<std::size_t>(c)] += psf_padded.at(y0 + iy, x0 + ix, c);
        for (auto& v : pooled) v /= tokens;

        std::vector<double> transform(static_cast<std::size_t>(4 * heads));
        for (int o = 0; o < 4 * heads; ++o) {
            double acc = wt_b[static_cast<std::size_t>(o)];
            for (int c = 0; c < psf_ch; ++c)
                acc += static_cast<double>(wt_w[static_cast<std::size_t>(o) * psf_ch + c]) *
                       pooled[static_cast<std::size_t>(c)];
            transform[static_cast<std::size_t>(o)] = acc;
        }

        std::vector<double> kv(static_cast<std::size_t>(tokens) * 2 * head_dim);
        std::vector<double> logits(static_cast<std::size_t>(tokens));
        for (int hd = 0; hd < heads; ++hd) {
            double sx_scale = 1.0 + transform[static_cast<std::size_t>(4 * hd)];
            double sy_scale = 1.0 + transform[static_cast<std::size_t>(4 * hd + 1)];
            double ox = transform[static_cast<std::size_t>(4 * hd + 2)];
            double oy = transform[static_cast<std::size_t>(4 * hd + 3)];
            int qo = hd * head_dim, ko = ch + hd * head_dim, vo = 2 * ch + hd * head_dim;

            // Sample the transformed K/V token grid once per head.
            for (int tj = 0; tj < tokens; ++tj) {
                int jy = tj / window, jx = tj % window;
                double py = wcy + sy_scale * (y0 + jy - wcy) + oy;
                double px = wcx + sx_scale * (x0 + jx - wcx) + ox;
                for (int d = 0; d < head_dim; ++d) {
                    kv[(static_cast<std::size_t>(tj) * 2) * head_dim + d] = sample(py, px, ko + d);
                    kv[(static_cast<std::size_t>(tj) * 2 + 1) * head_dim + d] =
                        sample(py, px, vo + d);
                }
            }

            for (int ti = 0; ti < tokens; ++ti) {
                int iy = ti / window, ix = ti % window;
                double maxlog = -1e300;
                for (int tj = 0; tj < tokens; ++tj) {
                    int jy = tj / window, jx = tj % window;
                    double dot = 0.0;
                    for (int d = 0; d < head_dim; ++d)
                        dot += static_cast<double>(qkv.at(y0 + iy, x0 + ix, qo + d)) *
                               kv[(static_cast<std::size_t>(tj) * 2) * head_dim + d];
                    dot = dot * scale +
                          rel_bias[static_cast<std::size_t>(rel_index(iy, ix, jy, jx, window)) *
                                       heads +
                                   hd];
                    logits[static_cast<std::size_t>(tj)] = dot;
                    maxlog = std::max(maxlog, dot);
                }
                double denom = 0.0;
                for (int tj = 0; tj < tokens; ++tj) {
                    logits[static_cast<std::size_t>(tj)] =
                        std::exp(logits[static_cast<std::size_t>(tj)] - maxlog);
                    denom += logits[static_cast<std::size_t>(tj)];
                }
                double row_sum = 0.0;
                for (int d = 0; d < head_dim; ++d) {
                    double acc = 0.0;
                    for (int tj = 0; tj < tokens; ++tj)
                        acc += logits[static_cast<std::size_t>(tj)] / denom *
                               kv[(static_cast<std::size_t>(tj) * 2 + 1) * head_dim + d];
                    attended.at(y0 + iy, x0 + ix, qo + d) = static_cast<float>(acc);
                }
                for (int tj = 0; tj < tokens; ++tj)
                    row_sum += logits[static_cast<std::size_t>(tj)] / denom;
                probes[win].note(row_sum);
            }
        }
    });
    if (probe)
        for (const auto& p : probes) {
            probe->note(p.min_row_sum);
            probe->note(p.max_row_sum);
        }

    FeatureTensor out = linear_pointwise(attended, weights.get(prefix + ".proj_w"),
                                         weights.get(prefix + ".proj_b"), ch, threads);
    return crop(out, x.height, x.width);
}

} // namespace palsim::net
