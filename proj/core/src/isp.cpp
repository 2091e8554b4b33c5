#include "palsim/isp.hpp"

#include <cmath>

#include "palsim/error.hpp"
#include "palsim/rng.hpp"

namespace palsim {

BayerPattern bayer_from_string(const std::string& name) {
    if (name == "RGGB") return BayerPattern::RGGB;
    if (name == "BGGR") return BayerPattern::BGGR;
    if (name == "GRBG") return BayerPattern::GRBG;
    if (name == "GBRG") return BayerPattern::GBRG;
    throw argument_error("unknown bayer pattern: " + name);
}

std::string bayer_to_string(BayerPattern p) {
    switch (p) {
        case BayerPattern::RGGB: return "RGGB";
        case BayerPattern::BGGR: return "BGGR";
        case BayerPattern::GRBG: return "GRBG";
        case BayerPattern::GBRG: return "GBRG";
    }
    return "RGGB";
}

IspParams IspParams::identity() {
    IspParams p;
    p.gamma = 1.0;
    p.noise.read_sigma = 0.0;
    p.noise.shot_gain = 0.0;
    return p;
}

namespace {

double ccm_det(const std::array<std::array<double, 3>, 3>& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

std::array<std::array<double, 3>, 3> ccm_inverse(const std::array<std::array<double, 3>, 3>& m) {
    double det = ccm_det(m);
    if (std::abs(det) <= 1e-9) throw config_error("isp: color correction matrix is singular");
    std::array<std::array<double, 3>, 3> inv;
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    return inv;
}

} // namespace

void IspParams::validate() const {
    for (double g : wb_gains)
        if (!(g > 0.0)) throw config_error("isp: white balance gains must be positive");
    if (!(gamma > 0.0)) throw config_error("isp: gamma must be positive");
    if (std::abs(ccm_det(ccm)) <= 1e-9)
        throw config_error("isp: color correction matrix is singular");
    if (noise.read_sigma < 0.0 || noise.shot_gain < 0.0)
        throw config_error("isp: noise parameters must be non-negative");
}

Image invert_isp(const Image& img, const IspParams& p) {
    if (img.channels != 3) throw argument_error("invert_isp: expected 3 channels");
    p.validate();
    auto inv = ccm_inverse(p.ccm);
    Image out(img.height, img.width, 3);
    const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
    for (std::size_t i = 0; i < n; ++i) {
        double v[3];
        for (int c = 0; c < 3; ++c) {
            double x = img.data[i * 3 + c];
            x = std::max(0.0, std::min(1.0, x));
            v[c] = std::pow(x, p.gamma);
        }
        double w[3];
        for (int c = 0; c < 3; ++c)
            w[c] = inv[c][0] * v[0] + inv[c][1] * v[1] + inv[c][2] * v[2];
        for (int c = 0; c < 3; ++c) {
            double x = w[c] / p.wb_gains[static_cast<std::size_t>(c)];
            out.data[i * 3 + c] = static_cast<float>(std::max(0.0, x));
        }
    }
    return out;
}

Image forward_isp(const Image& raw, const IspParams& p, uint64_t seed, bool mosaic_noise) {
    if (raw.channels != 3) throw argument_error("forward_isp: expected 3 channels");
    p.validate();
    Image linear = raw;
    if (mosaic_noise) {
        BayerImage b = mosaic(raw, p.bayer_pattern);
        b = add_noise(b, p.noise, seed);
        linear = demosaic(b);
    }
    Image out(raw.height, raw.width, 3);
    const std::size_t n = static_cast<std::size_t>(raw.height) * raw.width;
    const double inv_gamma = 1.0 / p.gamma;
    for (std::size_t i = 0; i < n; ++i) {
        double v[3];
        for (int c = 0; c < 3; ++c)
            v[c] = linear.data[i * 3 + c] * p.wb_gains[static_cast<std::size_t>(c)];
        for (int c = 0; c < 3; ++c) {
            double x = p.ccm[static_cast<std::size_t>(c)][0] * v[0] +
                       p.ccm[static_cast<std::size_t>(c)][1] * v[1] +
                       p.ccm[static_cast<std::size_t>(c)][2] * v[2];
            x = std::max(0.0, x);
            x = std::pow(x, inv_gamma);
            out.data[i * 3 + c] = static_cast<float>(std::min(1.0, x));
        }
    }
    return out;
}

int bayer_channel_at(BayerPattern p, int y, int x) {
    static const int table[4][2][2] = {
        {{0, 1}, {1, 2}}, // RGGB
        {{2, 1}, {1, 0}}, // BGGR
        {{1, 0}, {2, 1}}, // GRBG
        {{1, 2}, {0, 1}}, // GBRG
    };
    return table[static_cast<int>(p)][y & 1][x & 1];
}

BayerImage mosaic(const Image& raw, BayerPattern pattern) {
    if (raw.channels != 3) throw argument_error("mosaic: expected 3 channels");
    if (raw.height % 2 != 0 || raw.width % 2 != 0)
        throw argument_error("mosaic: image dimensions must be even");
    BayerImage b;
    b.height = raw.height;
    b.width = raw.width;
    b.pattern = pattern;
    b.data.resize(static_cast<std::size_t>(raw.height) * raw.width);
    for (int y = 0; y < raw.height; ++y)
        for (int x = 0; x < raw.width; ++x)
            b.at(y, x) = raw.at(y, x, bayer_channel_at(pattern, y, x));
    return b;
}

Image demosaic(const BayerImage& bayer) {
    if (bayer.height % 2 != 0 || bayer.width % 2 != 0)
        throw argument_error("demosaic: image dimensions must be even");
    const int h = bayer.height, w = bayer.width;
    Image out(h, w, 3);
    // Border samples reflect by two pixels so the Bayer phase is preserved.
    auto sample = [&](int y, int x) {
        if (y < 0) y += 2;
        if (y >= h) y -= 2;
        if (x < 0) x += 2;
        if (x >= w) x -= 2;
        return static_cast<double>(bayer.at(y, x));
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int s = bayer_channel_at(bayer.pattern, y, x);
            for (int c = 0; c < 3; ++c) {
                double v;
                if (c == s) {
                    v = sample(y, x);
                } else if (c == 1) {
                    // green at a red/blue site: plus-shaped neighbors
                    v = 0.25 * (sample(y - 1, x) + sample(y + 1, x) + sample(y, x - 1) +
                                sample(y, x + 1));
                } else if (s == 1) {
                    // red/blue at a green site: the channel lives either in
                    // this row or this column
                    bool in_row = bayer_channel_at(bayer.pattern, y, x - 1) == c ||
                                  bayer_channel_at(bayer.pattern, y, x + 1) == c;
                    if (in_row)
                        v = 0.5 * (sample(y, x - 1) + sample(y, x + 1));
                    else
                        v = 0.5 * (sample(y - 1, x) + sample(y + 1, x));
                } else {
                    // red at blue site or vice versa: diagonal neighbors
                    v = 0.25 * (sample(y - 1, x - 1) + sample(y - 1, x + 1) +
                                sample(y + 1, x - 1) + sample(y + 1, x + 1));
                }
                out.at(y, x, c) = static_cast<float>(v);
            }
        }
    }
    return out;
}

BayerImage add_noise(const BayerImage& bayer, const NoiseParams& noise, uint64_t seed) {
    if (noise.read_sigma < 0.0 || noise.shot_gain < 0.0)
        throw argument_error("add_noise: parameters must be non-negative");
    BayerImage out = bayer;
    if (noise.read_sigma == 0.0 && noise.shot_gain == 0.0) return out;
    const std::size_t n = out.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        double v = out.data[i];
        double var = noise.read_sigma * noise.read_sigma + noise.shot_gain * std::max(0.0, v);
        double nval = standard_normal(mix_key(seed, i)) * std::sqrt(var);
        out.data[i] = static_cast<float>(std::max(0.0, v + nval));
    }
    return out;
}

} // namespace palsim
