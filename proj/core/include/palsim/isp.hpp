#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "palsim/image.hpp"

namespace palsim {

enum class BayerPattern { RGGB, BGGR, GRBG, GBRG };

BayerPattern bayer_from_string(const std::string& name);
std::string bayer_to_string(BayerPattern p);

struct NoiseParams {
    double read_sigma = 0.003;
    double shot_gain = 0.001;
};

struct IspParams {
    std::array<double, 3> wb_gains{1.0, 1.0, 1.0};
    std::array<std::array<double, 3>, 3> ccm{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    double gamma = 2.2;
    BayerPattern bayer_pattern = BayerPattern::RGGB;
    NoiseParams noise;

    static IspParams identity();
    void validate() const; // throws config_error on singular CCM or bad gains
};

struct BayerImage {
    int height = 0;
    int width = 0;
    BayerPattern pattern = BayerPattern::RGGB;
    std::vector<float> data; // row-major mosaic, one sample per pixel

    float& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Gamma decompression, inverse CCM, inverse WB; output clipped to [0, inf).
Image invert_isp(const Image& img, const IspParams& p);

// Optional mosaic -> noise -> demosaic, then WB, CCM, gamma compression;
// clipped to [0, 1]. Deterministic per seed.
Image forward_isp(const Image& raw, const IspParams& p, uint64_t seed, bool mosaic_noise);

// Channel index sampled at mosaic position (y, x) for a pattern.
int bayer_channel_at(BayerPattern p, int y, int x);

BayerImage mosaic(const Image& raw, BayerPattern pattern);
Image demosaic(const BayerImage& bayer); // bilinear

// v' = max(0, v + n), n ~ N(0, read_sigma^2 + shot_gain * v), keyed per pixel.
BayerImage add_noise(const BayerImage& bayer, const NoiseParams& noise, uint64_t seed);

} // namespace palsim
