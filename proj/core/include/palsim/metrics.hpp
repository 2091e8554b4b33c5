#pragma once

#include <optional>

#include "palsim/image.hpp"

namespace palsim {

// Mask: same H x W as the images, nonzero = included. Empty optional = all.
using MetricMask = std::vector<unsigned char>;

// Builds the annulus mask (blind area and beyond r_max excluded).
MetricMask annulus_mask(const AnnularGeometry& geometry, int height, int width);

// PSNR in dB over [0,1] data, capped at 100 dB when MSE < 1e-10.
double psnr(const Image& a, const Image& b, const MetricMask* mask = nullptr);

// SSIM on luma, 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2.
double ssim(const Image& a, const Image& b, const MetricMask* mask = nullptr);

double luma(float r, float g, float b);

} // namespace palsim
