#pragma once

#include <vector>

#include "palsim/image.hpp"
#include "palsim/simulate.hpp"

namespace palsim {

// Frequency-domain Wiener deconvolution of one single-channel patch:
// X = conj(H) Y / (|H|^2 + nsr). The patch is replicate-padded by at least
// the kernel size with the margin tapered toward the patch mean (the inverse
// filter would otherwise smear the circular-wrap discontinuity across the
// interior), then cropped back. With nsr = 0, frequencies where H vanishes
// are zeroed rather than divided.
std::vector<float> wiener_patch(const std::vector<float>& patch, int height, int width,
                                const Kernel& kernel, double nsr);

struct WienerOptions {
    double nsr = 1e-3;
    int n_sectors = 16;
    int threads = 0;
};

// Non-blind recovery mirroring the degradation geometry: invert-ISP, then per
// (ring, sector) Wiener deconvolution with the rotated ring-center
// RGB-collapsed kernels (undoing the per-FoV illumination), then forward ISP
// with noise off. The blind area passes through.
AnnularImage wiener_image(const AnnularImage& img, const PsfStack& stack,
                          const SensorModel& sensor, const FovPartition& part,
                          const WienerOptions& options = {});

} // namespace palsim
