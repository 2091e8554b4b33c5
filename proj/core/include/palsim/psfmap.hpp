#pragma once

#include <filesystem>

#include "palsim/image.hpp"
#include "palsim/psf_stack.hpp"

namespace palsim {

// Aligned PSF modality: per pixel the compressed kernel intensities (k'^2
// channels, each pixel summing to 1) followed by 3 kernel-size channels
// normalized by the stack maximum.
struct PsfMap {
    int k_prime = 0;
    Image data; // H x W x (k'^2 + 3)
    AnnularGeometry geometry;

    int intensity_channels() const { return k_prime * k_prime; }
};

enum class PsfMapChannel { R, G, B, Luma };

// Zero-pads K to pad_to x pad_to, pools to k_prime x k_prime with
// equal-coverage bins (fractional edges area-weighted), renormalizes to sum 1.
Kernel compress_kernel(const Kernel& k, int k_prime, int pad_to);

// Builds the map at the given resolution: per pixel locate the FoV by
// normalized radius, rotate by the signed azimuth, compress, and write the
// intensity plus size channels. Blind-area pixels use the innermost FoV
// unrotated.
PsfMap build_psf_map(const PsfStack& stack, const AnnularGeometry& geometry, int height,
                     int width, int k_prime, PsfMapChannel channel = PsfMapChannel::G,
                     int threads = 0);

// Area-averages every channel by an integer factor, renormalizing the
// intensity channels per pixel. Dimensions must divide exactly.
PsfMap downscale_map(const PsfMap& map, int factor);

void save_psf_map(const std::filesystem::path& path, const PsfMap& map);
PsfMap load_psf_map(const std::filesystem::path& path);

} // namespace palsim
