#pragma once

#include <filesystem>

#include "palsim/image.hpp"

namespace palsim {

// Reads an 8- or 16-bit PNG into a 3-channel float image in [0,1].
// Grayscale expands to RGB; alpha is dropped.
Image read_png(const std::filesystem::path& path);

// Writes a 3-channel float image, clipped to [0,1], as 8- or 16-bit PNG.
// The write is atomic (temp + rename).
void write_png(const std::filesystem::path& path, const Image& img, int bit_depth = 16);

} // namespace palsim
