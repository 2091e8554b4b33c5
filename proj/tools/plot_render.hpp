#pragma once

#include <string>
#include <vector>

#include "palsim/image.hpp"
#include "palsim/kernel.hpp"
#include "palsim/sfr.hpp"

namespace palsim::plotting {

// Minimal raster plot: axes box, grid lines, one polyline per curve.
Image render_curves(const std::vector<MtfCurve>& curves, int width = 640, int height = 480);

// Grid of kernels, one cell per entry, each normalized to its own peak.
Image render_kernel_grid(const std::vector<Kernel>& kernels, int columns, int cell_px = 64);

} // namespace palsim::plotting
