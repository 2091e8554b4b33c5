#pragma once

#include "palsim/image.hpp"

namespace palsim {

struct CheckerGt {
    Image binary;        // 3 channels, values 0 or 1
    bool degenerate = false; // single region found; input returned as-is
};

// Reference generation for blurred black/white checker patches: Gaussian
// pre-smooth (sigma 1), Otsu threshold on luma, then each connected region is
// re-colored pure black or white by its mean original intensity.
CheckerGt checker_gt(const Image& degraded_patch);

// Otsu threshold over a scalar field (256 bins spanning [min, max]).
double otsu_threshold(const std::vector<double>& values);

} // namespace palsim
