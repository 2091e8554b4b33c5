#pragma once

#include <vector>

#include "palsim/image.hpp"

namespace palsim {

// MTF sampled on [0, 0.5] cycles/pixel, normalized to 1 at DC.
struct MtfCurve {
    std::vector<double> frequencies;
    std::vector<double> values;
};

// Slanted-edge SFR measurement on a single-channel patch containing one
// near-vertical edge (about 2-10 degrees of slant). Pipeline: centroid edge
// fit, edge-normal projection, 1/oversample binning into the ESF, centered
// finite difference to the LSF, Hamming window, DFT magnitude, DC
// normalization, discrete-derivative correction. Throws measurement_error
// when no usable edge is present.
MtfCurve sfr(const std::vector<float>& patch, int height, int width, int oversample = 4);
MtfCurve sfr(const Image& patch, int oversample = 4); // on luma

// First downward 0.5 crossing by linear interpolation; 0.5 cycles/px if the
// curve never drops below 0.5.
double mtf50(const MtfCurve& curve);

// Trapezoidal area under the curve over [0, 0.5].
double mtf_area(const MtfCurve& curve);

struct OiqeResult {
    double oiqe50 = 0.0;
    double oiqe_area = 0.0;
    double oiqe = 0.0;
};

// Ratios of mean MTF50 and mean MTFarea between a test pipeline and a
// reference system; unclamped.
OiqeResult oiqe(const std::vector<MtfCurve>& test_curves,
                const std::vector<MtfCurve>& ref_curves);

} // namespace palsim
