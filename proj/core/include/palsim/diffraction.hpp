#pragma once

#include <vector>

#include "palsim/kernel.hpp"
#include "palsim/prescription.hpp"
#include "palsim/zernike.hpp"

namespace palsim {

// Exit-pupil phase map in waves on an N x N grid; zero outside the unit disc.
struct PhaseMap {
    int size = 0;
    std::vector<double> waves;
};

// Phi = sum_j C_j Z_j over the pupil disc. pupil_samples must be a power of
// two >= 64. The shared-basis overload avoids rebuilding Z_j maps per call.
PhaseMap wavefront(const ZernikeGrid& grid, int fov_index, int lambda_index, int pupil_samples);
PhaseMap wavefront(const ZernikeGrid& grid, int fov_index, int lambda_index,
                   const ZernikeBasis& basis);

// Image-plane sample spacing of the diffraction grid, in micrometers.
double plate_scale_um(double lambda_nm, double d_mm, double pupil_radius_mm, int pupil_samples,
                      int pad_factor);

// |E|^2 on the central out_size x out_size window of the image plane, sampled
// on the zero-padded transform grid (pad_factor times the pupil grid). The
// samples are computed by a pruned DFT and are identical to the corresponding
// bins of a full padded FFT. out_size must be odd.
struct DiffractionField {
    int size = 0;
    double plate_scale_um = 0.0;
    std::vector<double> intensity; // row-major, DC at the center sample
};
DiffractionField diffraction_intensity(const PhaseMap& phase, double lambda_nm, double d_mm,
                                       double pupil_radius_mm, int out_size, int pad_factor);

// PSF on the native diffraction grid: |E|^2 center-cropped to kernel_px and
// renormalized to sum 1. kernel_px must be odd and <= the pupil grid size.
Kernel psf_from_wavefront(const PhaseMap& phase, double lambda_nm, double d_mm,
                          double pupil_radius_mm, int kernel_px, int pad_factor = 2);

// PSF resampled onto the sensor pitch (bilinear, DC-centred), cropped to
// kernel_px and renormalized. Throws config_error with the required pupil
// grid size when the kernel would not fit on the diffraction grid.
Kernel psf_on_sensor_pitch(const PhaseMap& phase, double lambda_nm, double d_mm,
                           double pupil_radius_mm, int kernel_px, double pixel_size_um,
                           int pad_factor = 2);

} // namespace palsim
