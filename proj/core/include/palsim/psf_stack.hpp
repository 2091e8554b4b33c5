#pragma once

#include <filesystem>
#include <vector>

#include "palsim/kernel.hpp"
#include "palsim/prescription.hpp"
#include "palsim/sensor.hpp"

namespace palsim {

// Per-FoV blur kernels: one per wavelength plus the response-weighted RGB
// collapse. All kernels are non-negative and sum to 1; relative brightness is
// carried separately in `illumination`.
struct PsfStack {
    std::vector<double> fovs;
    std::vector<double> lambdas_nm;
    std::vector<int> kernel_sizes;      // per FoV, odd
    std::vector<double> illumination;   // per FoV, (0, 1]
    double pixel_size_um = 0.0;
    std::vector<std::vector<Kernel>> per_lambda;  // [fov][lambda]
    std::vector<std::vector<Kernel>> per_channel; // [fov][rgb]

    int n_fov() const { return static_cast<int>(fovs.size()); }
    int n_lambda() const { return static_cast<int>(lambdas_nm.size()); }
    int max_kernel_size() const;

    // Index of the FoV sample nearest to a normalized radius in [0, 1].
    int fov_index_for(double normalized_radius) const;

    void validate() const;
};

// K_c = sum_l r[c][l] * K_l, renormalized to sum 1. `response` is 3 x n
// row-major; weights must be non-negative.
std::vector<Kernel> rgb_collapse(const std::vector<Kernel>& per_lambda,
                                 const std::vector<double>& response);

// Nearest odd kernel size for a geometric spot: 2 * spot_radius / pitch,
// minimum 1.
int kernel_size_for_spot(double spot_radius_um, double pixel_size_um);

struct SynthesisOptions {
    int pupil_samples = 512;
    int pad_factor = 2;
    int threads = 0; // 0 = default_thread_count()
};

// Full stack synthesis: per (FoV, lambda) wavefront + diffraction PSF on the
// sensor pitch, then the RGB collapse. Deterministic and safe to run on any
// thread count.
PsfStack synthesize_psf_stack(const OpticalPrescription& prescription, const SensorModel& sensor,
                              const SynthesisOptions& options = {});

// Container I/O (one-line JSON header + raw f32 kernels).
void save_psf_stack(const std::filesystem::path& path, const PsfStack& stack);
PsfStack load_psf_stack(const std::filesystem::path& path);

} // namespace palsim
