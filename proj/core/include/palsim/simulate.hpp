#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "palsim/image.hpp"
#include "palsim/isp.hpp"
#include "palsim/psf_stack.hpp"

namespace palsim {

// Centrosymmetric FoV partition: equal-width rings between r_blind and r_max.
struct FovPartition {
    std::vector<double> ring_edges; // n_rings + 1, increasing
    int n_rings = 0;

    double ring_width() const { return ring_edges[1] - ring_edges[0]; }
    // Half-open intervals, last ring closed; radii beyond the ends clamp.
    int ring_for(double radius) const;
    double ring_center(int ring) const {
        return 0.5 * (ring_edges[static_cast<std::size_t>(ring)] +
                      ring_edges[static_cast<std::size_t>(ring) + 1]);
    }
};

FovPartition partition(const AnnularGeometry& geometry, int n_rings);

// Kernel for one pixel: FoV selected by normalized radius, rotated by the
// pixel azimuth. Blind-area pixels return the innermost kernel unrotated.
// channel in [0,3) selects the RGB-collapsed kernel.
Kernel kernel_for_pixel(const PsfStack& stack, double x, double y,
                        const AnnularGeometry& geometry, int channel = 1);

enum class PipelineMode { AC, SRAC };

struct DegradeOptions {
    PipelineMode mode = PipelineMode::AC;
    int n_sectors = 16;
    uint64_t seed = 0;
    bool mosaic_noise = true;
    int sr_factor = 3;
    int threads = 0;
};

// Spatially-variant blur on a linear image: per (ring, sector) patch the
// RGB-collapsed kernel of the ring-center FoV is rotated to the sector-center
// azimuth and applied by direct convolution (replicate at image borders).
// Per-FoV illumination scales each patch. The blind area passes through.
Image blur_spatially_variant(const Image& linear, const PsfStack& stack,
                             const AnnularGeometry& geometry, const FovPartition& part,
                             int n_sectors, int threads = 0);

// Full degradation: invert-ISP, spatially-variant blur with spectral
// integration (RGB-collapsed kernels), optional x3 bicubic downsample in SRAC
// mode, forward ISP with mosaic/noise. Deterministic per seed.
AnnularImage degrade(const AnnularImage& hq, const PsfStack& stack, const SensorModel& sensor,
                     const FovPartition& part, const DegradeOptions& options);

// Anti-aliased Catmull-Rom downsampling by an integer factor; dimensions must
// divide exactly.
Image downsample_bicubic(const Image& img, int factor);

struct DatasetParams {
    int n_virtual = 10;
    double range_fraction = 0.25;
    uint64_t seed = 0;
    PipelineMode mode = PipelineMode::AC;
    int n_rings = 128;
    int n_sectors = 16;
    bool mosaic_noise = true;
    double r_blind_fraction = 0.15; // geometry defaults relative to image size
    SynthesisOptions synthesis;
    int threads = 0;
    int png_bit_depth = 16;
};

// Generates n_virtual perturbed stacks and degrades every readable PNG in
// hq_dir with each; writes aberration images plus a manifest with seeds and
// SHA-256 hashes. Returns the manifest path.
std::filesystem::path make_dataset(const std::filesystem::path& hq_dir,
                                   const OpticalPrescription& prescription,
                                   const SensorModel& sensor,
                                   const std::filesystem::path& out_dir,
                                   const DatasetParams& params);

} // namespace palsim
