#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace palsim {

// Zernike coefficient grid in waves, indexed [lambda][fov][poly].
struct ZernikeGrid {
    std::vector<double> lambdas_nm;  // strictly increasing
    std::vector<double> fovs;        // normalized field heights, increasing, last = 1
    int n_poly = 0;
    std::vector<double> coeffs;      // n_lambda * n_fov * n_poly

    int n_lambda() const { return static_cast<int>(lambdas_nm.size()); }
    int n_fov() const { return static_cast<int>(fovs.size()); }

    double& at(int l, int f, int j) {
        return coeffs[(static_cast<std::size_t>(l) * fovs.size() + f) * n_poly + (j - 1)];
    }
    double at(int l, int f, int j) const {
        return coeffs[(static_cast<std::size_t>(l) * fovs.size() + f) * n_poly + (j - 1)];
    }

    void validate() const;
};

struct OpticalPrescription {
    ZernikeGrid zernike;
    std::vector<double> spot_radius_um;  // per FoV, > 0
    std::vector<double> illumination;    // per FoV, in (0, 1]
    double exit_pupil_distance_mm = 0.0;
    double pupil_radius_mm = 0.0;

    void validate() const;
};

// Multiplies every coefficient c by (1 + u), u uniform in +-range_fraction,
// drawn from a counter-based stream keyed by (seed, lambda, fov, poly).
OpticalPrescription perturb(const OpticalPrescription& p, double range_fraction, uint64_t seed);

OpticalPrescription load_prescription(const std::filesystem::path& path);
void save_prescription(const std::filesystem::path& path, const OpticalPrescription& p);

// Synthetic prescription with field-dependent defocus/astigmatism/coma and a
// mild chromatic trend; spot radii scaled so their mean matches
// mean_spot_radius_um. Intended for presets and tests, not a lens design.
struct SyntheticPrescriptionParams {
    int n_lambda = 31;
    int n_fov = 128;
    int n_poly = 37;
    double mean_spot_radius_um = 13.78;
    double exit_pupil_distance_mm = 10.0;
    double pupil_radius_mm = 1.5;
    double aberration_scale = 1.0;
    uint64_t seed = 0;
};
OpticalPrescription make_synthetic_prescription(const SyntheticPrescriptionParams& params);

} // namespace palsim
