#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "palsim/isp.hpp"

namespace palsim {

// Imaging sensor: pixel pitch, resolution, RGB spectral response sampled at
// the prescription wavelengths (rows sum to 1), and the ISP profile.
struct SensorModel {
    double pixel_size_um = 1.34;
    int height = 0;
    int width = 0;
    std::vector<double> lambdas_nm;
    std::vector<double> response; // 3 x n_lambda, row-major, rows sum to 1
    IspParams isp;

    int n_lambda() const { return static_cast<int>(lambdas_nm.size()); }
    double response_at(int channel, int lambda_index) const {
        return response[static_cast<std::size_t>(channel) * lambdas_nm.size() + lambda_index];
    }
    void validate() const;
};

// Gaussian response model evaluated at the given wavelengths and normalized
// so each channel row sums to 1.
struct ResponseModel {
    std::array<double, 3> centers_nm{610.0, 540.0, 465.0};
    std::array<double, 3> sigmas_nm{45.0, 40.0, 35.0};
};
std::vector<double> make_response(const ResponseModel& model, const std::vector<double>& lambdas_nm);

// Sensor profile file: JSON with pitch, resolution, response model (or an
// explicit matrix) and the embedded ISP parameters. The response is
// materialized against `lambdas_nm` at load time.
SensorModel load_sensor(const std::filesystem::path& path, const std::vector<double>& lambdas_nm);
void save_sensor(const std::filesystem::path& path, const SensorModel& sensor,
                 const ResponseModel* model = nullptr);

// Presets loosely modeled on the two camera configurations: a 1.34 um pitch
// sensor for native-resolution correction and a 4 um pitch sensor for the
// super-resolution pipeline.
SensorModel sensor_preset_small_pitch(const std::vector<double>& lambdas_nm);
SensorModel sensor_preset_large_pitch(const std::vector<double>& lambdas_nm);

} // namespace palsim
