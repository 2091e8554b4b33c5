#include "palsim/psf_stack.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "palsim/container.hpp"
#include "palsim/diffraction.hpp"
#include "palsim/error.hpp"
#include "palsim/parallel.hpp"

namespace palsim {

int PsfStack::max_kernel_size() const {
    int m = 1;
    for (int k : kernel_sizes) m = std::max(m, k);
    return m;
}

int PsfStack::fov_index_for(double normalized_radius) const {
    if (fovs.empty()) throw argument_error("psf stack: empty fov list");
    // nearest sample; fovs are strictly increasing
    int lo = 0, hi = n_fov() - 1;
    if (normalized_radius <= fovs.front()) return 0;
    if (normalized_radius >= fovs.back()) return hi;
    while (hi - lo > 1) {
        int mid = (lo + hi) / 2;
        if (fovs[static_cast<std::size_t>(mid)] <= normalized_radius) lo = mid;
        else hi = mid;
    }
    double dl = normalized_radius - fovs[static_cast<std::size_t>(lo)];
    double dh = fovs[static_cast<std::size_t>(hi)] - normalized_radius;
    return dl <= dh ? lo : hi;
}

void PsfStack::validate() const {
    if (fovs.empty() || lambdas_nm.empty()) throw argument_error("psf stack: empty grid");
    if (kernel_sizes.size() != fovs.size() || illumination.size() != fovs.size() ||
        per_lambda.size() != fovs.size() || per_channel.size() != fovs.size())
        throw argument_error("psf stack: per-fov arrays out of sync");
    for (int f = 0; f < n_fov(); ++f) {
        int k = kernel_sizes[static_cast<std::size_t>(f)];
        if (k < 1 || k % 2 == 0) throw argument_error("psf stack: kernel sizes must be odd");
        if (per_lambda[static_cast<std::size_t>(f)].size() != lambdas_nm.size())
            throw argument_error("psf stack: wavelength kernels out of sync");
        if (per_channel[static_cast<std::size_t>(f)].size() != 3)
            throw argument_error("psf stack: expected 3 channel kernels");
        for (const auto& kk : per_lambda[static_cast<std::size_t>(f)])
            if (kk.size != k) throw argument_error("psf stack: kernel size mismatch");
        for (const auto& kk : per_channel[static_cast<std::size_t>(f)])
            if (kk.size != k) throw argument_error("psf stack: kernel size mismatch");
    }
}

std::vector<Kernel> rgb_collapse(const std::vector<Kernel>& per_lambda,
                                 const std::vector<double>& response) {
    if (per_lambda.empty()) throw argument_error("rgb_collapse: no kernels");
    const std::size_t n = per_lambda.size();
    if (response.size() != 3 * n)
        throw argument_error("rgb_collapse: response must be 3 x n_lambda");
    for (double w : response)
        if (w < 0.0) throw argument_error("rgb_collapse: negative response weight");
    const int k = per_lambda[0].size;
    for (const auto& kk : per_lambda)
        if (kk.size != k) throw argument_error("rgb_collapse: kernel sizes differ");

    std::vector<Kernel> out(3, Kernel(k));
    for (int c = 0; c < 3; ++c) {
        for (std::size_t l = 0; l < n; ++l) {
            double w = response[static_cast<std::size_t>(c) * n + l];
            if (w == 0.0) continue;
            for (std::size_t i = 0; i < out[static_cast<std::size_t>(c)].data.size(); ++i)
                out[static_cast<std::size_t>(c)].data[i] += w * per_lambda[l].data[i];
        }
        kernels::normalize(out[static_cast<std::size_t>(c)]);
    }
    return out;
}

int kernel_size_for_spot(double spot_radius_um, double pixel_size_um) {
    if (!(spot_radius_um > 0.0) || !(pixel_size_um > 0.0))
        throw argument_error("kernel_size_for_spot: sizes must be positive");
    double px = 2.0 * spot_radius_um / pixel_size_um;
    int k = 2 * static_cast<int>(std::lround(0.5 * (px - 1.0))) + 1;
    return std::max(1, k);
}

PsfStack synthesize_psf_stack(const OpticalPrescription& prescription, const SensorModel& sensor,
                              const SynthesisOptions& options) {
    prescription.validate();
    sensor.validate();
    if (sensor.lambdas_nm != prescription.zernike.lambdas_nm)
        throw config_error("synthesize_psf_stack: sensor response wavelengths do not match the "
                           "prescription grid");

    const int nf = prescription.zernike.n_fov();
    const int nl = prescription.zernike.n_lambda();

    PsfStack stack;
    stack.fovs = prescription.zernike.fovs;
    stack.lambdas_nm = prescription.zernike.lambdas_nm;
    stack.illumination = prescription.illumination;
    stack.pixel_size_um = sensor.pixel_size_um;
    stack.kernel_sizes.resize(static_cast<std::size_t>(nf));
    for (int f = 0; f < nf; ++f)
        stack.kernel_sizes[static_cast<std::size_t>(f)] = kernel_size_for_spot(
            prescription.spot_radius_um[static_cast<std::size_t>(f)], sensor.pixel_size_um);
    stack.per_lambda.assign(static_cast<std::size_t>(nf),
                            std::vector<Kernel>(static_cast<std::size_t>(nl)));
    stack.per_channel.assign(static_cast<std::size_t>(nf), std::vector<Kernel>(3));

    const ZernikeBasis basis =
        make_zernike_basis(options.pupil_samples, prescription.zernike.n_poly);

    // Fail fast if the largest kernel cannot fit the diffraction grid: probe
    // one synthesis before spinning up the grid.
    {
        int fmax = 0;
        for (int f = 1; f < nf; ++f)
            if (stack.kernel_sizes[static_cast<std::size_t>(f)] >
                stack.kernel_sizes[static_cast<std::size_t>(fmax)])
                fmax = f;
        PhaseMap probe = wavefront(prescription.zernike, fmax, 0, basis);
        psf_on_sensor_pitch(probe, stack.lambdas_nm[0], prescription.exit_pupil_distance_mm,
                            prescription.pupil_radius_mm,
                            stack.kernel_sizes[static_cast<std::size_t>(fmax)],
                            sensor.pixel_size_um, options.pad_factor);
    }

    parallel_for(static_cast<std::size_t>(nf) * nl, options.threads, [&](std::size_t idx) {
        int f = static_cast<int>(idx / nl);
        int l = static_cast<int>(idx % nl);
        PhaseMap phase = wavefront(prescription.zernike, f, l, basis);
        Kernel k = psf_on_sensor_pitch(phase, stack.lambdas_nm[static_cast<std::size_t>(l)],
                                       prescription.exit_pupil_distance_mm,
                                       prescription.pupil_radius_mm,
                                       stack.kernel_sizes[static_cast<std::size_t>(f)],
                                       sensor.pixel_size_um, options.pad_factor);
        // Illumination scales the kernel then normalization restores sum 1;
        // the relative amplitude itself stays in stack.illumination.
        stack.per_lambda[static_cast<std::size_t>(f)][static_cast<std::size_t>(l)] = std::move(k);
    });

    parallel_for(static_cast<std::size_t>(nf), options.threads, [&](std::size_t f) {
        stack.per_channel[f] = rgb_collapse(stack.per_lambda[f], sensor.response);
    });

    stack.validate();
    return stack;
}

void save_psf_stack(const std::filesystem::path& path, const PsfStack& stack) {
    stack.validate();
    nlohmann::json header = {
        {"format", "palsim-tensor"},
        {"kind", "psf_stack"},
        {"dtype", "f32le"},
        {"n_fov", stack.n_fov()},
        {"n_lambda", stack.n_lambda()},
        {"fovs", stack.fovs},
        {"lambdas_nm", stack.lambdas_nm},
        {"kernel_sizes", stack.kernel_sizes},
        {"illumination", stack.illumination},
        {"pixel_size_um", stack.pixel_size_um},
        {"layout", "per_fov:lambda_kernels,channel_kernels"},
    };
    std::vector<float> blob;
    std::size_t total = 0;
    for (int f = 0; f < stack.n_fov(); ++f) {
        std::size_t k2 = static_cast<std::size_t>(stack.kernel_sizes[static_cast<std::size_t>(f)]);
        total += (stack.lambdas_nm.size() + 3) * k2 * k2;
    }
    blob.reserve(total);
    for (int f = 0; f < stack.n_fov(); ++f) {
        for (const auto& k : stack.per_lambda[static_cast<std::size_t>(f)])
            for (double v : k.data) blob.push_back(static_cast<float>(v));
        for (const auto& k : stack.per_channel[static_cast<std::size_t>(f)])
            for (double v : k.data) blob.push_back(static_cast<float>(v));
    }
    save_tensor(path, header, blob);
}

PsfStack load_psf_stack(const std::filesystem::path& path) {
    std::vector<float> blob;
    nlohmann::json header = load_tensor(path, blob);
    if (header.value("kind", "") != "psf_stack")
        throw data_error("not a psf stack: " + path.string());
    PsfStack stack;
    try {
        stack.fovs = header.at("fovs").get<std::vector<double>>();
        stack.lambdas_nm = header.at("lambdas_nm").get<std::vector<double>>();
        stack.kernel_sizes = header.at("kernel_sizes").get<std::vector<int>>();
        stack.illumination = header.at("illumination").get<std::vector<double>>();
        stack.pixel_size_um = header.at("pixel_size_um").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw data_error("incomplete psf stack header " + path.string() + ": " + e.what());
    }
    const int nf = stack.n_fov();
    const int nl = stack.n_lambda();
    stack.per_lambda.assign(static_cast<std::size_t>(nf),
                            std::vector<Kernel>(static_cast<std::size_t>(nl)));
    stack.per_channel.assign(static_cast<std::size_t>(nf), std::vector<Kernel>(3));
    std::size_t pos = 0;
    auto take = [&](int k) {
        Kernel kk(k);
        std::size_t n = kk.data.size();
        if (pos + n > blob.size()) throw data_error("psf stack blob truncated: " + path.string());
        for (std::size_t i = 0; i < n; ++i) kk.data[i] = blob[pos + i];
        pos += n;
        return kk;
    };
    for (int f = 0; f < nf; ++f) {
        int k = stack.kernel_sizes[static_cast<std::size_t>(f)];
        for (int l = 0; l < nl; ++l)
            stack.per_lambda[static_cast<std::size_t>(f)][static_cast<std::size_t>(l)] = take(k);
        for (int c = 0; c < 3; ++c)
            stack.per_channel[static_cast<std::size_t>(f)][static_cast<std::size_t>(c)] = take(k);
    }
    if (pos != blob.size()) throw data_error("psf stack blob has trailing data: " + path.string());
    stack.validate();
    return stack;
}

} // namespace palsim
