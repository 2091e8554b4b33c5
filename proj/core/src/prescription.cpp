#include "palsim/prescription.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "palsim/container.hpp"
#include "palsim/error.hpp"
#include "palsim/rng.hpp"

namespace palsim {

void ZernikeGrid::validate() const {
    if (lambdas_nm.empty() || fovs.empty() || n_poly < 1)
        throw argument_error("zernike grid: empty dimension");
    for (std::size_t i = 1; i < lambdas_nm.size(); ++i)
        if (lambdas_nm[i] <= lambdas_nm[i - 1])
            throw argument_error("zernike grid: lambdas must be strictly increasing");
    for (std::size_t i = 1; i < fovs.size(); ++i)
        if (fovs[i] <= fovs[i - 1])
            throw argument_error("zernike grid: fovs must be strictly increasing");
    if (fovs.front() < 0.0)
        throw argument_error("zernike grid: fovs must be non-negative");
    if (std::abs(fovs.back() - 1.0) > 1e-9)
        throw argument_error("zernike grid: last fov must equal 1");
    if (coeffs.size() != lambdas_nm.size() * fovs.size() * static_cast<std::size_t>(n_poly))
        throw argument_error("zernike grid: coefficient tensor shape mismatch");
}

void OpticalPrescription::validate() const {
    zernike.validate();
    if (spot_radius_um.size() != zernike.fovs.size())
        throw argument_error("prescription: spot_radius_um must have one entry per fov");
    if (illumination.size() != zernike.fovs.size())
        throw argument_error("prescription: illumination must have one entry per fov");
    for (double s : spot_radius_um)
        if (!(s > 0.0)) throw argument_error("prescription: spot radii must be positive");
    for (double v : illumination)
        if (!(v > 0.0 && v <= 1.0))
            throw argument_error("prescription: illumination must lie in (0, 1]");
    if (!(exit_pupil_distance_mm > 0.0))
        throw argument_error("prescription: exit pupil distance must be positive");
    if (!(pupil_radius_mm > 0.0))
        throw argument_error("prescription: pupil radius must be positive");
}

OpticalPrescription perturb(const OpticalPrescription& p, double range_fraction, uint64_t seed) {
    if (range_fraction < 0.0 || range_fraction >= 1.0)
        throw argument_error("perturb: range_fraction must lie in [0, 1)");
    OpticalPrescription out = p;
    const int nl = p.zernike.n_lambda();
    const int nf = p.zernike.n_fov();
    for (int l = 0; l < nl; ++l)
        for (int f = 0; f < nf; ++f)
            for (int j = 1; j <= p.zernike.n_poly; ++j) {
                uint64_t key = mix_key(seed, static_cast<uint64_t>(l),
                                       static_cast<uint64_t>(f), static_cast<uint64_t>(j));
                double u = uniform_signed(key, range_fraction);
                out.zernike.at(l, f, j) = p.zernike.at(l, f, j) * (1.0 + u);
            }
    return out;
}

namespace {

nlohmann::json to_json(const OpticalPrescription& p) {
    nlohmann::json j;
    j["format"] = "palsim-prescription";
    j["coeff_units"] = "waves";
    j["lambdas_nm"] = p.zernike.lambdas_nm;
    j["fovs"] = p.zernike.fovs;
    j["n_poly"] = p.zernike.n_poly;
    j["exit_pupil_distance_mm"] = p.exit_pupil_distance_mm;
    j["pupil_radius_mm"] = p.pupil_radius_mm;
    j["spot_radius_um"] = p.spot_radius_um;
    j["illumination"] = p.illumination;
    j["zernike"] = p.zernike.coeffs;
    return j;
}

} // namespace

void save_prescription(const std::filesystem::path& path, const OpticalPrescription& p) {
    p.validate();
    write_text_atomic(path, to_json(p).dump(1) + "\n");
}

OpticalPrescription load_prescription(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw data_error("bad prescription file " + path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "palsim-prescription")
        throw data_error("not a prescription file: " + path.string());
    if (j.value("coeff_units", "waves") != "waves")
        throw data_error("unsupported coefficient units in " + path.string());
    OpticalPrescription p;
    try {
        p.zernike.lambdas_nm = j.at("lambdas_nm").get<std::vector<double>>();
        p.zernike.fovs = j.at("fovs").get<std::vector<double>>();
        p.zernike.n_poly = j.at("n_poly").get<int>();
        p.zernike.coeffs = j.at("zernike").get<std::vector<double>>();
        p.exit_pupil_distance_mm = j.at("exit_pupil_distance_mm").get<double>();
        p.pupil_radius_mm = j.at("pupil_radius_mm").get<double>();
        p.spot_radius_um = j.at("spot_radius_um").get<std::vector<double>>();
        p.illumination = j.at("illumination").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw data_error("incomplete prescription file " + path.string() + ": " + e.what());
    }
    try {
        p.validate();
    } catch (const argument_error& e) {
        throw data_error("invalid prescription " + path.string() + ": " + e.what());
    }
    return p;
}

OpticalPrescription make_synthetic_prescription(const SyntheticPrescriptionParams& params) {
    OpticalPrescription p;
    auto& g = p.zernike;
    g.n_poly = params.n_poly;
    g.lambdas_nm.resize(static_cast<std::size_t>(params.n_lambda));
    for (int l = 0; l < params.n_lambda; ++l)
        g.lambdas_nm[static_cast<std::size_t>(l)] =
            params.n_lambda == 1 ? 550.0 : 400.0 + 300.0 * l / (params.n_lambda - 1);
    g.fovs.resize(static_cast<std::size_t>(params.n_fov));
    for (int f = 0; f < params.n_fov; ++f)
        g.fovs[static_cast<std::size_t>(f)] =
            params.n_fov == 1 ? 1.0 : 0.15 + 0.85 * f / (params.n_fov - 1);
    g.coeffs.assign(static_cast<std::size_t>(params.n_lambda) * params.n_fov * params.n_poly, 0.0);

    const double s = params.aberration_scale;
    for (int l = 0; l < params.n_lambda; ++l) {
        // Mild chromatic trend: short wavelengths aberrate a little more.
        double lam = g.lambdas_nm[static_cast<std::size_t>(l)];
        double chroma = 1.0 + 0.25 * (550.0 - lam) / 300.0;
        for (int f = 0; f < params.n_fov; ++f) {
            double h = g.fovs[static_cast<std::size_t>(f)];
            double h2 = h * h, h3 = h2 * h;
            auto jitter = [&](int j) {
                return 0.02 * s *
                       uniform_signed(mix_key(params.seed, static_cast<uint64_t>(l),
                                              static_cast<uint64_t>(f), static_cast<uint64_t>(j)),
                                      1.0);
            };
            if (params.n_poly >= 4) g.at(l, f, 4) = s * chroma * (0.05 + 0.35 * h2) + jitter(4);
            if (params.n_poly >= 6) {
                g.at(l, f, 5) = s * chroma * 0.20 * h2 + jitter(5);
                g.at(l, f, 6) = s * chroma * 0.12 * h2 + jitter(6);
            }
            if (params.n_poly >= 8) {
                g.at(l, f, 7) = s * chroma * 0.15 * h3 + jitter(7);
                g.at(l, f, 8) = s * chroma * 0.10 * h3 + jitter(8);
            }
            if (params.n_poly >= 11) g.at(l, f, 11) = s * chroma * 0.08 + jitter(11);
        }
    }

    p.spot_radius_um.resize(static_cast<std::size_t>(params.n_fov));
    p.illumination.resize(static_cast<std::size_t>(params.n_fov));
    double mean_profile = 0.0;
    for (int f = 0; f < params.n_fov; ++f) {
        double h = g.fovs[static_cast<std::size_t>(f)];
        double profile = 1.0 + 1.2 * h * h;
        p.spot_radius_um[static_cast<std::size_t>(f)] = profile;
        mean_profile += profile;
    }
    mean_profile /= params.n_fov;
    for (auto& r : p.spot_radius_um) r *= params.mean_spot_radius_um / mean_profile;
    for (int f = 0; f < params.n_fov; ++f) {
        double h = g.fovs[static_cast<std::size_t>(f)];
        p.illumination[static_cast<std::size_t>(f)] = 1.0 - 0.35 * h * h;
    }
    p.exit_pupil_distance_mm = params.exit_pupil_distance_mm;
    p.pupil_radius_mm = params.pupil_radius_mm;
    p.validate();
    return p;
}

} // namespace palsim
