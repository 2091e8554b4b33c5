#include <doctest.h>

#include <cmath>
#include <complex>

#include "palsim/diffraction.hpp"
#include "palsim/error.hpp"
#include "palsim/fft.hpp"
#include "palsim/prescription.hpp"
#include "palsim/psf_stack.hpp"
#include "palsim/rng.hpp"
#include "palsim/zernike.hpp"

using namespace palsim;

namespace {

ZernikeGrid single_point_grid(int n_poly = 37) {
    ZernikeGrid g;
    g.lambdas_nm = {550.0};
    g.fovs = {1.0};
    g.n_poly = n_poly;
    g.coeffs.assign(static_cast<std::size_t>(n_poly), 0.0);
    return g;
}

OpticalPrescription tiny_prescription(int n_lambda, int n_fov, uint64_t seed = 3) {
    SyntheticPrescriptionParams params;
    params.n_lambda = n_lambda;
    params.n_fov = n_fov;
    params.seed = seed;
    params.mean_spot_radius_um = 6.0;
    return make_synthetic_prescription(params);
}

} // namespace

TEST_CASE("wavefront of zero coefficients is identically zero") {
    ZernikeGrid g = single_point_grid();
    PhaseMap p = wavefront(g, 0, 0, 64);
    for (double v : p.waves) CHECK(v == 0.0);
}

TEST_CASE("piston produces a constant phase inside the disc") {
    ZernikeGrid g = single_point_grid();
    g.at(0, 0, 1) = 0.7;
    PhaseMap p = wavefront(g, 0, 0, 64);
    ZernikeBasis basis = make_zernike_basis(64, 1);
    for (std::size_t i = 0; i < p.waves.size(); ++i) {
        if (basis.disc_mask[i]) CHECK(p.waves[i] == doctest::Approx(0.7).epsilon(1e-15));
        else CHECK(p.waves[i] == 0.0);
    }
}

TEST_CASE("wavefront is the pointwise coefficient-weighted basis sum") {
    ZernikeGrid g = single_point_grid();
    g.at(0, 0, 4) = 0.3;
    g.at(0, 0, 11) = 0.1;
    const int n = 256;
    PhaseMap p = wavefront(g, 0, 0, n);
    double step = 2.0 / n;
    for (int y = 0; y < n; y += 17)
        for (int x = 0; x < n; x += 13) {
            double cx = (x + 0.5) * step - 1.0, cy = (y + 0.5) * step - 1.0;
            double rho = std::hypot(cx, cy);
            if (rho > 1.0) continue;
            double theta = std::atan2(cy, cx);
            double expect = 0.3 * zernike_eval(4, rho, theta) + 0.1 * zernike_eval(11, rho, theta);
            CHECK(p.waves[static_cast<std::size_t>(y) * n + x] ==
                  doctest::Approx(expect).epsilon(1e-12));
        }
}

TEST_CASE("wavefront validates its arguments") {
    ZernikeGrid g = single_point_grid();
    CHECK_THROWS_AS(wavefront(g, 1, 0, 64), argument_error);
    CHECK_THROWS_AS(wavefront(g, 0, 0, 63), argument_error);
    CHECK_THROWS_AS(wavefront(g, 0, 0, 32), argument_error);
}

TEST_CASE("unaberrated psf is centrosymmetric with a central peak") {
    ZernikeGrid g = single_point_grid();
    PhaseMap p = wavefront(g, 0, 0, 128);
    Kernel k = psf_from_wavefront(p, 550.0, 10.0, 1.5, 31);
    CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-12));
    const int n = k.size;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            CHECK(std::abs(k.at(y, x) - k.at(n - 1 - y, n - 1 - x)) < 1e-9);
    double peak = 0.0;
    int py = -1, px = -1;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            if (k.at(y, x) > peak) {
                peak = k.at(y, x);
                py = y;
                px = x;
            }
    CHECK(py == n / 2);
    CHECK(px == n / 2);
}

TEST_CASE("kernel_px of one collapses to [[1]]") {
    ZernikeGrid g = single_point_grid();
    PhaseMap p = wavefront(g, 0, 0, 64);
    Kernel k = psf_from_wavefront(p, 550.0, 10.0, 1.5, 1);
    CHECK(k.size == 1);
    CHECK(k.at(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("kernel_px above the pupil grid is rejected") {
    ZernikeGrid g = single_point_grid();
    PhaseMap p = wavefront(g, 0, 0, 64);
    CHECK_THROWS_AS(psf_from_wavefront(p, 550.0, 10.0, 1.5, 65), argument_error);
    CHECK_THROWS_AS(psf_from_wavefront(p, 550.0, 10.0, 1.5, 10), argument_error); // even
}

TEST_CASE("pruned transform equals a full padded FFT") {
    // Dual-route check: the zoomed partial DFT must reproduce the central
    // bins of the standard zero-padded transform.
    ZernikeGrid g = single_point_grid();
    g.at(0, 0, 4) = 0.4;
    g.at(0, 0, 7) = 0.15;
    const int n = 64, pad = 2, m = 9;
    PhaseMap p = wavefront(g, 0, 0, n);
    DiffractionField field = diffraction_intensity(p, 550.0, 10.0, 1.5, m, pad);

    const int np = n * pad;
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(np) * np, {0.0, 0.0});
    ZernikeBasis basis = make_zernike_basis(n, 1);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * n + x;
            if (!basis.disc_mask[i]) continue;
            double phi = 2.0 * M_PI * p.waves[i];
            buf[static_cast<std::size_t>(y) * np + x] = {std::cos(phi), std::sin(phi)};
        }
    fft2d(buf, np, np, false);
    // fftshifted central crop
    double max_rel = 0.0;
    for (int u = 0; u < m; ++u)
        for (int v = 0; v < m; ++v) {
            int su = (u - (m - 1) / 2 + np) % np;
            int sv = (v - (m - 1) / 2 + np) % np;
            double full = std::norm(buf[static_cast<std::size_t>(su) * np + sv]);
            double mine = field.intensity[static_cast<std::size_t>(u) * m + v];
            double denom = std::max(1.0, std::abs(full));
            max_rel = std::max(max_rel, std::abs(full - mine) / denom);
        }
    CHECK(max_rel < 1e-9);
}

TEST_CASE("padding consistency: doubling the zero padding preserves the kernel") {
    ZernikeGrid g = single_point_grid();
    const int n = 256, k = 15;
    PhaseMap p = wavefront(g, 0, 0, n);
    Kernel coarse = psf_from_wavefront(p, 550.0, 10.0, 1.5, k, 2);
    Kernel fine = psf_from_wavefront(p, 550.0, 10.0, 1.5, 2 * k + 1, 4);
    // The fine grid samples at half the spacing; every second sample aligns
    // with the coarse grid (both DC-centered).
    Kernel resampled(k);
    for (int y = 0; y < k; ++y)
        for (int x = 0; x < k; ++x) {
            int fy = (2 * k + 1) / 2 + 2 * (y - k / 2);
            int fx = (2 * k + 1) / 2 + 2 * (x - k / 2);
            resampled.at(y, x) = fine.at(fy, fx);
        }
    kernels::normalize(resampled);
    double rel = kernels::l1_distance(coarse, resampled);
    CHECK(rel < 0.01);
}

TEST_CASE("piston leaves the psf unchanged") {
    ZernikeGrid g = single_point_grid();
    g.at(0, 0, 4) = 0.3;
    PhaseMap p1 = wavefront(g, 0, 0, 128);
    g.at(0, 0, 1) = 0.7;
    PhaseMap p2 = wavefront(g, 0, 0, 128);
    Kernel k1 = psf_from_wavefront(p1, 550.0, 10.0, 1.5, 21);
    Kernel k2 = psf_from_wavefront(p2, 550.0, 10.0, 1.5, 21);
    for (std::size_t i = 0; i < k1.data.size(); ++i)
        CHECK(std::abs(k1.data[i] - k2.data[i]) < 1e-9);
}

TEST_CASE("defocus spreads the kernel monotonically") {
    double prev = -1.0;
    for (double c4 : {0.0, 0.25, 0.5, 1.0}) {
        ZernikeGrid g = single_point_grid();
        g.at(0, 0, 4) = c4;
        PhaseMap p = wavefront(g, 0, 0, 256);
        Kernel k = psf_from_wavefront(p, 550.0, 10.0, 1.5, 31);
        double m2 = kernels::second_moment(k);
        CHECK(m2 >= prev - 1e-9);
        prev = m2;
    }
}

TEST_CASE("kernel size from the geometric spot") {
    CHECK(kernel_size_for_spot(13.78, 1.34) == 21);
    CHECK(kernel_size_for_spot(0.5 * 1.34, 1.34) == 1); // spot radius = half a pixel
    CHECK(kernel_size_for_spot(46.26, 4.0) == 23);
}

TEST_CASE("stack synthesis produces normalized odd kernels") {
    OpticalPrescription p = tiny_prescription(2, 3);
    SensorModel sensor = sensor_preset_small_pitch(p.zernike.lambdas_nm);
    sensor.pixel_size_um = 2.0;
    SynthesisOptions opt;
    opt.pupil_samples = 128;
    PsfStack stack = synthesize_psf_stack(p, sensor, opt);
    CHECK(stack.n_fov() == 3);
    CHECK(stack.n_lambda() == 2);
    for (int f = 0; f < 3; ++f) {
        CHECK(stack.kernel_sizes[static_cast<std::size_t>(f)] % 2 == 1);
        for (const auto& k : stack.per_lambda[static_cast<std::size_t>(f)]) {
            CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-6));
            for (double v : k.data) CHECK(v >= 0.0);
        }
        for (const auto& k : stack.per_channel[static_cast<std::size_t>(f)])
            CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("single fov, zero aberration, half-pixel spot gives the identity kernel") {
    OpticalPrescription p;
    p.zernike = single_point_grid(4);
    p.spot_radius_um = {1.0};
    p.illumination = {1.0};
    p.exit_pupil_distance_mm = 10.0;
    p.pupil_radius_mm = 1.5;
    SensorModel sensor = sensor_preset_small_pitch(p.zernike.lambdas_nm);
    sensor.pixel_size_um = 4.0; // spot = 0.5 px -> kernel_px 1
    SynthesisOptions opt;
    opt.pupil_samples = 128;
    PsfStack stack = synthesize_psf_stack(p, sensor, opt);
    CHECK(stack.kernel_sizes[0] == 1);
    CHECK(stack.per_channel[0][1].at(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("oversized kernels raise a configuration error naming the required grid") {
    OpticalPrescription p;
    p.zernike = single_point_grid(4);
    p.spot_radius_um = {500.0};
    p.illumination = {1.0};
    p.exit_pupil_distance_mm = 10.0;
    p.pupil_radius_mm = 1.5;
    SensorModel sensor = sensor_preset_small_pitch(p.zernike.lambdas_nm);
    SynthesisOptions opt;
    opt.pupil_samples = 128;
    try {
        synthesize_psf_stack(p, sensor, opt);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("pupil_samples") != std::string::npos);
    }
}

TEST_CASE("perturb honors the disturbance range and determinism") {
    OpticalPrescription p = tiny_prescription(3, 4);

    OpticalPrescription same = perturb(p, 0.0, 9);
    for (std::size_t i = 0; i < p.zernike.coeffs.size(); ++i)
        CHECK(same.zernike.coeffs[i] == p.zernike.coeffs[i]);

    OpticalPrescription a = perturb(p, 0.25, 7);
    OpticalPrescription b = perturb(p, 0.25, 7);
    for (std::size_t i = 0; i < p.zernike.coeffs.size(); ++i) {
        CHECK(a.zernike.coeffs[i] == b.zernike.coeffs[i]); // bit identical
        if (p.zernike.coeffs[i] != 0.0) {
            double ratio = a.zernike.coeffs[i] / p.zernike.coeffs[i];
            CHECK(std::abs(ratio - 1.0) <= 0.25 + 1e-12);
        }
    }
    OpticalPrescription c = perturb(p, 0.25, 8);
    double diff = 0.0;
    for (std::size_t i = 0; i < p.zernike.coeffs.size(); ++i)
        diff = std::max(diff, std::abs(a.zernike.coeffs[i] - c.zernike.coeffs[i]));
    CHECK(diff > 0.0);

    CHECK_THROWS_AS(perturb(p, 1.0, 1), argument_error);
    CHECK_THROWS_AS(perturb(p, -0.1, 1), argument_error);
}

TEST_CASE("rgb collapse follows the response weighting") {
    Kernel g1 = kernels::gaussian(9, 1.0);
    Kernel g2 = kernels::gaussian(9, 2.0);

    SUBCASE("single wavelength with unit weight is the identity") {
        std::vector<double> resp = {1.0, 1.0, 1.0};
        auto out = rgb_collapse({g1}, resp);
        for (std::size_t i = 0; i < g1.data.size(); ++i)
            CHECK(out[0].data[i] == doctest::Approx(g1.data[i]).epsilon(1e-12));
    }
    SUBCASE("identical kernels are preserved under any weighting") {
        std::vector<double> resp = {0.5, 0.5, 0.3, 0.7, 1.0, 0.0};
        auto out = rgb_collapse({g1, g1}, resp);
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < g1.data.size(); ++i)
                CHECK(out[static_cast<std::size_t>(c)].data[i] ==
                      doctest::Approx(g1.data[i]).epsilon(1e-9));
    }
    SUBCASE("distinct kernels match a direct weighted-sum oracle") {
        std::vector<double> resp = {0.3, 0.7, 0.3, 0.7, 0.3, 0.7};
        auto out = rgb_collapse({g1, g2}, resp);
        for (std::size_t i = 0; i < g1.data.size(); ++i) {
            double expect = 0.3 * g1.data[i] + 0.7 * g2.data[i]; // already sums to 1
            CHECK(out[0].data[i] == doctest::Approx(expect).epsilon(1e-9));
        }
    }
    SUBCASE("negative weights are rejected") {
        std::vector<double> resp = {1.0, -0.1, 1.0, 0.0, 1.0, 0.0};
        CHECK_THROWS_AS(rgb_collapse({g1, g2}, resp), argument_error);
    }
}
