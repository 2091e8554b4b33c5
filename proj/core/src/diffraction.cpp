#include "palsim/diffraction.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>

#include "palsim/error.hpp"

namespace palsim {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

const ZernikeBasis& shared_basis(int grid_size, int n_poly) {
    static std::map<std::pair<int, int>, std::unique_ptr<ZernikeBasis>> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_pair(grid_size, n_poly);
    auto it = cache.find(key);
    if (it == cache.end()) {
        auto basis = std::make_unique<ZernikeBasis>(make_zernike_basis(grid_size, n_poly));
        it = cache.emplace(key, std::move(basis)).first;
    }
    return *it->second;
}

void check_wavefront_args(const ZernikeGrid& grid, int fov_index, int lambda_index, int n) {
    if (fov_index < 0 || fov_index >= grid.n_fov())
        throw argument_error("wavefront: fov index out of range");
    if (lambda_index < 0 || lambda_index >= grid.n_lambda())
        throw argument_error("wavefront: lambda index out of range");
    if (n < 64 || !is_pow2(n))
        throw argument_error("wavefront: pupil_samples must be a power of two >= 64");
}

} // namespace

PhaseMap wavefront(const ZernikeGrid& grid, int fov_index, int lambda_index,
                   const ZernikeBasis& basis) {
    check_wavefront_args(grid, fov_index, lambda_index, basis.grid_size);
    if (basis.n_poly < grid.n_poly)
        throw argument_error("wavefront: basis has fewer polynomials than the grid");
    const int n = basis.grid_size;
    PhaseMap phase;
    phase.size = n;
    phase.waves.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int j = 1; j <= grid.n_poly; ++j) {
        double c = grid.at(lambda_index, fov_index, j);
        if (c == 0.0) continue;
        const auto& map = basis.maps[static_cast<std::size_t>(j - 1)];
        for (std::size_t i = 0; i < phase.waves.size(); ++i) phase.waves[i] += c * map[i];
    }
    // Basis maps are zero off the disc, so the phase already is too.
    return phase;
}

PhaseMap wavefront(const ZernikeGrid& grid, int fov_index, int lambda_index, int pupil_samples) {
    check_wavefront_args(grid, fov_index, lambda_index, pupil_samples);
    return wavefront(grid, fov_index, lambda_index, shared_basis(pupil_samples, grid.n_poly));
}

double plate_scale_um(double lambda_nm, double d_mm, double pupil_radius_mm, int pupil_samples,
                      int pad_factor) {
    double dx_mm = 2.0 * pupil_radius_mm / pupil_samples;
    double lambda_mm = lambda_nm * 1e-6;
    return lambda_mm * d_mm / (pupil_samples * static_cast<double>(pad_factor) * dx_mm) * 1e3;
}

DiffractionField diffraction_intensity(const PhaseMap& phase, double lambda_nm, double d_mm,
                                       double pupil_radius_mm, int out_size, int pad_factor) {
    const int n = phase.size;
    if (n < 2 || phase.waves.size() != static_cast<std::size_t>(n) * n)
        throw argument_error("diffraction: bad phase map");
    if (out_size < 1 || out_size % 2 == 0)
        throw argument_error("diffraction: out_size must be odd and positive");
    if (pad_factor < 1) throw argument_error("diffraction: pad_factor must be >= 1");
    const long n_pad = static_cast<long>(n) * pad_factor;
    if (out_size > n_pad)
        throw argument_error("diffraction: out_size exceeds padded grid");

    // Pupil field P = circ * exp(i 2 pi phi). Row spans of the disc let the
    // column sums skip the zero region.
    const double step = 2.0 / n;
    std::vector<std::complex<double>> pupil(static_cast<std::size_t>(n) * n, {0.0, 0.0});
    std::vector<int> row_begin(static_cast<std::size_t>(n), 0);
    std::vector<int> row_end(static_cast<std::size_t>(n), 0);
    for (int y = 0; y < n; ++y) {
        double cy = (y + 0.5) * step - 1.0;
        double span2 = 1.0 - cy * cy;
        if (span2 <= 0.0) continue;
        int x0 = n, x1 = -1;
        for (int x = 0; x < n; ++x) {
            double cx = (x + 0.5) * step - 1.0;
            if (cx * cx + cy * cy > 1.0) continue;
            if (x < x0) x0 = x;
            x1 = x;
            double phi = 2.0 * M_PI * phase.waves[static_cast<std::size_t>(y) * n + x];
            pupil[static_cast<std::size_t>(y) * n + x] = {std::cos(phi), std::sin(phi)};
        }
        if (x1 >= x0) {
            row_begin[static_cast<std::size_t>(y)] = x0;
            row_end[static_cast<std::size_t>(y)] = x1 + 1;
        }
    }

    // Twiddle table for the signed output bins s in [-(m-1)/2, (m-1)/2]:
    // tw[v][k] = exp(-2 pi i s_v k / n_pad). Mirror bins share cos/sin values
    // so conjugate pairs are exact and |E|^2 of a real pupil is exactly
    // centrosymmetric.
    const int m = out_size;
    const int half = (m - 1) / 2;
    std::vector<std::complex<double>> tw(static_cast<std::size_t>(m) * n);
    for (int s = 0; s <= half; ++s) {
        for (int k = 0; k < n; ++k) {
            double ang = -2.0 * M_PI * static_cast<double>(s) * k / static_cast<double>(n_pad);
            std::complex<double> w(std::cos(ang), std::sin(ang));
            tw[static_cast<std::size_t>(half + s) * n + k] = w;
            tw[static_cast<std::size_t>(half - s) * n + k] = std::conj(w);
        }
    }

    // Pass 1: partial DFT along rows. Pass 2: along columns.
    std::vector<std::complex<double>> t1(static_cast<std::size_t>(n) * m, {0.0, 0.0});
    for (int y = 0; y < n; ++y) {
        int b = row_begin[static_cast<std::size_t>(y)], e = row_end[static_cast<std::size_t>(y)];
        if (b >= e) continue;
        const auto* row = &pupil[static_cast<std::size_t>(y) * n];
        for (int v = 0; v < m; ++v) {
            const auto* w = &tw[static_cast<std::size_t>(v) * n];
            std::complex<double> acc{0.0, 0.0};
            for (int k = b; k < e; ++k) acc += row[k] * w[k];
            t1[static_cast<std::size_t>(y) * m + v] = acc;
        }
    }

    DiffractionField field;
    field.size = m;
    field.plate_scale_um = plate_scale_um(lambda_nm, d_mm, pupil_radius_mm, n, pad_factor);
    field.intensity.assign(static_cast<std::size_t>(m) * m, 0.0);
    for (int u = 0; u < m; ++u) {
        const auto* w = &tw[static_cast<std::size_t>(u) * n];
        for (int v = 0; v < m; ++v) {
            std::complex<double> acc{0.0, 0.0};
            for (int y = 0; y < n; ++y) {
                int b = row_begin[static_cast<std::size_t>(y)];
                int e = row_end[static_cast<std::size_t>(y)];
                if (b >= e) continue;
                acc += t1[static_cast<std::size_t>(y) * m + v] * w[y];
            }
            field.intensity[static_cast<std::size_t>(u) * m + v] = std::norm(acc);
        }
    }
    return field;
}

Kernel psf_from_wavefront(const PhaseMap& phase, double lambda_nm, double d_mm,
                          double pupil_radius_mm, int kernel_px, int pad_factor) {
    if (kernel_px < 1 || kernel_px % 2 == 0)
        throw argument_error("psf_from_wavefront: kernel_px must be odd and positive");
    if (kernel_px > phase.size)
        throw argument_error("psf_from_wavefront: kernel_px exceeds pupil grid size");
    DiffractionField field =
        diffraction_intensity(phase, lambda_nm, d_mm, pupil_radius_mm, kernel_px, pad_factor);
    Kernel k(kernel_px);
    k.data = std::move(field.intensity);
    kernels::normalize(k);
    return k;
}

Kernel psf_on_sensor_pitch(const PhaseMap& phase, double lambda_nm, double d_mm,
                           double pupil_radius_mm, int kernel_px, double pixel_size_um,
                           int pad_factor) {
    if (kernel_px < 1 || kernel_px % 2 == 0)
        throw argument_error("psf_on_sensor_pitch: kernel_px must be odd and positive");
    if (!(pixel_size_um > 0.0))
        throw argument_error("psf_on_sensor_pitch: pixel size must be positive");

    double scale = plate_scale_um(lambda_nm, d_mm, pupil_radius_mm, phase.size, pad_factor);
    double ratio = pixel_size_um / scale;
    int need = 2 * static_cast<int>(std::ceil(0.5 * (kernel_px - 1) * ratio)) + 3;
    long n_pad = static_cast<long>(phase.size) * pad_factor;
    if (need > n_pad) {
        int required = static_cast<int>((need + pad_factor - 1) / pad_factor);
        int pow2 = 64;
        while (pow2 < required) pow2 *= 2;
        throw config_error("psf_on_sensor_pitch: kernel of " + std::to_string(kernel_px) +
                           " px at pitch " + std::to_string(pixel_size_um) +
                           " um exceeds the diffraction grid; requires pupil_samples >= " +
                           std::to_string(pow2));
    }

    DiffractionField field =
        diffraction_intensity(phase, lambda_nm, d_mm, pupil_radius_mm, need, pad_factor);
    const int m = field.size;
    const double center = 0.5 * (m - 1);
    Kernel k(kernel_px);
    for (int a = 0; a < kernel_px; ++a) {
        double sy = center + (a - 0.5 * (kernel_px - 1)) * ratio;
        int y0 = static_cast<int>(std::floor(sy));
        double fy = sy - y0;
        for (int b = 0; b < kernel_px; ++b) {
            double sx = center + (b - 0.5 * (kernel_px - 1)) * ratio;
            int x0 = static_cast<int>(std::floor(sx));
            double fx = sx - x0;
            double acc = 0.0;
            for (int dy = 0; dy <= 1; ++dy)
                for (int dx = 0; dx <= 1; ++dx) {
                    int yy = y0 + dy, xx = x0 + dx;
                    if (yy < 0 || yy >= m || xx < 0 || xx >= m) continue;
                    double w = (dy ? fy : 1.0 - fy) * (dx ? fx : 1.0 - fx);
                    acc += w * field.intensity[static_cast<std::size_t>(yy) * m + xx];
                }
            k.at(a, b) = acc;
        }
    }
    kernels::normalize(k);
    return k;
}

} // namespace palsim
