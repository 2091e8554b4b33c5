#include "palsim/wiener.hpp"

#include <cmath>
#include <complex>

#include "palsim/error.hpp"
#include "palsim/fft.hpp"
#include "palsim/parallel.hpp"

namespace palsim {

std::vector<float> wiener_patch(const std::vector<float>& patch, int height, int width,
                                const Kernel& kernel, double nsr) {
    if (nsr < 0.0) throw argument_error("wiener_patch: nsr must be >= 0");
    if (patch.size() != static_cast<std::size_t>(height) * width)
        throw argument_error("wiener_patch: shape mismatch");
    const int k = kernel.size;
    const int margin = std::max(k, 4);
    const int ph = height + 2 * margin;
    const int pw = width + 2 * margin;

    // DC continuation level: the mean of the patch perimeter.
    double mean = 0.0;
    {
        std::size_t count = 0;
        for (int c = 0; c < width; ++c) {
            mean += patch[static_cast<std::size_t>(c)];
            mean += patch[static_cast<std::size_t>(height - 1) * width + c];
            count += 2;
        }
        for (int r = 1; r + 1 < height; ++r) {
            mean += patch[static_cast<std::size_t>(r) * width];
            mean += patch[static_cast<std::size_t>(r) * width + width - 1];
            count += 2;
        }
        mean /= static_cast<double>(count);
    }

    // Replicate-pad, then taper the margin toward the perimeter mean so the
    // circular wrap is continuous; the inverse filter would otherwise smear
    // the wrap discontinuity across the whole patch. The taper lives entirely
    // in the cropped-away margin.
    auto ramp = [&](int i, int n) {
        if (i >= margin && i < margin + n) return 1.0;
        int d = i < margin ? margin - i : i - (margin + n - 1);
        return 0.5 * (1.0 + std::cos(M_PI * d / margin));
    };
    std::vector<std::complex<double>> y(static_cast<std::size_t>(ph) * pw);
    for (int r = 0; r < ph; ++r) {
        int sr = std::clamp(r - margin, 0, height - 1);
        double wy = ramp(r, height);
        for (int c = 0; c < pw; ++c) {
            int sc = std::clamp(c - margin, 0, width - 1);
            double w = wy * ramp(c, width);
            double v = patch[static_cast<std::size_t>(sr) * width + sc];
            y[static_cast<std::size_t>(r) * pw + c] = mean + w * (v - mean);
        }
    }
    // Kernel embedded centered at the origin (wrapped) so H carries no shift.
    std::vector<std::complex<double>> h(static_cast<std::size_t>(ph) * pw, {0.0, 0.0});
    const int half = k / 2;
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) {
            int rr = (r - half + ph) % ph;
            int cc = (c - half + pw) % pw;
            h[static_cast<std::size_t>(rr) * pw + cc] = kernel.at(r, c);
        }

    fft2d(y, ph, pw, false);
    fft2d(h, ph, pw, false);
    for (std::size_t i = 0; i < y.size(); ++i) {
        double mag2 = std::norm(h[i]);
        double denom = mag2 + nsr;
        if (denom <= 0.0) {
            y[i] = {0.0, 0.0};
        } else {
            y[i] = std::conj(h[i]) * y[i] / denom;
        }
    }
    fft2d(y, ph, pw, true);

    std::vector<float> out(static_cast<std::size_t>(height) * width);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            out[static_cast<std::size_t>(r) * width + c] =
                static_cast<float>(y[static_cast<std::size_t>(r + margin) * pw + (c + margin)].real());
    return out;
}

namespace {

int sector_for(double azimuth, int n_sectors) {
    double a = azimuth < 0.0 ? azimuth + 2.0 * M_PI : azimuth;
    int s = static_cast<int>(std::floor(a / (2.0 * M_PI / n_sectors)));
    return std::clamp(s, 0, n_sectors - 1);
}

} // namespace

AnnularImage wiener_image(const AnnularImage& img, const PsfStack& stack,
                          const SensorModel& sensor, const FovPartition& part,
                          const WienerOptions& options) {
    if (std::abs(stack.pixel_size_um - sensor.pixel_size_um) > 1e-9)
        throw config_error("wiener_image: psf stack pitch does not match the sensor pitch");
    const AnnularGeometry& geometry = img.geometry;
    geometry.validate(img.pixels.height, img.pixels.width);
    if (options.n_sectors < 1) throw argument_error("wiener_image: n_sectors must be >= 1");

    Image linear = invert_isp(img.pixels, sensor.isp);
    const int h = linear.height, w = linear.width;
    const int nr = part.n_rings, ns = options.n_sectors;

    std::vector<int32_t> patch_of(static_cast<std::size_t>(h) * w, -1);
    struct Box {
        int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;
    };
    std::vector<Box> boxes(static_cast<std::size_t>(nr) * ns);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double r = geometry.radius(x, y);
            if (r < geometry.r_blind) continue;
            int id = part.ring_for(r) * ns + sector_for(geometry.azimuth(x, y), ns);
            patch_of[static_cast<std::size_t>(y) * w + x] = id;
            Box& b = boxes[static_cast<std::size_t>(id)];
            b.x0 = std::min(b.x0, x);
            b.y0 = std::min(b.y0, y);
            b.x1 = std::max(b.x1, x);
            b.y1 = std::max(b.y1, y);
        }

    Image recovered = linear; // blind area keeps source values

    parallel_for(static_cast<std::size_t>(nr) * ns, options.threads, [&](std::size_t id) {
        const Box& box = boxes[id];
        if (box.x1 < box.x0) return;
        int ring = static_cast<int>(id) / ns;
        int sector = static_cast<int>(id) % ns;
        double rho = std::clamp(part.ring_center(ring) / geometry.r_max, 0.0, 1.0);
        int f = stack.fov_index_for(rho);
        double az = (sector + 0.5) * (2.0 * M_PI / ns);
        double gain = stack.illumination[static_cast<std::size_t>(f)];

        // Grow the box with real image content so the deconvolution sees the
        // true neighborhood; replicate only past the frame.
        const int grow = stack.kernel_sizes[static_cast<std::size_t>(f)];
        const int gy0 = box.y0 - grow, gx0 = box.x0 - grow;
        const int bh = box.y1 - box.y0 + 1 + 2 * grow;
        const int bw = box.x1 - box.x0 + 1 + 2 * grow;
        std::vector<float> patch(static_cast<std::size_t>(bh) * bw);
        for (int c = 0; c < 3; ++c) {
            Kernel rot = kernels::rotate(
                stack.per_channel[static_cast<std::size_t>(f)][static_cast<std::size_t>(c)], az);
            for (int y = 0; y < bh; ++y) {
                int sy = std::clamp(gy0 + y, 0, h - 1);
                for (int x = 0; x < bw; ++x) {
                    int sx = std::clamp(gx0 + x, 0, w - 1);
                    patch[static_cast<std::size_t>(y) * bw + x] =
                        linear.at(sy, sx, c) / static_cast<float>(gain);
                }
            }
            std::vector<float> rec = wiener_patch(patch, bh, bw, rot, options.nsr);
            for (int y = box.y0; y <= box.y1; ++y)
                for (int x = box.x0; x <= box.x1; ++x) {
                    if (patch_of[static_cast<std::size_t>(y) * w + x] != static_cast<int>(id))
                        continue;
                    recovered.at(y, x, c) = std::max(
                        0.0f, rec[static_cast<std::size_t>(y - gy0) * bw + (x - gx0)]);
                }
        }
    });

    AnnularImage out;
    out.geometry = geometry;
    out.pixels = forward_isp(recovered, sensor.isp, 0, /*mosaic_noise=*/false);
    return out;
}

} // namespace palsim
