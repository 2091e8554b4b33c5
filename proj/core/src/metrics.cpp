#include "palsim/metrics.hpp"

#include <cmath>

#include "palsim/error.hpp"

namespace palsim {

double luma(float r, float g, float b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

MetricMask annulus_mask(const AnnularGeometry& geometry, int height, int width) {
    MetricMask mask(static_cast<std::size_t>(height) * width, 0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double r = geometry.radius(x, y);
            if (r >= geometry.r_blind && r <= geometry.r_max)
                mask[static_cast<std::size_t>(y) * width + x] = 1;
        }
    return mask;
}

double psnr(const Image& a, const Image& b, const MetricMask* mask) {
    if (!a.same_shape(b)) throw argument_error("psnr: shape mismatch");
    if (mask && mask->size() != static_cast<std::size_t>(a.height) * a.width)
        throw argument_error("psnr: mask shape mismatch");
    double se = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            if (mask && !(*mask)[static_cast<std::size_t>(y) * a.width + x]) continue;
            for (int c = 0; c < a.channels; ++c) {
                double d = static_cast<double>(a.at(y, x, c)) - b.at(y, x, c);
                se += d * d;
            }
            count += static_cast<std::size_t>(a.channels);
        }
    if (count == 0) throw argument_error("psnr: empty mask");
    double mse = se / static_cast<double>(count);
    if (mse < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

std::vector<double> to_luma(const Image& img) {
    std::vector<double> out(static_cast<std::size_t>(img.height) * img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            if (img.channels >= 3)
                out[static_cast<std::size_t>(y) * img.width + x] =
                    luma(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
            else
                out[static_cast<std::size_t>(y) * img.width + x] = img.at(y, x, 0);
        }
    return out;
}

// Separable Gaussian filtering with reflected borders.
std::vector<double> gauss_filter(const std::vector<double>& in, int h, int w,
                                 const std::vector<double>& taps) {
    const int radius = static_cast<int>(taps.size() / 2);
    auto reflect = [](int i, int n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
        return i;
    };
    std::vector<double> tmp(in.size()), out(in.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t)
                acc += taps[static_cast<std::size_t>(t + radius)] *
                       in[static_cast<std::size_t>(y) * w + reflect(x + t, w)];
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t)
                acc += taps[static_cast<std::size_t>(t + radius)] *
                       tmp[static_cast<std::size_t>(reflect(y + t, h)) * w + x];
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return out;
}

} // namespace

double ssim(const Image& a, const Image& b, const MetricMask* mask) {
    if (!a.same_shape(b)) throw argument_error("ssim: shape mismatch");
    if (mask && mask->size() != static_cast<std::size_t>(a.height) * a.width)
        throw argument_error("ssim: mask shape mismatch");
    const int h = a.height, w = a.width;

    std::vector<double> x = to_luma(a), y = to_luma(b);

    std::vector<double> taps(11);
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
        double t = (i - 5) / 1.5;
        taps[static_cast<std::size_t>(i)] = std::exp(-0.5 * t * t);
        sum += taps[static_cast<std::size_t>(i)];
    }
    for (auto& t : taps) t /= sum;

    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    auto mu_x = gauss_filter(x, h, w, taps);
    auto mu_y = gauss_filter(y, h, w, taps);
    auto s_xx = gauss_filter(xx, h, w, taps);
    auto s_yy = gauss_filter(yy, h, w, taps);
    auto s_xy = gauss_filter(xy, h, w, taps);

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        double var_x = s_xx[i] - mu_x[i] * mu_x[i];
        double var_y = s_yy[i] - mu_y[i] * mu_y[i];
        double cov = s_xy[i] - mu_x[i] * mu_y[i];
        double num = (2.0 * mu_x[i] * mu_y[i] + c1) * (2.0 * cov + c2);
        double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1) * (var_x + var_y + c2);
        acc += num / den;
        ++count;
    }
    if (count == 0) throw argument_error("ssim: empty mask");
    return acc / static_cast<double>(count);
}

} // namespace palsim
