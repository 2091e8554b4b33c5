#include "plot_render.hpp"

#include <algorithm>
#include <cmath>

namespace palsim::plotting {

namespace {

void put(Image& img, int x, int y, float r, float g, float b) {
    if (x < 0 || x >= img.width || y < 0 || y >= img.height) return;
    img.at(y, x, 0) = r;
    img.at(y, x, 1) = g;
    img.at(y, x, 2) = b;
}

void line(Image& img, double x0, double y0, double x1, double y1, float r, float g, float b) {
    double dx = x1 - x0, dy = y1 - y0;
    int steps = static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))) + 1;
    for (int i = 0; i <= steps; ++i) {
        double t = static_cast<double>(i) / steps;
        put(img, static_cast<int>(std::lround(x0 + t * dx)),
            static_cast<int>(std::lround(y0 + t * dy)), r, g, b);
    }
}

} // namespace

Image render_curves(const std::vector<MtfCurve>& curves, int width, int height) {
    Image img(height, width, 3, 1.0f);
    const int ml = 48, mr = 16, mt = 16, mb = 36; // margins
    const double x0 = ml, x1 = width - mr, y0 = height - mb, y1 = mt;

    double vmax = 1.0;
    for (const auto& c : curves)
        for (double v : c.values) vmax = std::max(vmax, v);
    vmax = std::min(vmax, 2.0);

    auto px = [&](double f) { return x0 + (x1 - x0) * (f / 0.5); };
    auto py = [&](double v) { return y0 + (y1 - y0) * (v / vmax); };

    // frame and grid
    line(img, x0, y0, x1, y0, 0, 0, 0);
    line(img, x0, y0, x0, y1, 0, 0, 0);
    for (int i = 1; i <= 5; ++i) {
        double fx = px(0.1 * i);
        line(img, fx, y0, fx, y1, 0.85f, 0.85f, 0.85f);
    }
    for (double v = 0.25; v < vmax; v += 0.25) {
        double fy = py(v);
        line(img, x0, fy, x1, fy, 0.85f, 0.85f, 0.85f);
    }

    const float palette[6][3] = {{0.85f, 0.1f, 0.1f}, {0.1f, 0.3f, 0.85f}, {0.1f, 0.6f, 0.2f},
                                 {0.8f, 0.5f, 0.0f},  {0.5f, 0.1f, 0.6f}, {0.0f, 0.6f, 0.6f}};
    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
        const auto& c = curves[ci];
        const float* col = palette[ci % 6];
        for (std::size_t i = 1; i < c.frequencies.size(); ++i) {
            if (c.frequencies[i] > 0.5) break;
            line(img, px(c.frequencies[i - 1]), py(std::clamp(c.values[i - 1], 0.0, vmax)),
                 px(c.frequencies[i]), py(std::clamp(c.values[i], 0.0, vmax)), col[0], col[1],
                 col[2]);
        }
    }
    return img;
}

Image render_kernel_grid(const std::vector<Kernel>& kernels, int columns, int cell_px) {
    if (kernels.empty()) return Image(cell_px, cell_px, 3, 0.0f);
    int rows = (static_cast<int>(kernels.size()) + columns - 1) / columns;
    Image img(rows * cell_px, columns * cell_px, 3, 0.0f);
    for (std::size_t i = 0; i < kernels.size(); ++i) {
        const Kernel& k = kernels[i];
        double peak = 0.0;
        for (double v : k.data) peak = std::max(peak, v);
        if (peak <= 0.0) peak = 1.0;
        int cy = static_cast<int>(i) / columns, cx = static_cast<int>(i) % columns;
        for (int y = 0; y < cell_px; ++y)
            for (int x = 0; x < cell_px; ++x) {
                // nearest-neighbor scale of the kernel into the cell
                int ky = static_cast<int>(static_cast<double>(y) * k.size / cell_px);
                int kx = static_cast<int>(static_cast<double>(x) * k.size / cell_px);
                float v = static_cast<float>(k.at(std::min(ky, k.size - 1),
                                                  std::min(kx, k.size - 1)) /
                                             peak);
                for (int c = 0; c < 3; ++c)
                    img.at(cy * cell_px + y, cx * cell_px + x, c) = v;
            }
    }
    return img;
}

} // namespace palsim::plotting
