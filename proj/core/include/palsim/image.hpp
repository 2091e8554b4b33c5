#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "palsim/error.hpp"

namespace palsim {

// Interleaved float image, row-major, channel-last.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    float& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    // Replicate-clamped access.
    float at_clamped(int y, int x, int c) const {
        y = std::clamp(y, 0, height - 1);
        x = std::clamp(x, 0, width - 1);
        return at(y, x, c);
    }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

// Annular geometry: image center, blind-area radius and outer radius in pixels.
struct AnnularGeometry {
    double cx = 0.0;
    double cy = 0.0;
    double r_blind = 0.0;
    double r_max = 0.0;

    void validate(int height, int width) const {
        if (r_blind < 0.0) throw argument_error("annular geometry: r_blind must be >= 0");
        if (r_max <= r_blind) throw argument_error("annular geometry: r_max must exceed r_blind");
        double half = 0.5 * std::min(height, width);
        if (r_max > half + 1e-9)
            throw argument_error("annular geometry: r_max exceeds min(H,W)/2");
    }
    double radius(double x, double y) const {
        return std::hypot(x - cx, y - cy);
    }
    double azimuth(double x, double y) const {
        return std::atan2(y - cy, x - cx);
    }
    bool in_blind(double x, double y) const { return radius(x, y) < r_blind; }

    static AnnularGeometry centered(int height, int width, double r_blind, double r_max) {
        AnnularGeometry g;
        g.cx = 0.5 * (width - 1);
        g.cy = 0.5 * (height - 1);
        g.r_blind = r_blind;
        g.r_max = r_max;
        return g;
    }
    static AnnularGeometry full(int height, int width) {
        return centered(height, width, 0.0, 0.5 * std::min(height, width));
    }
};

struct AnnularImage {
    Image pixels;
    AnnularGeometry geometry;
};

} // namespace palsim
