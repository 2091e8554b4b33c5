#pragma once

#include <cmath>
#include <vector>

#include "palsim/image.hpp"
#include "palsim/kernel.hpp"
#include "palsim/rng.hpp"

namespace testutil {

inline palsim::Image random_image(int h, int w, int c, uint64_t seed) {
    palsim::Image img(h, w, c);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = static_cast<float>(palsim::uniform01(palsim::mix_key(seed, i)));
    return img;
}

// Smooth test image: sums of low-frequency sinusoids in (0.1, 0.9).
inline palsim::Image smooth_image(int h, int w, uint64_t seed) {
    palsim::Image img(h, w, 3);
    double p1 = palsim::uniform01(palsim::mix_key(seed, 1)) * 2.0 * M_PI;
    double p2 = palsim::uniform01(palsim::mix_key(seed, 2)) * 2.0 * M_PI;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = 0.5 + 0.2 * std::sin(2.0 * M_PI * (x + 3.0 * c) / w * 3.0 + p1) +
                           0.15 * std::cos(2.0 * M_PI * y / h * 2.0 + p2 + c);
                img.at(y, x, c) = static_cast<float>(0.1 + 0.8 * std::clamp(v, 0.0, 1.0));
            }
    return img;
}

// Multi-scale content (oriented sinusoids up to mid frequencies) so blur
// causes measurable damage that deconvolution can undo.
inline palsim::Image structured_image(int h, int w, uint64_t seed) {
    palsim::Image img(h, w, 3);
    const double freqs[3] = {0.05, 0.11, 0.18};
    const double amps[3] = {0.15, 0.12, 0.08};
    const double angles[3] = {0.2, 1.1, 2.3};
    double phase = palsim::uniform01(palsim::mix_key(seed, 0)) * 2.0 * M_PI;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = 0.5;
                for (int i = 0; i < 3; ++i) {
                    double u = std::cos(angles[i] + 0.4 * c) * x +
                               std::sin(angles[i] + 0.4 * c) * y;
                    v += amps[i] * std::sin(2.0 * M_PI * freqs[i] * u + phase + i);
                }
                img.at(y, x, c) = static_cast<float>(std::clamp(v, 0.02, 0.98));
            }
    return img;
}

// Reference full-image convolution (true convolution, replicate borders),
// independent of the library path.
inline palsim::Image conv_full_reference(const palsim::Image& src, const palsim::Kernel& k) {
    palsim::Image out(src.height, src.width, src.channels);
    const int half = k.size / 2;
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x)
            for (int c = 0; c < src.channels; ++c) {
                double acc = 0.0;
                for (int u = 0; u < k.size; ++u)
                    for (int v = 0; v < k.size; ++v) {
                        int yy = std::clamp(y + half - u, 0, src.height - 1);
                        int xx = std::clamp(x + half - v, 0, src.width - 1);
                        acc += k.at(u, v) * src.at(yy, xx, c);
                    }
                out.at(y, x, c) = static_cast<float>(acc);
            }
    return out;
}

inline double max_abs_diff(const palsim::Image& a, const palsim::Image& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
    return m;
}

inline double rel_l1_diff(const palsim::Image& a, const palsim::Image& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        num += std::abs(static_cast<double>(a.data[i]) - b.data[i]);
        den += std::abs(static_cast<double>(a.data[i]));
    }
    return den > 0.0 ? num / den : 0.0;
}

} // namespace testutil
