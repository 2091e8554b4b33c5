#include "palsim/net/layers.hpp"

#include <cmath>

#include "palsim/error.hpp"
#include "palsim/parallel.hpp"

namespace palsim::net {

FeatureTensor pixel_unshuffle(const FeatureTensor& x, int r) {
    if (r < 1) throw argument_error("pixel_unshuffle: factor must be >= 1");
    if (r == 1) return x;
    if (x.height % r != 0 || x.width % r != 0)
        throw argument_error("pixel_unshuffle: dimensions must divide by the factor");
    FeatureTensor out(x.height / r, x.width / r, x.channels * r * r);
    for (int y = 0; y < out.height; ++y)
        for (int xx = 0; xx < out.width; ++xx)
            for (int c = 0; c < x.channels; ++c)
                for (int dy = 0; dy < r; ++dy)
                    for (int dx = 0; dx < r; ++dx)
                        out.at(y, xx, c * r * r + dy * r + dx) = x.at(y * r + dy, xx * r + dx, c);
    return out;
}

FeatureTensor pixel_shuffle(const FeatureTensor& x, int r) {
    if (r < 1) throw argument_error("pixel_shuffle: factor must be >= 1");
    if (r == 1) return x;
    if (x.channels % (r * r) != 0)
        throw argument_error("pixel_shuffle: channels must divide by r^2");
    FeatureTensor out(x.height * r, x.width * r, x.channels / (r * r));
    for (int y = 0; y < x.height; ++y)
        for (int xx = 0; xx < x.width; ++xx)
            for (int c = 0; c < out.channels; ++c)
                for (int dy = 0; dy < r; ++dy)
                    for (int dx = 0; dx < r; ++dx)
                        out.at(y * r + dy, xx * r + dx, c) = x.at(y, xx, c * r * r + dy * r + dx);
    return out;
}

FeatureTensor conv2d(const FeatureTensor& x, const std::vector<float>& weight,
                     const std::vector<float>& bias, int out_ch, int ksize, int threads) {
    if (ksize % 2 == 0) throw argument_error("conv2d: kernel size must be odd");
    const int in_ch = x.channels;
    if (weight.size() != static_cast<std::size_t>(out_ch) * in_ch * ksize * ksize)
        throw argument_error("conv2d: weight shape mismatch");
    if (bias.size() != static_cast<std::size_t>(out_ch))
        throw argument_error("conv2d: bias shape mismatch");
    const int half = ksize / 2;
    FeatureTensor out(x.height, x.width, out_ch);
    parallel_for(static_cast<std::size_t>(x.height), threads, [&](std::size_t row) {
        int y = static_cast<int>(row);
        for (int xx = 0; xx < x.width; ++xx)
            for (int o = 0; o < out_ch; ++o) {
                double acc = bias[static_cast<std::size_t>(o)];
                const float* wbase = &weight[static_cast<std::size_t>(o) * in_ch * ksize * ksize];
                for (int i = 0; i < in_ch; ++i)
                    for (int ky = 0; ky < ksize; ++ky) {
                        int sy = y + ky - half;
                        if (sy < 0 || sy >= x.height) continue;
                        for (int kx = 0; kx < ksize; ++kx) {
                            int sx = xx + kx - half;
                            if (sx < 0 || sx >= x.width) continue;
                            acc += static_cast<double>(
                                       wbase[(static_cast<std::size_t>(i) * ksize + ky) * ksize + kx]) *
                                   x.at(sy, sx, i);
                        }
                    }
                out.at(y, xx, o) = static_cast<float>(acc);
            }
    });
    return out;
}

FeatureTensor linear_pointwise(const FeatureTensor& x, const std::vector<float>& weight,
                               const std::vector<float>& bias, int out_ch, int threads) {
    const int in_ch = x.channels;
    if (weight.size() != static_cast<std::size_t>(out_ch) * in_ch)
        throw argument_error("linear: weight shape mismatch");
    if (bias.size() != static_cast<std::size_t>(out_ch))
        throw argument_error("linear: bias shape mismatch");
    FeatureTensor out(x.height, x.width, out_ch);
    parallel_for(static_cast<std::size_t>(x.height), threads, [&](std::size_t row) {
        int y = static_cast<int>(row);
        for (int xx = 0; xx < x.width; ++xx)
            for (int o = 0; o < out_ch; ++o) {
                double acc = bias[static_cast<std::size_t>(o)];
                const float* wrow = &weight[static_cast<std::size_t>(o) * in_ch];
                for (int i = 0; i < in_ch; ++i)
                    acc += static_cast<double>(wrow[i]) * x.at(y, xx, i);
                out.at(y, xx, o) = static_cast<float>(acc);
            }
    });
    return out;
}

FeatureTensor avg_pool(const FeatureTensor& x, int size) {
    if (size < 1 || x.height % size != 0 || x.width % size != 0)
        throw argument_error("avg_pool: dimensions must divide by the pool size");
    FeatureTensor out(x.height / size, x.width / size, x.channels);
    const double inv = 1.0 / (static_cast<double>(size) * size);
    for (int y = 0; y < out.height; ++y)
        for (int xx = 0; xx < out.width; ++xx)
            for (int c = 0; c < x.channels; ++c) {
                double acc = 0.0;
                for (int dy = 0; dy < size; ++dy)
                    for (int dx = 0; dx < size; ++dx)
                        acc += x.at(y * size + dy, xx * size + dx, c);
                out.at(y, xx, c) = static_cast<float>(acc * inv);
            }
    return out;
}

FeatureTensor max_pool(const FeatureTensor& x, int size) {
    if (size < 1 || x.height % size != 0 || x.width % size != 0)
        throw argument_error("max_pool: dimensions must divide by the pool size");
    FeatureTensor out(x.height / size, x.width / size, x.channels);
    for (int y = 0; y < out.height; ++y)
        for (int xx = 0; xx < out.width; ++xx)
            for (int c = 0; c < x.channels; ++c) {
                float best = x.at(y * size, xx * size, c);
                for (int dy = 0; dy < size; ++dy)
                    for (int dx = 0; dx < size; ++dx)
                        best = std::max(best, x.at(y * size + dy, xx * size + dx, c));
                out.at(y, xx, c) = best;
            }
    return out;
}

FeatureTensor bilinear_upsample(const FeatureTensor& x, int factor) {
    if (factor < 1) throw argument_error("bilinear_upsample: factor must be >= 1");
    if (factor == 1) return x;
    FeatureTensor out(x.height * factor, x.width * factor, x.channels);
    for (int y = 0; y < out.height; ++y) {
        double sy = (y + 0.5) / factor - 0.5;
        int y0 = static_cast<int>(std::floor(sy));
        double fy = sy - y0;
        int ya = std::clamp(y0, 0, x.height - 1);
        int yb = std::clamp(y0 + 1, 0, x.height - 1);
        for (int xx = 0; xx < out.width; ++xx) {
            double sx = (xx + 0.5) / factor - 0.5;
            int x0 = static_cast<int>(std::floor(sx));
            double fx = sx - x0;
            int xa = std::clamp(x0, 0, x.width - 1);
            int xb = std::clamp(x0 + 1, 0, x.width - 1);
            for (int c = 0; c < x.channels; ++c) {
                double v = (1.0 - fy) * ((1.0 - fx) * x.at(ya, xa, c) + fx * x.at(ya, xb, c)) +
                           fy * ((1.0 - fx) * x.at(yb, xa, c) + fx * x.at(yb, xb, c));
                out.at(y, xx, c) = static_cast<float>(v);
            }
        }
    }
    return out;
}

FeatureTensor apply_pixel_kernels(const FeatureTensor& x, const FeatureTensor& kernel_map, int k,
                                  int threads) {
    if (k % 2 == 0) throw argument_error("apply_pixel_kernels: k must be odd");
    if (kernel_map.height != x.height || kernel_map.width != x.width)
        throw argument_error("apply_pixel_kernels: kernel map resolution mismatch");
    if (kernel_map.channels != x.channels * k * k)
        throw argument_error("apply_pixel_kernels: kernel map channels mismatch");
    const int half = k / 2;
    FeatureTensor out(x.height, x.width, x.channels);
    parallel_for(static_cast<std::size_t>(x.height), threads, [&](std::size_t row) {
        int y = static_cast<int>(row);
        for (int xx = 0; xx < x.width; ++xx)
            for (int c = 0; c < x.channels; ++c) {
                double acc = 0.0;
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx) {
                        float w = kernel_map.at(y, xx, c * k * k + ky * k + kx);
                        acc += static_cast<double>(w) *
                               x.at_clamped(y + ky - half, xx + kx - half, c);
                    }
                out.at(y, xx, c) = static_cast<float>(acc);
            }
    });
    return out;
}

FeatureTensor layer_norm(const FeatureTensor& x, const std::vector<float>& gamma,
                         const std::vector<float>& beta, double eps) {
    if (gamma.size() != static_cast<std::size_t>(x.channels) || beta.size() != gamma.size())
        throw argument_error("layer_norm: affine shape mismatch");
    FeatureTensor out(x.height, x.width, x.channels);
    for (int y = 0; y < x.height; ++y)
        for (int xx = 0; xx < x.width; ++xx) {
            double mean = 0.0;
            for (int c = 0; c < x.channels; ++c) mean += x.at(y, xx, c);
            mean /= x.channels;
            double var = 0.0;
            for (int c = 0; c < x.channels; ++c) {
                double d = x.at(y, xx, c) - mean;
                var += d * d;
            }
            var /= x.channels;
            double inv = 1.0 / std::sqrt(var + eps);
            for (int c = 0; c < x.channels; ++c)
                out.at(y, xx, c) = static_cast<float>(
                    (x.at(y, xx, c) - mean) * inv * gamma[static_cast<std::size_t>(c)] +
                    beta[static_cast<std::size_t>(c)]);
        }
    return out;
}

FeatureTensor gelu(const FeatureTensor& x) {
    FeatureTensor out = x;
    for (auto& v : out.data)
        v = static_cast<float>(0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))));
    return out;
}

FeatureTensor relu(const FeatureTensor& x) {
    FeatureTensor out = x;
    for (auto& v : out.data) v = std::max(v, 0.0f);
    return out;
}

FeatureTensor concat_channels(const FeatureTensor& a, const FeatureTensor& b) {
    if (a.height != b.height || a.width != b.width)
        throw argument_error("concat_channels: resolution mismatch");
    FeatureTensor out(a.height, a.width, a.channels + b.channels);
    for (int y = 0; y < a.height; ++y)
        for (int xx = 0; xx < a.width; ++xx) {
            for (int c = 0; c < a.channels; ++c) out.at(y, xx, c) = a.at(y, xx, c);
            for (int c = 0; c < b.channels; ++c) out.at(y, xx, a.channels + c) = b.at(y, xx, c);
        }
    return out;
}

FeatureTensor slice_channels(const FeatureTensor& x, int from, int count) {
    if (from < 0 || from + count > x.channels)
        throw argument_error("slice_channels: range out of bounds");
    FeatureTensor out(x.height, x.width, count);
    for (int y = 0; y < x.height; ++y)
        for (int xx = 0; xx < x.width; ++xx)
            for (int c = 0; c < count; ++c) out.at(y, xx, c) = x.at(y, xx, from + c);
    return out;
}

FeatureTensor add(const FeatureTensor& a, const FeatureTensor& b) {
    if (!a.same_shape(b)) throw argument_error("add: shape mismatch");
    FeatureTensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

FeatureTensor pad_to_multiple(const FeatureTensor& x, int multiple) {
    int ph = (x.height + multiple - 1) / multiple * multiple;
    int pw = (x.width + multiple - 1) / multiple * multiple;
    if (ph == x.height && pw == x.width) return x;
    FeatureTensor out(ph, pw, x.channels);
    for (int y = 0; y < ph; ++y)
        for (int xx = 0; xx < pw; ++xx)
            for (int c = 0; c < x.channels; ++c)
                out.at(y, xx, c) = x.at(std::min(y, x.height - 1), std::min(xx, x.width - 1), c);
    return out;
}

FeatureTensor crop(const FeatureTensor& x, int height, int width) {
    if (height > x.height || width > x.width) throw argument_error("crop: target too large");
    if (height == x.height && width == x.width) return x;
    FeatureTensor out(height, width, x.channels);
    for (int y = 0; y < height; ++y)
        for (int xx = 0; xx < width; ++xx)
            for (int c = 0; c < x.channels; ++c) out.at(y, xx, c) = x.at(y, xx, c);
    return out;
}

} // namespace palsim::net
