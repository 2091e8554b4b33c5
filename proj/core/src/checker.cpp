#include "palsim/checker.hpp"

#include <cmath>
#include <queue>

#include "palsim/error.hpp"
#include "palsim/metrics.hpp"

namespace palsim {

double otsu_threshold(const std::vector<double>& values) {
    if (values.empty()) throw argument_error("otsu: empty input");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo < 1e-12) return lo;
    const int bins = 256;
    std::vector<double> hist(bins, 0.0);
    for (double v : values) {
        int b = static_cast<int>((v - lo) / (hi - lo) * (bins - 1));
        hist[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))] += 1.0;
    }
    double total = static_cast<double>(values.size());
    double sum_all = 0.0;
    for (int b = 0; b < bins; ++b) sum_all += b * hist[static_cast<std::size_t>(b)];
    double w0 = 0.0, sum0 = 0.0, best = -1.0;
    int best_bin = 0;
    for (int b = 0; b < bins - 1; ++b) {
        w0 += hist[static_cast<std::size_t>(b)];
        if (w0 == 0.0) continue;
        double w1 = total - w0;
        if (w1 == 0.0) break;
        sum0 += b * hist[static_cast<std::size_t>(b)];
        double mu0 = sum0 / w0;
        double mu1 = (sum_all - sum0) / w1;
        double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (between > best) {
            best = between;
            best_bin = b;
        }
    }
    return lo + (best_bin + 0.5) / (bins - 1) * (hi - lo);
}

namespace {

std::vector<double> gaussian_smooth(const std::vector<double>& in, int h, int w, double sigma) {
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius) + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * (i / sigma) * (i / sigma));
        sum += taps[static_cast<std::size_t>(i + radius)];
    }
    for (auto& t : taps) t /= sum;
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

CheckerGt checker_gt(const Image& degraded_patch) {
    const int h = degraded_patch.height, w = degraded_patch.width;
    if (h < 2 || w < 2) throw argument_error("checker_gt: patch too small");

    std::vector<double> gray(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            gray[static_cast<std::size_t>(y) * w + x] =
                degraded_patch.channels >= 3
                    ? luma(degraded_patch.at(y, x, 0), degraded_patch.at(y, x, 1),
                           degraded_patch.at(y, x, 2))
                    : degraded_patch.at(y, x, 0);

    std::vector<double> smooth = gaussian_smooth(gray, h, w, 1.0);
    double level = otsu_threshold(smooth);

    std::vector<unsigned char> binary(gray.size());
    for (std::size_t i = 0; i < gray.size(); ++i) binary[i] = smooth[i] >= level ? 1 : 0;

    // 4-connected components over both classes.
    std::vector<int> label(gray.size(), -1);
    int n_labels = 0;
    std::vector<double> region_sum;
    std::vector<std::size_t> region_count;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::size_t start = static_cast<std::size_t>(y) * w + x;
            if (label[start] >= 0) continue;
            int id = n_labels++;
            region_sum.push_back(0.0);
            region_count.push_back(0);
            std::queue<std::pair<int, int>> q;
            q.emplace(y, x);
            label[start] = id;
            while (!q.empty()) {
                auto [cy, cx] = q.front();
                q.pop();
                std::size_t ci = static_cast<std::size_t>(cy) * w + cx;
                region_sum[static_cast<std::size_t>(id)] += gray[ci];
                region_count[static_cast<std::size_t>(id)] += 1;
                const int dy[4] = {-1, 1, 0, 0};
                const int dx[4] = {0, 0, -1, 1};
                for (int d = 0; d < 4; ++d) {
                    int ny = cy + dy[d], nx = cx + dx[d];
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                    if (label[ni] >= 0 || binary[ni] != binary[ci]) continue;
                    label[ni] = id;
                    q.emplace(ny, nx);
                }
            }
        }

    CheckerGt result;
    if (n_labels < 2) {
        result.binary = degraded_patch;
        result.degenerate = true;
        return result;
    }

    // Re-color each region by its mean original intensity.
    std::vector<float> color(static_cast<std::size_t>(n_labels));
    for (int id = 0; id < n_labels; ++id) {
        double mean = region_sum[static_cast<std::size_t>(id)] /
                      static_cast<double>(region_count[static_cast<std::size_t>(id)]);
        color[static_cast<std::size_t>(id)] = mean >= level ? 1.0f : 0.0f;
    }
    result.binary = Image(h, w, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float v = color[static_cast<std::size_t>(label[static_cast<std::size_t>(y) * w + x])];
            for (int c = 0; c < 3; ++c) result.binary.at(y, x, c) = v;
        }
    return result;
}

} // namespace palsim
