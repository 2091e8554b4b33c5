#include "palsim/kernel.hpp"

#include <cmath>
#include <map>

namespace palsim {
namespace kernels {

Kernel delta(int size) {
    Kernel k(size);
    k.at(size / 2, size / 2) = 1.0;
    return k;
}

Kernel uniform(int size) {
    Kernel k(size, 1.0 / (static_cast<double>(size) * size));
    return k;
}

Kernel gaussian(int size, double sigma_x, double sigma_y, double angle_rad) {
    if (sigma_y <= 0.0) sigma_y = sigma_x;
    Kernel k(size);
    double c = 0.5 * (size - 1);
    double ca = std::cos(angle_rad), sa = std::sin(angle_rad);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double dx = x - c, dy = y - c;
            double u = ca * dx + sa * dy;
            double v = -sa * dx + ca * dy;
            k.at(y, x) = std::exp(-0.5 * (u * u / (sigma_x * sigma_x) + v * v / (sigma_y * sigma_y)));
        }
    }
    normalize(k);
    return k;
}

void normalize(Kernel& k) {
    double s = k.sum();
    if (!(s > 0.0)) throw argument_error("kernel normalize: non-positive mass");
    for (double& v : k.data) v /= s;
}

namespace {

// Radially symmetric kernels are fixed points of rotation; taking the exact
// path keeps e.g. delta kernels delta instead of smearing them through the
// interpolation. Squared radii about the center are integer-exact in units
// of quarter pixels.
bool radially_symmetric(const Kernel& k) {
    const int n = k.size;
    std::map<long, std::pair<double, double>> bins;
    double peak = 0.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            long dx = 2L * x - (n - 1);
            long dy = 2L * y - (n - 1);
            long key = dx * dx + dy * dy;
            double v = k.at(y, x);
            peak = std::max(peak, std::abs(v));
            auto it = bins.find(key);
            if (it == bins.end()) bins.emplace(key, std::make_pair(v, v));
            else {
                it->second.first = std::min(it->second.first, v);
                it->second.second = std::max(it->second.second, v);
            }
        }
    if (peak <= 0.0) return true;
    for (const auto& [key, mm] : bins)
        if (mm.second - mm.first > 1e-12 * peak) return false;
    return true;
}

} // namespace

Kernel rotate(const Kernel& k, double angle_rad) {
    int n = k.size;
    if (n == 1) return k;
    if (radially_symmetric(k)) {
        Kernel out = k;
        normalize(out);
        return out;
    }
    Kernel out(n);
    double c = 0.5 * (n - 1);
    // Inverse map: sample the source at the back-rotated position.
    double ca = std::cos(-angle_rad), sa = std::sin(-angle_rad);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            double dx = x - c, dy = y - c;
            double sx = ca * dx - sa * dy + c;
            double sy = sa * dx + ca * dy + c;
            int x0 = static_cast<int>(std::floor(sx));
            int y0 = static_cast<int>(std::floor(sy));
            double fx = sx - x0, fy = sy - y0;
            double acc = 0.0;
            for (int dyi = 0; dyi <= 1; ++dyi) {
                for (int dxi = 0; dxi <= 1; ++dxi) {
                    int xi = x0 + dxi, yi = y0 + dyi;
                    if (xi < 0 || xi >= n || yi < 0 || yi >= n) continue;
                    double w = (dxi ? fx : 1.0 - fx) * (dyi ? fy : 1.0 - fy);
                    acc += w * k.at(yi, xi);
                }
            }
            out.at(y, x) = acc;
        }
    }
    normalize(out);
    return out;
}

double l1_distance(const Kernel& a, const Kernel& b) {
    if (a.size != b.size) throw argument_error("kernel l1_distance: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
    return s;
}

double mean_abs_diff(const Kernel& a, const Kernel& b) {
    return l1_distance(a, b) / static_cast<double>(a.data.size());
}

double second_moment(const Kernel& k) {
    double s = k.sum();
    if (!(s > 0.0)) return 0.0;
    double mx = 0.0, my = 0.0;
    for (int y = 0; y < k.size; ++y)
        for (int x = 0; x < k.size; ++x) {
            mx += x * k.at(y, x);
            my += y * k.at(y, x);
        }
    mx /= s;
    my /= s;
    double m2 = 0.0;
    for (int y = 0; y < k.size; ++y)
        for (int x = 0; x < k.size; ++x)
            m2 += ((x - mx) * (x - mx) + (y - my) * (y - my)) * k.at(y, x);
    return m2 / s;
}

} // namespace kernels
} // namespace palsim
