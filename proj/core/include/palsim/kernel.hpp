#pragma once

#include <cstddef>
#include <vector>

#include "palsim/error.hpp"

namespace palsim {

// Small square blur kernel, double precision, row-major.
struct Kernel {
    int size = 0;
    std::vector<double> data;

    Kernel() = default;
    explicit Kernel(int k, double fill = 0.0)
        : size(k), data(static_cast<std::size_t>(k) * k, fill) {}

    double& at(int y, int x) { return data[static_cast<std::size_t>(y) * size + x]; }
    double at(int y, int x) const { return data[static_cast<std::size_t>(y) * size + x]; }

    double sum() const {
        double s = 0.0;
        for (double v : data) s += v;
        return s;
    }
};

namespace kernels {

Kernel delta(int size);
Kernel gaussian(int size, double sigma_x, double sigma_y = -1.0, double angle_rad = 0.0);
Kernel uniform(int size);

// Scales values so the kernel sums to one. Throws on non-positive total mass.
void normalize(Kernel& k);

// Rotates about the kernel center by `angle_rad` (counter-clockwise in array
// coordinates) with bilinear interpolation, then renormalizes to sum 1.
Kernel rotate(const Kernel& k, double angle_rad);

// Sum of |a-b| over all taps; kernels must match in size.
double l1_distance(const Kernel& a, const Kernel& b);

// Mean |a-b| per tap.
double mean_abs_diff(const Kernel& a, const Kernel& b);

// Second moment about the centroid (spread measure).
double second_moment(const Kernel& k);

} // namespace kernels

} // namespace palsim
