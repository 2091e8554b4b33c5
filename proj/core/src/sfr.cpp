#include "palsim/sfr.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "palsim/error.hpp"
#include "palsim/metrics.hpp"

namespace palsim {

MtfCurve sfr(const Image& patch, int oversample) {
    std::vector<float> gray(static_cast<std::size_t>(patch.height) * patch.width);
    for (int y = 0; y < patch.height; ++y)
        for (int x = 0; x < patch.width; ++x)
            gray[static_cast<std::size_t>(y) * patch.width + x] =
                patch.channels >= 3
                    ? static_cast<float>(luma(patch.at(y, x, 0), patch.at(y, x, 1), patch.at(y, x, 2)))
                    : patch.at(y, x, 0);
    return sfr(gray, patch.height, patch.width, oversample);
}

MtfCurve sfr(const std::vector<float>& patch, int height, int width, int oversample) {
    if (oversample < 1) throw argument_error("sfr: oversample must be >= 1");
    if (height < 8 || width < 8) throw argument_error("sfr: patch too small");
    if (patch.size() != static_cast<std::size_t>(height) * width)
        throw argument_error("sfr: shape mismatch");

    auto at = [&](int y, int x) { return static_cast<double>(patch[static_cast<std::size_t>(y) * width + x]); };

    double vmin = at(0, 0), vmax = vmin;
    for (float v : patch) {
        vmin = std::min(vmin, static_cast<double>(v));
        vmax = std::max(vmax, static_cast<double>(v));
    }
    const double range = vmax - vmin;
    if (range < 1e-9) throw measurement_error("sfr: flat patch, no edge");

    // Per-row edge centroid from the horizontal derivative.
    std::vector<double> rows, cents;
    for (int y = 0; y < height; ++y) {
        double wsum = 0.0, xsum = 0.0;
        for (int x = 1; x < width - 1; ++x) {
            double d = std::abs(at(y, x + 1) - at(y, x - 1));
            wsum += d;
            xsum += d * x;
        }
        if (wsum < 0.1 * range) continue;
        rows.push_back(y);
        cents.push_back(xsum / wsum);
    }
    if (rows.size() < 8 || rows.size() < static_cast<std::size_t>(height) / 2)
        throw measurement_error("sfr: gradient energy below threshold, no detectable edge");

    // Least-squares line x = a + b*y through the centroids.
    double sy = 0.0, sx = 0.0, syy = 0.0, syx = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        sy += rows[i];
        sx += cents[i];
        syy += rows[i] * rows[i];
        syx += rows[i] * cents[i];
    }
    double n = static_cast<double>(rows.size());
    double det = n * syy - sy * sy;
    if (std::abs(det) < 1e-12) throw measurement_error("sfr: degenerate edge fit");
    double b = (n * syx - sy * sx) / det;
    double a = (sx - b * sy) / n;

    double slant_deg = std::atan(std::abs(b)) * 180.0 / M_PI;
    if (slant_deg < 0.5)
        throw measurement_error("sfr: edge is not slanted (need roughly 2-10 degrees)");
    if (slant_deg > 45.0)
        throw measurement_error("sfr: edge slant too steep for a near-vertical measurement");

    // Project every pixel onto the edge normal and bin the ESF.
    const double cos_t = 1.0 / std::sqrt(1.0 + b * b);
    double dmin = 1e300, dmax = -1e300;
    std::vector<double> dist(static_cast<std::size_t>(height) * width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double d = (x - (a + b * y)) * cos_t;
            dist[static_cast<std::size_t>(y) * width + x] = d;
            dmin = std::min(dmin, d);
            dmax = std::max(dmax, d);
        }
    const int nbins = static_cast<int>(std::ceil((dmax - dmin) * oversample)) + 1;
    if (nbins < 4 * oversample) throw measurement_error("sfr: projection span too small");
    std::vector<double> esf(static_cast<std::size_t>(nbins), 0.0);
    std::vector<int> hits(static_cast<std::size_t>(nbins), 0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            int bin = static_cast<int>(std::floor((dist[static_cast<std::size_t>(y) * width + x] - dmin) * oversample));
            bin = std::clamp(bin, 0, nbins - 1);
            esf[static_cast<std::size_t>(bin)] += at(y, x);
            hits[static_cast<std::size_t>(bin)] += 1;
        }
    // Fill empty bins from the nearest filled neighbors.
    int first = -1, last = -1;
    for (int i = 0; i < nbins; ++i)
        if (hits[static_cast<std::size_t>(i)]) {
            esf[static_cast<std::size_t>(i)] /= hits[static_cast<std::size_t>(i)];
            if (first < 0) first = i;
            last = i;
        }
    if (first < 0 || last - first < 2) throw measurement_error("sfr: empty projection");
    for (int i = first, prev = first; i <= last; ++i) {
        if (hits[static_cast<std::size_t>(i)]) {
            if (i - prev > 1) {
                double v0 = esf[static_cast<std::size_t>(prev)], v1 = esf[static_cast<std::size_t>(i)];
                for (int j = prev + 1; j < i; ++j)
                    esf[static_cast<std::size_t>(j)] =
                        v0 + (v1 - v0) * (j - prev) / static_cast<double>(i - prev);
            }
            prev = i;
        }
    }
    std::vector<double> esf_t(esf.begin() + first, esf.begin() + last + 1);
    const int m = static_cast<int>(esf_t.size());

    // Centered finite difference LSF and a Hamming window centered on it.
    std::vector<double> lsf(static_cast<std::size_t>(m), 0.0);
    for (int i = 1; i < m - 1; ++i)
        lsf[static_cast<std::size_t>(i)] = 0.5 * (esf_t[static_cast<std::size_t>(i + 1)] -
                                                  esf_t[static_cast<std::size_t>(i - 1)]);
    double wsum = 0.0, csum = 0.0;
    for (int i = 0; i < m; ++i) {
        double w = std::abs(lsf[static_cast<std::size_t>(i)]);
        wsum += w;
        csum += w * i;
    }
    if (wsum < 1e-12) throw measurement_error("sfr: flat line spread function");
    double centroid = csum / wsum;
    for (int i = 0; i < m; ++i) {
        double t = 2.0 * M_PI * (i - centroid) / m;
        lsf[static_cast<std::size_t>(i)] *= 0.54 + 0.46 * std::cos(t);
    }

    // DFT magnitude up to 0.5 cycles/pixel with the discrete-derivative
    // correction.
    MtfCurve curve;
    const double bin_width = 1.0 / oversample;
    const int kmax = std::min(m / 2, static_cast<int>(std::floor(0.5 * m / oversample)));
    double dc = 0.0;
    for (int i = 0; i < m; ++i) dc += lsf[static_cast<std::size_t>(i)];
    dc = std::abs(dc);
    if (dc < 1e-12) throw measurement_error("sfr: zero DC response");
    for (int k = 0; k <= kmax; ++k) {
        std::complex<double> acc{0.0, 0.0};
        double w0 = -2.0 * M_PI * k / m;
        for (int i = 0; i < m; ++i)
            acc += lsf[static_cast<std::size_t>(i)] *
                   std::complex<double>(std::cos(w0 * i), std::sin(w0 * i));
        double f = static_cast<double>(k) * oversample / m;
        double mag = std::abs(acc) / dc;
        if (k > 0) {
            double arg = 2.0 * M_PI * f * bin_width;
            double corr = arg / std::sin(arg);
            mag *= std::min(corr, 4.0);
        }
        curve.frequencies.push_back(f);
        curve.values.push_back(mag);
    }
    return curve;
}

double mtf50(const MtfCurve& curve) {
    if (curve.frequencies.empty()) throw argument_error("mtf50: empty curve");
    for (std::size_t i = 1; i < curve.values.size(); ++i) {
        double v0 = curve.values[i - 1], v1 = curve.values[i];
        if (v0 >= 0.5 && v1 < 0.5) {
            double t = (0.5 - v0) / (v1 - v0);
            return curve.frequencies[i - 1] +
                   t * (curve.frequencies[i] - curve.frequencies[i - 1]);
        }
    }
    return 0.5;
}

double mtf_area(const MtfCurve& curve) {
    if (curve.frequencies.size() < 2) throw argument_error("mtf_area: curve too short");
    double area = 0.0;
    for (std::size_t i = 1; i < curve.frequencies.size(); ++i) {
        if (curve.frequencies[i] > 0.5 + 1e-12) break;
        area += 0.5 * (curve.values[i] + curve.values[i - 1]) *
                (curve.frequencies[i] - curve.frequencies[i - 1]);
    }
    return area;
}

OiqeResult oiqe(const std::vector<MtfCurve>& test_curves,
                const std::vector<MtfCurve>& ref_curves) {
    if (test_curves.empty() || ref_curves.empty())
        throw argument_error("oiqe: curve lists must be non-empty");
    auto mean50 = [](const std::vector<MtfCurve>& cs) {
        double s = 0.0;
        for (const auto& c : cs) s += mtf50(c);
        return s / static_cast<double>(cs.size());
    };
    auto mean_area = [](const std::vector<MtfCurve>& cs) {
        double s = 0.0;
        for (const auto& c : cs) s += mtf_area(c);
        return s / static_cast<double>(cs.size());
    };
    OiqeResult r;
    r.oiqe50 = mean50(test_curves) / mean50(ref_curves);
    r.oiqe_area = mean_area(test_curves) / mean_area(ref_curves);
    r.oiqe = 0.5 * (r.oiqe50 + r.oiqe_area);
    return r;
}

} // namespace palsim
