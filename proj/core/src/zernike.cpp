#include "palsim/zernike.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "palsim/error.hpp"

namespace palsim {

NollTerm noll_to_nm(int j) {
    if (j < 1) throw argument_error("zernike index must be >= 1");
    int n = 0;
    int j1 = j - 1;
    while (j1 > n) {
        ++n;
        j1 -= n;
    }
    int m = (n % 2) + 2 * ((j1 + ((n + 1) % 2)) / 2);
    if (j % 2 == 1) m = -m;
    return {n, m};
}

namespace {

// Polynomial coefficients of R_n^|m| in powers of rho, highest power first,
// built once per (n, m) with exact integer factorials (n <= 20 fits easily).
const std::vector<double>& radial_coeffs(int n, int m_abs) {
    static std::map<std::pair<int, int>, std::vector<double>> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_pair(n, m_abs);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    auto fact = [](int v) {
        double f = 1.0;
        for (int i = 2; i <= v; ++i) f *= i;
        return f;
    };
    std::vector<double> coeffs(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 0; k <= (n - m_abs) / 2; ++k) {
        double c = ((k % 2) ? -1.0 : 1.0) * fact(n - k) /
                   (fact(k) * fact((n + m_abs) / 2 - k) * fact((n - m_abs) / 2 - k));
        coeffs[static_cast<std::size_t>(k)] = c; // power n - 2k at slot k*2 offset below
    }
    // Re-pack into dense highest-first order for Horner over rho^2 steps:
    // R(rho) = rho^(m_abs) * sum_k coeffs[k] * rho^(n - m_abs - 2k).
    return cache.emplace(key, std::move(coeffs)).first->second;
}

double radial_eval(int n, int m_abs, double rho) {
    const auto& c = radial_coeffs(n, m_abs);
    int terms = (n - m_abs) / 2 + 1;
    double r2 = rho * rho;
    // Horner in rho^2, then the rho^{m_abs} prefactor.
    double acc = c[0];
    for (int k = 1; k < terms; ++k) acc = acc * r2 + c[static_cast<std::size_t>(k)];
    double pre = 1.0;
    for (int i = 0; i < m_abs; ++i) pre *= rho;
    return acc * pre;
}

} // namespace

double zernike_eval(int j, double rho, double theta) {
    if (rho < 0.0 || rho > 1.0 + 1e-12)
        throw argument_error("zernike_eval: rho outside [0, 1]");
    NollTerm t = noll_to_nm(j);
    int m_abs = std::abs(t.m);
    double radial = radial_eval(t.n, m_abs, rho);
    double norm = (t.m == 0) ? std::sqrt(static_cast<double>(t.n + 1))
                             : std::sqrt(2.0 * (t.n + 1));
    double angular = 1.0;
    if (t.m > 0) angular = std::cos(m_abs * theta);
    else if (t.m < 0) angular = std::sin(m_abs * theta);
    return norm * radial * angular;
}

ZernikeBasis make_zernike_basis(int grid_size, int n_poly) {
    if (grid_size < 2) throw argument_error("zernike basis: grid too small");
    if (n_poly < 1) throw argument_error("zernike basis: need at least one polynomial");
    ZernikeBasis basis;
    basis.grid_size = grid_size;
    basis.n_poly = n_poly;
    basis.disc_mask.assign(static_cast<std::size_t>(grid_size) * grid_size, 0);
    basis.maps.assign(static_cast<std::size_t>(n_poly),
                      std::vector<double>(static_cast<std::size_t>(grid_size) * grid_size, 0.0));

    double step = 2.0 / grid_size;
    for (int y = 0; y < grid_size; ++y) {
        double cy = (y + 0.5) * step - 1.0;
        for (int x = 0; x < grid_size; ++x) {
            double cx = (x + 0.5) * step - 1.0;
            double rho = std::hypot(cx, cy);
            if (rho > 1.0) continue;
            std::size_t idx = static_cast<std::size_t>(y) * grid_size + x;
            basis.disc_mask[idx] = 1;
            double theta = std::atan2(cy, cx);
            for (int j = 1; j <= n_poly; ++j)
                basis.maps[static_cast<std::size_t>(j - 1)][idx] = zernike_eval(j, rho, theta);
        }
    }
    return basis;
}

} // namespace palsim
