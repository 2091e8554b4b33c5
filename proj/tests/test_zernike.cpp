#include <doctest.h>

#include <cmath>

#include "palsim/error.hpp"
#include "palsim/zernike.hpp"

using namespace palsim;

namespace {

// Independent oracle: explicit factorial-sum radial polynomial with a
// hand-written (n, m) table for the indices under test.
double fact(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double radial_sum(int n, int m_abs, double rho) {
    double acc = 0.0;
    for (int k = 0; k <= (n - m_abs) / 2; ++k) {
        double c = ((k % 2) ? -1.0 : 1.0) * fact(n - k) /
                   (fact(k) * fact((n + m_abs) / 2 - k) * fact((n - m_abs) / 2 - k));
        acc += c * std::pow(rho, n - 2 * k);
    }
    return acc;
}

double zernike_oracle(int n, int m, double rho, double theta) {
    int m_abs = std::abs(m);
    double norm = m == 0 ? std::sqrt(n + 1.0) : std::sqrt(2.0 * (n + 1.0));
    double ang = m > 0 ? std::cos(m_abs * theta) : (m < 0 ? std::sin(m_abs * theta) : 1.0);
    return norm * radial_sum(n, m_abs, rho) * ang;
}

} // namespace

TEST_CASE("noll index mapping matches the published table") {
    struct Row {
        int j, n, m;
    };
    const Row table[] = {
        {1, 0, 0},  {2, 1, 1},   {3, 1, -1},  {4, 2, 0},  {5, 2, -2}, {6, 2, 2},
        {7, 3, -1}, {8, 3, 1},   {9, 3, -3},  {10, 3, 3}, {11, 4, 0}, {12, 4, 2},
        {13, 4, -2}, {14, 4, 4}, {15, 4, -4}, {16, 5, 1}, {17, 5, -1}, {22, 6, 0},
        {23, 6, -2}, {29, 7, -1}, {36, 7, 7}, {37, 8, 0},
    };
    for (const auto& row : table) {
        NollTerm t = noll_to_nm(row.j);
        CHECK(t.n == row.n);
        CHECK(t.m == row.m);
    }
    CHECK_THROWS_AS(noll_to_nm(0), argument_error);
}

TEST_CASE("piston is constant") {
    CHECK(zernike_eval(1, 0.0, 0.0) == doctest::Approx(1.0));
    CHECK(zernike_eval(1, 0.73, 2.1) == doctest::Approx(1.0));
    CHECK(zernike_eval(1, 1.0, -0.4) == doctest::Approx(1.0));
}

TEST_CASE("defocus at the rim has the closed form sqrt(3)") {
    CHECK(zernike_eval(4, 1.0, 0.0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("evaluation matches the factorial-sum oracle") {
    CHECK(zernike_eval(11, 0.5, 0.3) ==
          doctest::Approx(zernike_oracle(4, 0, 0.5, 0.3)).epsilon(1e-12));
    struct Probe {
        int j, n, m;
    };
    const Probe probes[] = {
        {2, 1, 1}, {5, 2, -2}, {7, 3, -1}, {14, 4, 4}, {22, 6, 0}, {31, 7, -3}, {37, 8, 0},
    };
    for (const auto& p : probes)
        for (double rho : {0.0, 0.2, 0.61, 0.95, 1.0})
            for (double theta : {0.0, 0.7, 2.9})
                CHECK(zernike_eval(p.j, rho, theta) ==
                      doctest::Approx(zernike_oracle(p.n, p.m, rho, theta)).epsilon(1e-10));
}

TEST_CASE("out-of-range arguments are rejected") {
    CHECK_THROWS_AS(zernike_eval(0, 0.5, 0.0), argument_error);
    CHECK_THROWS_AS(zernike_eval(4, 1.5, 0.0), argument_error);
}

TEST_CASE("basis grid marks the unit disc and matches pointwise evaluation") {
    ZernikeBasis basis = make_zernike_basis(64, 11);
    int inside = 0;
    double step = 2.0 / 64;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * 64 + x;
            double cx = (x + 0.5) * step - 1.0, cy = (y + 0.5) * step - 1.0;
            double rho = std::hypot(cx, cy);
            if (basis.disc_mask[i]) {
                ++inside;
                double theta = std::atan2(cy, cx);
                CHECK(basis.maps[10][i] ==
                      doctest::Approx(zernike_eval(11, rho, theta)).epsilon(1e-12));
            } else {
                CHECK(rho > 1.0);
                CHECK(basis.maps[10][i] == 0.0);
            }
        }
    // Disc fill factor should approximate pi/4.
    CHECK(inside > 0.75 * M_PI / 4.0 * 64 * 64);
}
