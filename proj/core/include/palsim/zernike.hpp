#pragma once

#include <vector>

namespace palsim {

// Noll single-index term: radial order n, signed azimuthal frequency m
// (m < 0 selects the sine term).
struct NollTerm {
    int n = 0;
    int m = 0;
};

// Maps Noll index j >= 1 to (n, m). Throws argument_error for j < 1.
NollTerm noll_to_nm(int j);

// Z_j(rho, theta) under Noll ordering with unit-variance ("Standard Zernike")
// normalization: sqrt(n+1) for m = 0, sqrt(2(n+1)) otherwise.
// Preconditions: j >= 1, 0 <= rho <= 1.
double zernike_eval(int j, double rho, double theta);

// Dense basis over an N x N pupil grid with pixel-center coordinates spanning
// (-1, 1). basis[j-1][y*N + x] = Z_j at that sample, zero outside the unit
// disc. Shared by every wavefront synthesis at this grid size.
struct ZernikeBasis {
    int grid_size = 0;
    int n_poly = 0;
    std::vector<std::vector<double>> maps;
    std::vector<unsigned char> disc_mask; // 1 inside the unit disc
};

ZernikeBasis make_zernike_basis(int grid_size, int n_poly);

} // namespace palsim
