#pragma once

#include <complex>
#include <vector>

namespace palsim {

// 2-D complex DFT, row-major h x w. Plans (FFTW, estimate mode) are cached
// per size behind a mutex; execution is concurrency safe and results do not
// depend on thread count.
void fft2d(std::vector<std::complex<double>>& data, int h, int w, bool inverse);

} // namespace palsim
