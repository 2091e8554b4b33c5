#include "palsim/fft.hpp"

#include <map>
#include <mutex>

#include <fftw3.h>

#include "palsim/error.hpp"

namespace palsim {

namespace {

std::mutex plan_mutex;

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

// Plans created once per size with FFTW_ESTIMATE pick the same algorithm every
// run, keeping outputs reproducible. new-array execution requires matching
// alignment, so buffers are allocated with fftw_malloc.
PlanPair& plans_for(int h, int w) {
    static std::map<std::pair<int, int>, PlanPair> cache;
    auto key = std::make_pair(h, w);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(h) * w);
    if (!buf) throw std::bad_alloc();
    PlanPair p;
    p.forward = fftw_plan_dft_2d(h, w, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    p.backward = fftw_plan_dft_2d(h, w, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_free(buf);
    if (!p.forward || !p.backward) throw config_error("fftw plan creation failed");
    return cache.emplace(key, p).first->second;
}

} // namespace

void fft2d(std::vector<std::complex<double>>& data, int h, int w, bool inverse) {
    if (h < 1 || w < 1 || data.size() != static_cast<std::size_t>(h) * w)
        throw argument_error("fft2d: shape mismatch");
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        PlanPair& p = plans_for(h, w);
        plan = inverse ? p.backward : p.forward;
    }
    fftw_complex* buf = fftw_alloc_complex(data.size());
    if (!buf) throw std::bad_alloc();
    for (std::size_t i = 0; i < data.size(); ++i) {
        buf[i][0] = data[i].real();
        buf[i][1] = data[i].imag();
    }
    fftw_execute_dft(plan, buf, buf);
    const double scale = inverse ? 1.0 / (static_cast<double>(h) * w) : 1.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] = {buf[i][0] * scale, buf[i][1] * scale};
    fftw_free(buf);
}

} // namespace palsim
