#include <benchmark/benchmark.h>

#include "palsim/diffraction.hpp"
#include "palsim/prescription.hpp"
#include "palsim/zernike.hpp"

using namespace palsim;

namespace {

ZernikeGrid aberrated_grid() {
    ZernikeGrid g;
    g.lambdas_nm = {550.0};
    g.fovs = {1.0};
    g.n_poly = 37;
    g.coeffs.assign(37, 0.0);
    g.at(0, 0, 4) = 0.3;
    g.at(0, 0, 7) = 0.12;
    g.at(0, 0, 11) = 0.08;
    return g;
}

} // namespace

static void BM_ZernikeBasis(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        ZernikeBasis basis = make_zernike_basis(n, 37);
        benchmark::DoNotOptimize(basis.maps.data());
    }
}
BENCHMARK(BM_ZernikeBasis)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_Wavefront(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    ZernikeGrid g = aberrated_grid();
    ZernikeBasis basis = make_zernike_basis(n, 37);
    for (auto _ : state) {
        PhaseMap p = wavefront(g, 0, 0, basis);
        benchmark::DoNotOptimize(p.waves.data());
    }
}
BENCHMARK(BM_Wavefront)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_PsfOnSensorPitch(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    ZernikeGrid g = aberrated_grid();
    ZernikeBasis basis = make_zernike_basis(n, 37);
    PhaseMap p = wavefront(g, 0, 0, basis);
    for (auto _ : state) {
        Kernel k = psf_on_sensor_pitch(p, 550.0, 10.0, 1.5, 21, 1.34);
        benchmark::DoNotOptimize(k.data.data());
    }
}
BENCHMARK(BM_PsfOnSensorPitch)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
