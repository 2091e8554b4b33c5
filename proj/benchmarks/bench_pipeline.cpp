#include <benchmark/benchmark.h>

#include <cmath>

#include "palsim/net/part.hpp"
#include "palsim/simulate.hpp"
#include "palsim/wiener.hpp"

using namespace palsim;

namespace {

Image smooth_image(int h, int w) {
    Image img(h, w, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) =
                    static_cast<float>(0.5 + 0.3 * std::sin(0.05 * x + 0.07 * y + c));
    return img;
}

PsfStack uniform_stack(const Kernel& k, int n_fov) {
    PsfStack s;
    s.lambdas_nm = {550.0};
    s.pixel_size_um = 1.34;
    for (int f = 0; f < n_fov; ++f) {
        s.fovs.push_back(n_fov == 1 ? 1.0 : 0.1 + 0.9 * f / (n_fov - 1));
        s.kernel_sizes.push_back(k.size);
        s.illumination.push_back(1.0);
        s.per_lambda.push_back({k});
        s.per_channel.push_back({k, k, k});
    }
    return s;
}

} // namespace

static void BM_SpatiallyVariantBlur(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    Image img = smooth_image(n, n);
    PsfStack stack = uniform_stack(kernels::gaussian(11, 1.8), 8);
    AnnularGeometry g = AnnularGeometry::full(n, n);
    FovPartition part = partition(g, 8);
    for (auto _ : state) {
        Image out = blur_spatially_variant(img, stack, g, part, 16, 1);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_SpatiallyVariantBlur)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_WienerPatch(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    Image img = smooth_image(n, n);
    std::vector<float> patch(static_cast<std::size_t>(n) * n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            patch[static_cast<std::size_t>(y) * n + x] = img.at(y, x, 0);
    Kernel k = kernels::gaussian(11, 1.8);
    for (auto _ : state) {
        auto out = wiener_patch(patch, n, n, k, 1e-3);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_WienerPatch)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_PartForwardToy(benchmark::State& state) {
    net::PartConfig c;
    c.n_prtb = 1;
    c.n_pmab = 2;
    c.channels = 16;
    c.heads = 2;
    c.window_size = 4;
    c.k_prime = 5;
    c.pfm_kernel = 3;
    c.mode = net::TaskMode::AC;
    c.upscale = 4;
    net::PartWeights w = net::PartWeights::init(c, 1);
    AnnularImage in;
    in.pixels = smooth_image(64, 64);
    in.geometry = AnnularGeometry::full(64, 64);
    PsfMap map;
    map.k_prime = 5;
    map.geometry = AnnularGeometry::full(16, 16);
    map.data = Image(16, 16, 28);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) map.data.at(y, x, 12) = 1.0f;
    for (auto _ : state) {
        AnnularImage out = net::part_forward(in, map, c, w);
        benchmark::DoNotOptimize(out.pixels.data.data());
    }
}
BENCHMARK(BM_PartForwardToy)->Unit(benchmark::kMillisecond);
