#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "helpers.hpp"
#include "palsim/error.hpp"
#include "palsim/net/part.hpp"

using namespace palsim;
using namespace palsim::net;

namespace {

PartConfig toy_config() {
    PartConfig c;
    c.n_prtb = 1;
    c.n_pmab = 2;
    c.channels = 16;
    c.heads = 2;
    c.window_size = 4;
    c.k_prime = 5;
    c.pfm_kernel = 3;
    c.mode = TaskMode::AC;
    c.upscale = 4;
    return c;
}

void zero_layer(PartWeights& w, const std::string& name) {
    auto& v = w.at(name);
    std::fill(v.begin(), v.end(), 0.0f);
}

// weight[o][i] = (o == i), with o possibly offset into a stacked block.
void identity_block(std::vector<float>& w, int rows, int cols, int row_offset) {
    for (int i = 0; i < cols; ++i) w[static_cast<std::size_t>(row_offset + i) * cols + i] = 1.0f;
    (void)rows;
}

FeatureTensor ramp_x(int h, int w, int c, double scale = 0.1) {
    FeatureTensor t(h, w, c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) t.at(y, x, ch) = static_cast<float>(scale * x);
    return t;
}

PsfMap delta_map(int h, int w, int k_prime) {
    PsfMap map;
    map.k_prime = k_prime;
    map.geometry = AnnularGeometry::full(h, w);
    map.data = Image(h, w, k_prime * k_prime + 3);
    int center = (k_prime * k_prime) / 2;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            map.data.at(y, x, center) = 1.0f;
            for (int c = 0; c < 3; ++c) map.data.at(y, x, k_prime * k_prime + c) = 0.5f;
        }
    return map;
}

} // namespace

TEST_CASE("pixel shuffle round trips") {
    SUBCASE("factor one is the identity") {
        FeatureTensor x = testutil::random_image(6, 6, 3, 1);
        FeatureTensor u = pixel_unshuffle(x, 1);
        CHECK(testutil::max_abs_diff(x, u) == 0.0);
    }
    SUBCASE("numbered 4x4 grid has the documented block layout") {
        FeatureTensor x(4, 4, 1);
        for (int y = 0; y < 4; ++y)
            for (int xx = 0; xx < 4; ++xx) x.at(y, xx, 0) = static_cast<float>(y * 4 + xx);
        FeatureTensor u = pixel_unshuffle(x, 2);
        CHECK(u.height == 2);
        CHECK(u.channels == 4);
        CHECK(u.at(0, 0, 0) == 0.0f);
        CHECK(u.at(0, 0, 1) == 1.0f);
        CHECK(u.at(0, 0, 2) == 4.0f);
        CHECK(u.at(0, 0, 3) == 5.0f);
        CHECK(u.at(1, 1, 0) == 10.0f);
        FeatureTensor back = pixel_shuffle(u, 2);
        CHECK(testutil::max_abs_diff(x, back) == 0.0);
    }
    SUBCASE("random round trip is bit exact") {
        FeatureTensor x = testutil::random_image(64, 64, 3, 2);
        FeatureTensor back = pixel_shuffle(pixel_unshuffle(x, 4), 4);
        for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(x.data[i] == back.data[i]);
    }
    SUBCASE("non-divisible dimensions are rejected") {
        FeatureTensor x(6, 6, 3);
        CHECK_THROWS_AS(pixel_unshuffle(x, 4), argument_error);
    }
}

TEST_CASE("conv2d matches a sliding-window oracle") {
    FeatureTensor x = testutil::random_image(9, 7, 3, 3);
    const int out_ch = 4, k = 3;
    std::vector<float> weight(static_cast<std::size_t>(out_ch) * 3 * k * k);
    std::vector<float> bias(static_cast<std::size_t>(out_ch));
    for (std::size_t i = 0; i < weight.size(); ++i)
        weight[i] = static_cast<float>(uniform01(mix_key(77, i)) - 0.5);
    for (std::size_t i = 0; i < bias.size(); ++i)
        bias[i] = static_cast<float>(uniform01(mix_key(78, i)) - 0.5);

    FeatureTensor out = conv2d(x, weight, bias, out_ch, k);
    for (int y = 0; y < 9; ++y)
        for (int xx = 0; xx < 7; ++xx)
            for (int o = 0; o < out_ch; ++o) {
                double acc = bias[static_cast<std::size_t>(o)];
                for (int i = 0; i < 3; ++i)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            int sy = y + ky - 1, sx = xx + kx - 1;
                            if (sy < 0 || sy >= 9 || sx < 0 || sx >= 7) continue;
                            acc += static_cast<double>(
                                       weight[((static_cast<std::size_t>(o) * 3 + i) * k + ky) * k +
                                              kx]) *
                                   x.at(sy, sx, i);
                        }
                CHECK(out.at(y, xx, o) == doctest::Approx(acc).epsilon(1e-5));
            }
}

TEST_CASE("psf feature extraction is a single convolution") {
    PartConfig c = toy_config();
    PartWeights w = PartWeights::init(c, 5);
    PsfMap map = delta_map(16, 16, c.k_prime);

    SUBCASE("zero map and zero bias give zero features") {
        PsfMap zero = map;
        std::fill(zero.data.data.begin(), zero.data.data.end(), 0.0f);
        FeatureTensor f = psf_feature_extract(zero.data, w, c);
        for (float v : f.data) CHECK(v == 0.0f);
    }
    SUBCASE("center-tap kernel copies a channel") {
        zero_layer(w, "e_psf_w");
        auto& ew = w.at("e_psf_w");
        // out channel 0 <- in channel 2, center tap
        int in_ch = c.map_channels();
        ew[((0 * static_cast<std::size_t>(in_ch) + 2) * 3 + 1) * 3 + 1] = 1.0f;
        FeatureTensor f = psf_feature_extract(map.data, w, c);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x)
                CHECK(f.at(y, x, 0) == map.data.at(y, x, 2));
    }
}

TEST_CASE("pfm behaviors") {
    PartConfig c = toy_config();
    PartWeights w = PartWeights::init(c, 7);
    FeatureTensor x = testutil::random_image(16, 16, c.channels, 9);
    FeatureTensor psf = testutil::random_image(16, 16, c.channels, 10);

    SUBCASE("delta kernels reproduce the input exactly") {
        zero_layer(w, "pfm_in.out_w");
        zero_layer(w, "pfm_in.out_b");
        auto& b = w.at("pfm_in.out_b");
        int k = c.pfm_kernel;
        for (int ch = 0; ch < c.channels; ++ch)
            b[static_cast<std::size_t>(ch) * k * k + (k * k) / 2] = 1.0f;
        FeatureTensor out = pfm_forward(x, psf, w, "pfm_in", k);
        CHECK(testutil::max_abs_diff(x, out) == 0.0);
    }
    SUBCASE("k = 1 with a constant predicted scalar scales the input") {
        zero_layer(w, "prtb0.pmab0.pfm.out_w");
        auto& b = w.at("prtb0.pmab0.pfm.out_b");
        std::fill(b.begin(), b.end(), 2.0f);
        FeatureTensor out = pfm_forward(x, psf, w, "prtb0.pmab0.pfm", 1);
        for (std::size_t i = 0; i < x.data.size(); ++i)
            CHECK(out.data[i] == doctest::Approx(2.0 * x.data[i]).epsilon(1e-6));
    }
    SUBCASE("per-pixel filtering matches an explicit loop oracle") {
        FeatureTensor km = testutil::random_image(16, 16, c.channels * 9, 11);
        FeatureTensor out = apply_pixel_kernels(x, km, 3);
        for (int y = 0; y < 16; y += 3)
            for (int xx = 0; xx < 16; xx += 3)
                for (int ch = 0; ch < c.channels; ch += 5) {
                    double acc = 0.0;
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            int sy = std::clamp(y + ky - 1, 0, 15);
                            int sx = std::clamp(xx + kx - 1, 0, 15);
                            acc += static_cast<double>(km.at(y, xx, ch * 9 + ky * 3 + kx)) *
                                   x.at(sy, sx, ch);
                        }
                    CHECK(out.at(y, xx, ch) == doctest::Approx(acc).epsilon(1e-5));
                }
    }
    SUBCASE("dimensions not divisible by eight are rejected") {
        FeatureTensor bad = testutil::random_image(12, 16, c.channels, 12);
        FeatureTensor bad_psf = testutil::random_image(12, 16, c.channels, 13);
        CHECK_THROWS_AS(pfm_forward(bad, bad_psf, w, "pfm_in", 3), argument_error);
    }
}

TEST_CASE("window attention behaviors") {
    PartConfig c = toy_config(); // Ch = 8, heads = 2, window 4
    const int ch = c.channels / 2;

    SUBCASE("equal logits with identity value path average the window") {
        PartWeights w = PartWeights::init(c, 15);
        const std::string p = "prtb0.pmab0.wmsa";
        zero_layer(w, p + ".qkv_w");
        zero_layer(w, p + ".qkv_b");
        zero_layer(w, p + ".rel_bias");
        zero_layer(w, p + ".proj_w");
        zero_layer(w, p + ".proj_b");
        identity_block(w.at(p + ".qkv_w"), 3 * ch, ch, 2 * ch); // v block
        identity_block(w.at(p + ".proj_w"), ch, ch, 0);
        FeatureTensor x = testutil::random_image(8, 8, ch, 16);
        FeatureTensor out = wmsa_forward(x, w, p, c.window_size, c.heads);
        for (int wy = 0; wy < 2; ++wy)
            for (int wx = 0; wx < 2; ++wx)
                for (int d = 0; d < ch; ++d) {
                    double mean = 0.0;
                    for (int iy = 0; iy < 4; ++iy)
                        for (int ix = 0; ix < 4; ++ix)
                            mean += x.at(wy * 4 + iy, wx * 4 + ix, d);
                    mean /= 16.0;
                    CHECK(out.at(wy * 4, wx * 4, d) == doctest::Approx(mean).epsilon(1e-6));
                }
    }
    SUBCASE("a 1x1 window is the identity over one token") {
        PartConfig c1 = toy_config();
        c1.window_size = 1;
        PartWeights w = PartWeights::init(c1, 17);
        const std::string p = "prtb0.pmab0.wmsa";
        zero_layer(w, p + ".qkv_w");
        zero_layer(w, p + ".qkv_b");
        zero_layer(w, p + ".rel_bias");
        zero_layer(w, p + ".proj_w");
        zero_layer(w, p + ".proj_b");
        identity_block(w.at(p + ".qkv_w"), 3 * ch, ch, 2 * ch);
        identity_block(w.at(p + ".proj_w"), ch, ch, 0);
        FeatureTensor x = testutil::random_image(5, 7, ch, 18);
        FeatureTensor out = wmsa_forward(x, w, p, 1, c1.heads);
        CHECK(testutil::max_abs_diff(x, out) < 1e-6);
    }
    SUBCASE("attention rows sum to one for random weights") {
        PartWeights w = PartWeights::init(c, 19);
        FeatureTensor x = testutil::random_image(12, 12, ch, 20);
        AttnProbe probe;
        wmsa_forward(x, w, "prtb0.pmab1.wmsa", c.window_size, c.heads, &probe);
        CHECK(probe.min_row_sum > 1.0 - 1e-6);
        CHECK(probe.max_row_sum < 1.0 + 1e-6);
    }
    SUBCASE("non-divisible dimensions pad and crop") {
        PartWeights w = PartWeights::init(c, 21);
        FeatureTensor x = testutil::random_image(10, 9, ch, 22);
        FeatureTensor out = wmsa_forward(x, w, "prtb0.pmab0.wmsa", c.window_size, c.heads);
        CHECK(out.height == 10);
        CHECK(out.width == 9);
    }
}

TEST_CASE("varied-size attention behaviors") {
    PartConfig c = toy_config();
    const int ch = c.channels / 2;

    SUBCASE("identity transform equals default window attention") {
        PartWeights w = PartWeights::init(c, 23);
        const std::string pv = "prtb0.pmab0.pvsa";
        const std::string pw = "prtb0.pmab0.wmsa";
        // copy the wmsa branch weights into the pvsa slots
        w.at(pv + ".qkv_w") = w.get(pw + ".qkv_w");
        w.at(pv + ".qkv_b") = w.get(pw + ".qkv_b");
        w.at(pv + ".proj_w") = w.get(pw + ".proj_w");
        w.at(pv + ".proj_b") = w.get(pw + ".proj_b");
        w.at(pv + ".rel_bias") = w.get(pw + ".rel_bias");
        zero_layer(w, pv + ".wt_w");
        zero_layer(w, pv + ".wt_b");
        FeatureTensor x = testutil::random_image(8, 8, ch, 24);
        FeatureTensor psf = testutil::random_image(8, 8, c.channels, 25);
        FeatureTensor a = pvsa_forward(x, psf, w, pv, c.window_size, c.heads);
        FeatureTensor b = wmsa_forward(x, w, pw, c.window_size, c.heads);
        CHECK(testutil::max_abs_diff(a, b) < 1e-5);
    }
    SUBCASE("attention rows sum to one") {
        PartWeights w = PartWeights::init(c, 27);
        FeatureTensor x = testutil::random_image(8, 8, ch, 28);
        FeatureTensor psf = testutil::random_image(8, 8, c.channels, 29);
        AttnProbe probe;
        pvsa_forward(x, psf, w, "prtb0.pmab1.pvsa", c.window_size, c.heads, &probe);
        CHECK(probe.min_row_sum > 1.0 - 1e-6);
        CHECK(probe.max_row_sum < 1.0 + 1e-6);
    }
    SUBCASE("doubled scale samples a linear ramp at dilated positions") {
        PartConfig c2 = toy_config();
        c2.channels = 8;
        c2.heads = 2;
        c2.window_size = 2;
        PartWeights w = PartWeights::init(c2, 31);
        const int ch2 = c2.channels / 2; // 4
        const std::string p = "prtb0.pmab0.pvsa";
        zero_layer(w, p + ".qkv_w");
        zero_layer(w, p + ".qkv_b");
        zero_layer(w, p + ".rel_bias");
        zero_layer(w, p + ".proj_w");
        zero_layer(w, p + ".proj_b");
        zero_layer(w, p + ".wt_w");
        zero_layer(w, p + ".wt_b");
        identity_block(w.at(p + ".qkv_w"), 3 * ch2, ch2, 2 * ch2); // v identity
        identity_block(w.at(p + ".proj_w"), ch2, ch2, 0);
        // near-one-hot diagonal attention via a large same-offset bias
        auto& bias = w.at(p + ".rel_bias");
        int diag = (c2.window_size - 1) * (2 * c2.window_size - 1) + (c2.window_size - 1);
        for (int h = 0; h < c2.heads; ++h)
            bias[static_cast<std::size_t>(diag) * c2.heads + h] = 50.0f;
        // scale 2, offset 0 for every head
        auto& wb = w.at(p + ".wt_b");
        for (int h = 0; h < c2.heads; ++h) {
            wb[static_cast<std::size_t>(4 * h)] = 1.0f;     // dsx
            wb[static_cast<std::size_t>(4 * h + 1)] = 1.0f; // dsy
        }
        FeatureTensor x = ramp_x(12, 12, ch2);
        FeatureTensor psf(12, 12, c2.channels, 0.0f);
        FeatureTensor out = pvsa_forward(x, psf, w, p, c2.window_size, c2.heads);
        // window rows 4-5, cols 4-5; center (4.5, 4.5); dilated x for jx=0: 3.5
        CHECK(out.at(4, 4, 0) == doctest::Approx(0.1 * 3.5).epsilon(1e-5));
        CHECK(out.at(4, 5, 0) == doctest::Approx(0.1 * 5.5).epsilon(1e-5));
        CHECK(out.at(5, 4, 2) == doctest::Approx(0.1 * 3.5).epsilon(1e-5));
    }
}

TEST_CASE("pmab composition and gating") {
    PartConfig c = toy_config();
    const std::string p = "prtb0.pmab0";

    SUBCASE("half split is 90/90 at 180 channels") {
        PartConfig big;
        big.channels = 180;
        big.heads = 6;
        CHECK(big.channels / 2 == 90);
        CHECK((big.channels / 2) % big.heads == 0);
        big.validate();
    }
    SUBCASE("forward matches the straight-line composition of its parts") {
        PartWeights w = PartWeights::init(c, 33);
        FeatureTensor x = testutil::random_image(8, 8, c.channels, 34);
        FeatureTensor psf = testutil::random_image(8, 8, c.channels, 35);
        FeatureTensor got = pmab_forward(x, psf, w, p, c);

        FeatureTensor h1 = slice_channels(x, 0, 8);
        FeatureTensor h2 = slice_channels(x, 8, 8);
        FeatureTensor a1 = wmsa_forward(h1, w, p + ".wmsa", c.window_size, c.heads);
        FeatureTensor a2 = pvsa_forward(h2, psf, w, p + ".pvsa", c.window_size, c.heads);
        FeatureTensor attn = concat_channels(a1, a2);
        FeatureTensor mod = pfm_forward(x, psf, w, p + ".pfm", 1);
        FeatureTensor mix = x;
        for (std::size_t i = 0; i < mix.data.size(); ++i)
            mix.data[i] = static_cast<float>(attn.data[i] + c.alpha * mod.data[i] + x.data[i]);
        FeatureTensor y = layer_norm(mix, w.get(p + ".ffn.ln_g"), w.get(p + ".ffn.ln_b"), c.ln_eps);
        y = linear_pointwise(y, w.get(p + ".ffn.fc1_w"), w.get(p + ".ffn.fc1_b"), 2 * c.channels);
        y = gelu(y);
        y = linear_pointwise(y, w.get(p + ".ffn.fc2_w"), w.get(p + ".ffn.fc2_b"), c.channels);
        FeatureTensor expect = add(mix, y);
        CHECK(testutil::max_abs_diff(got, expect) < 1e-5);
    }
    SUBCASE("alpha zero with silent attention and ffn is the identity") {
        PartConfig c0 = toy_config();
        c0.alpha = 0.0;
        PartWeights w = PartWeights::init(c0, 37);
        zero_layer(w, p + ".wmsa.proj_w");
        zero_layer(w, p + ".wmsa.proj_b");
        zero_layer(w, p + ".pvsa.proj_w");
        zero_layer(w, p + ".pvsa.proj_b");
        zero_layer(w, p + ".ffn.fc2_w");
        zero_layer(w, p + ".ffn.fc2_b");
        FeatureTensor x = testutil::random_image(8, 8, c0.channels, 38);
        FeatureTensor psf = testutil::random_image(8, 8, c0.channels, 39);
        FeatureTensor out = pmab_forward(x, psf, w, p, c0);
        CHECK(testutil::max_abs_diff(x, out) == 0.0);
    }
    SUBCASE("alpha zero with fixed windows ignores the psf features") {
        PartConfig c0 = toy_config();
        c0.alpha = 0.0;
        PartWeights w = PartWeights::init(c0, 41);
        zero_layer(w, p + ".pvsa.wt_w");
        zero_layer(w, p + ".pvsa.wt_b");
        FeatureTensor x = testutil::random_image(8, 8, c0.channels, 42);
        FeatureTensor psf1 = testutil::random_image(8, 8, c0.channels, 43);
        FeatureTensor psf2 = testutil::random_image(8, 8, c0.channels, 44);
        FeatureTensor o1 = pmab_forward(x, psf1, w, p, c0);
        FeatureTensor o2 = pmab_forward(x, psf2, w, p, c0);
        CHECK(testutil::max_abs_diff(o1, o2) == 0.0);
    }
}

TEST_CASE("part forward geometry") {
    SUBCASE("ac runs representation learning at a quarter resolution") {
        PartConfig c = toy_config();
        PartWeights w = PartWeights::init(c, 45);
        AnnularImage in;
        in.pixels = testutil::smooth_image(256, 256, 46);
        in.geometry = AnnularGeometry::full(256, 256);
        PsfMap map = delta_map(64, 64, c.k_prime);
        PartRunInfo info;
        AnnularImage out = part_forward(in, map, c, w, &info);
        CHECK(info.feature_height == 64);
        CHECK(info.feature_width == 64);
        CHECK(out.pixels.height == 256);
        CHECK(out.pixels.width == 256);
        CHECK(info.probe.min_row_sum > 1.0 - 1e-6);
        CHECK(info.probe.max_row_sum < 1.0 + 1e-6);
    }
    SUBCASE("srac upscales by three") {
        PartConfig c = toy_config();
        c.mode = TaskMode::SRAC;
        c.upscale = 3;
        PartWeights w = PartWeights::init(c, 47);
        AnnularImage in;
        in.pixels = testutil::smooth_image(64, 64, 48);
        in.geometry = AnnularGeometry::full(64, 64);
        PsfMap map = delta_map(64, 64, c.k_prime);
        AnnularImage out = part_forward(in, map, c, w);
        CHECK(out.pixels.height == 192);
        CHECK(out.pixels.width == 192);
        CHECK(out.geometry.r_max == doctest::Approx(32.0 * 3));
    }
    SUBCASE("resolution mismatches raise configuration errors") {
        PartConfig c = toy_config();
        PartWeights w = PartWeights::init(c, 49);
        AnnularImage in;
        in.pixels = testutil::smooth_image(64, 64, 50);
        in.geometry = AnnularGeometry::full(64, 64);
        PsfMap wrong = delta_map(64, 64, c.k_prime); // should be 16x16 after unshuffle
        CHECK_THROWS_AS(part_forward(in, wrong, c, w), config_error);
    }
}

TEST_CASE("part forward determinism") {
    PartConfig c = toy_config();
    PartWeights w = PartWeights::init(c, 51);
    AnnularImage in;
    in.pixels = testutil::smooth_image(64, 64, 52);
    in.geometry = AnnularGeometry::full(64, 64);
    PsfMap map = delta_map(16, 16, c.k_prime);

    AnnularImage a = part_forward(in, map, c, w, nullptr, 1);
    AnnularImage b = part_forward(in, map, c, w, nullptr, 1);
    AnnularImage t3 = part_forward(in, map, c, w, nullptr, 3);
    for (std::size_t i = 0; i < a.pixels.data.size(); ++i) {
        CHECK(a.pixels.data[i] == b.pixels.data[i]);
        CHECK(a.pixels.data[i] == t3.pixels.data[i]);
    }
}

TEST_CASE("weight initialization and persistence") {
    PartConfig c = toy_config();
    SUBCASE("same seed regenerates identical weights") {
        PartWeights a = PartWeights::init(c, 7);
        PartWeights b = PartWeights::init(c, 7);
        for (std::size_t l = 0; l < a.layers().size(); ++l)
            CHECK(a.layers()[l].data == b.layers()[l].data);
    }
    SUBCASE("different seeds differ") {
        PartWeights a = PartWeights::init(c, 7);
        PartWeights b = PartWeights::init(c, 8);
        double diff = 0.0;
        for (std::size_t l = 0; l < a.layers().size(); ++l)
            for (std::size_t i = 0; i < a.layers()[l].data.size(); ++i)
                diff = std::max(diff, std::abs(static_cast<double>(a.layers()[l].data[i]) -
                                               b.layers()[l].data[i]));
        CHECK(diff > 0.0);
    }
    SUBCASE("save and load round trip") {
        namespace fs = std::filesystem;
        PartWeights a = PartWeights::init(c, 9);
        fs::path tmp = fs::temp_directory_path() / "palsim_weights.bin";
        a.save(tmp, c);
        PartConfig loaded_config;
        PartWeights b = PartWeights::load(tmp, loaded_config);
        CHECK(loaded_config.channels == c.channels);
        for (std::size_t l = 0; l < a.layers().size(); ++l)
            CHECK(a.layers()[l].data == b.layers()[l].data);
        fs::remove(tmp);
    }
    SUBCASE("toy forward stays finite over seeds") {
        AnnularImage in;
        in.pixels = testutil::smooth_image(64, 64, 53);
        in.geometry = AnnularGeometry::full(64, 64);
        PsfMap map = delta_map(16, 16, c.k_prime);
        for (uint64_t seed = 0; seed < 10; ++seed) {
            PartWeights w = PartWeights::init(c, seed);
            AnnularImage out = part_forward(in, map, c, w);
            for (float v : out.pixels.data) CHECK(std::isfinite(v));
        }
    }
}
