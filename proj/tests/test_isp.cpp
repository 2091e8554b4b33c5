#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "palsim/error.hpp"
#include "palsim/isp.hpp"

using namespace palsim;

TEST_CASE("identity parameters make invert_isp the identity") {
    IspParams p = IspParams::identity();
    Image img = testutil::random_image(8, 8, 3, 1);
    Image out = invert_isp(img, p);
    CHECK(testutil::max_abs_diff(img, out) < 1e-7);
}

TEST_CASE("gamma decompression of constant gray has the closed form") {
    IspParams p;
    p.gamma = 2.2;
    Image img(4, 4, 3, 0.5f);
    Image out = invert_isp(img, p);
    double expect = std::pow(0.5, 2.2);
    CHECK(out.at(2, 2, 1) == doctest::Approx(expect).epsilon(1e-6));
    CHECK(expect == doctest::Approx(0.2176).epsilon(1e-3));
}

TEST_CASE("forward after invert is the identity without mosaic or noise") {
    IspParams p;
    p.gamma = 2.2;
    p.wb_gains = {1.8, 1.0, 1.5};
    p.ccm = {{{1.1, -0.05, -0.05}, {-0.04, 1.08, -0.04}, {-0.02, -0.08, 1.1}}};
    p.noise.read_sigma = 0.0;
    p.noise.shot_gain = 0.0;
    Image img = testutil::smooth_image(16, 16, 5); // values well inside (0, 1)
    Image raw = invert_isp(img, p);
    Image back = forward_isp(raw, p, 0, false);
    CHECK(testutil::max_abs_diff(img, back) < 1e-5);
}

TEST_CASE("singular ccm is a configuration error") {
    IspParams p;
    p.ccm = {{{1, 0, 0}, {2, 0, 0}, {0, 0, 1}}};
    Image img(4, 4, 3, 0.5f);
    CHECK_THROWS_AS(invert_isp(img, p), config_error);
}

TEST_CASE("forward_isp basics") {
    IspParams p = IspParams::identity();
    SUBCASE("zero raw stays zero") {
        Image zero(6, 6, 3, 0.0f);
        Image out = forward_isp(zero, p, 1, false);
        for (float v : out.data) CHECK(v == 0.0f);
    }
    SUBCASE("identity parameters clip-copy the input") {
        Image img = testutil::random_image(6, 6, 3, 2);
        Image out = forward_isp(img, p, 1, false);
        CHECK(testutil::max_abs_diff(img, out) < 1e-7);
    }
    SUBCASE("noise path is deterministic per seed") {
        IspParams noisy = IspParams::identity();
        noisy.noise.read_sigma = 0.01;
        noisy.noise.shot_gain = 0.002;
        Image img = testutil::random_image(8, 8, 3, 3);
        Image a = forward_isp(img, noisy, 42, true);
        Image b = forward_isp(img, noisy, 42, true);
        CHECK(testutil::max_abs_diff(a, b) == 0.0);
        Image c = forward_isp(img, noisy, 43, true);
        CHECK(testutil::max_abs_diff(a, c) > 0.0);
    }
}

TEST_CASE("gamma stages preserve pixel ordering") {
    IspParams p;
    p.gamma = 2.2;
    Image img = testutil::random_image(8, 8, 3, 7);
    Image dec = invert_isp(img, p);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 1; i < 64; ++i) {
            float a = img.data[(i - 1) * 3 + static_cast<std::size_t>(c)];
            float b = img.data[i * 3 + static_cast<std::size_t>(c)];
            float fa = dec.data[(i - 1) * 3 + static_cast<std::size_t>(c)];
            float fb = dec.data[i * 3 + static_cast<std::size_t>(c)];
            if (a < b) CHECK(fa <= fb);
            if (a > b) CHECK(fa >= fb);
        }
}

TEST_CASE("mosaic picks the patterned channel") {
    Image img(4, 4, 3);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            img.at(y, x, 0) = 0.1f;
            img.at(y, x, 1) = 0.5f;
            img.at(y, x, 2) = 0.9f;
        }
    BayerImage b = mosaic(img, BayerPattern::RGGB);
    CHECK(b.at(0, 0) == 0.1f); // red retained at (0,0)
    CHECK(b.at(0, 1) == 0.5f);
    CHECK(b.at(1, 0) == 0.5f);
    CHECK(b.at(1, 1) == 0.9f);
    CHECK(bayer_channel_at(BayerPattern::BGGR, 0, 0) == 2);
    CHECK(bayer_channel_at(BayerPattern::GRBG, 0, 0) == 1);
}

TEST_CASE("odd dimensions are rejected by the mosaic stages") {
    Image img(5, 4, 3, 0.5f);
    CHECK_THROWS_AS(mosaic(img, BayerPattern::RGGB), argument_error);
}

TEST_CASE("demosaic reproduces constant images exactly") {
    for (auto pattern : {BayerPattern::RGGB, BayerPattern::BGGR, BayerPattern::GRBG,
                         BayerPattern::GBRG}) {
        Image img(8, 8, 3);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                img.at(y, x, 0) = 0.25f;
                img.at(y, x, 1) = 0.5f;
                img.at(y, x, 2) = 0.75f;
            }
        Image back = demosaic(mosaic(img, pattern));
        CHECK(testutil::max_abs_diff(img, back) == 0.0);
    }
}

TEST_CASE("bilinear demosaic is exact on a linear ramp in the interior") {
    const int n = 16;
    Image img(n, n, 3);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = static_cast<float>(0.1 + 0.05 * x);
    Image back = demosaic(mosaic(img, BayerPattern::RGGB));
    for (int y = 2; y < n - 2; ++y)
        for (int x = 2; x < n - 2; ++x)
            CHECK(std::abs(back.at(y, x, 1) - img.at(y, x, 1)) <= 1e-6);
}

TEST_CASE("noise stages") {
    SUBCASE("zero parameters are the identity") {
        BayerImage b;
        b.height = 4;
        b.width = 4;
        b.data.assign(16, 0.3f);
        BayerImage out = add_noise(b, {0.0, 0.0}, 11);
        for (std::size_t i = 0; i < out.data.size(); ++i) CHECK(out.data[i] == b.data[i]);
    }
    SUBCASE("read noise matches its nominal deviation over a million pixels") {
        BayerImage b;
        b.height = 1000;
        b.width = 1000;
        b.data.assign(1000000, 0.25f);
        BayerImage out = add_noise(b, {0.01, 0.0}, 123);
        double mean = 0.0;
        for (float v : out.data) mean += v;
        mean /= static_cast<double>(out.data.size());
        double var = 0.0;
        for (float v : out.data) var += (v - mean) * (v - mean);
        var /= static_cast<double>(out.data.size() - 1);
        double sd = std::sqrt(var);
        CHECK(sd > 0.0095);
        CHECK(sd < 0.0105);
    }
    SUBCASE("same seed gives identical output") {
        BayerImage b;
        b.height = 8;
        b.width = 8;
        b.data.assign(64, 0.4f);
        BayerImage x = add_noise(b, {0.01, 0.001}, 5);
        BayerImage y = add_noise(b, {0.01, 0.001}, 5);
        for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(x.data[i] == y.data[i]);
    }
}
