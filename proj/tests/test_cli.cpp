// Integration tests driving the installed CLI binary end to end.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <sys/wait.h>

#include "palsim/container.hpp"
#include "palsim/image.hpp"
#include "palsim/png_io.hpp"
#include "palsim/prescription.hpp"
#include "palsim/rng.hpp"
#include "palsim/sensor.hpp"

using namespace palsim;
namespace fs = std::filesystem;

namespace {

const char* cli = PALSIM_CLI_PATH;

int run(const std::string& args) {
    std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() / "palsim_cli_test";
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }
    fs::path operator/(const std::string& name) const { return dir / name; }
};

Image smooth(int h, int w, uint64_t seed) {
    Image img(h, w, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = 0.5 + 0.25 * std::sin(2.0 * M_PI * (x + y + 7.0 * c + seed) / w * 2.0);
                img.at(y, x, c) = static_cast<float>(v);
            }
    return img;
}

void write_tiny_inputs(const Workspace& ws) {
    SyntheticPrescriptionParams sp;
    sp.n_lambda = 2;
    sp.n_fov = 3;
    sp.mean_spot_radius_um = 3.0;
    OpticalPrescription p = make_synthetic_prescription(sp);
    save_prescription(ws / "p.json", p);
    SensorModel sensor = sensor_preset_small_pitch(p.zernike.lambdas_nm);
    sensor.pixel_size_um = 2.0;
    ResponseModel model;
    save_sensor(ws / "s.json", sensor, &model);
    write_png(ws / "img.png", smooth(64, 64, 1), 16);
}

} // namespace

TEST_CASE("usage errors exit with code 1") {
    CHECK(run("definitely-not-a-command") == 1);
    CHECK(run("psf synth --nonsense 1") == 1);
    CHECK(run("") == 1);
}

TEST_CASE("data errors exit with code 2") {
    Workspace ws;
    CHECK(run("psf perturb --prescription " + (ws / "missing.json").string() +
              " --seed 1 --out " + (ws / "x.json").string()) == 2);
}

TEST_CASE("psf synth then sim run and recover wiener round trip") {
    Workspace ws;
    write_tiny_inputs(ws);

    CHECK(run("psf synth --prescription " + (ws / "p.json").string() + " --sensor " +
              (ws / "s.json").string() + " --out " + (ws / "stack.bin").string() +
              " --pupil-samples 128") == 0);
    CHECK(fs::exists(ws / "stack.bin"));
    CHECK(fs::exists(ws / "stack.bin.manifest.json"));

    CHECK(run("sim run --image " + (ws / "img.png").string() + " --prescription " +
              (ws / "p.json").string() + " --sensor " + (ws / "s.json").string() + " --stack " +
              (ws / "stack.bin").string() + " --out " + (ws / "degraded.bin").string() +
              " --rings 3 --sectors 4 --no-noise --seed 5") == 0);
    CHECK(fs::exists(ws / "degraded.bin"));

    CHECK(run("recover wiener --image " + (ws / "degraded.bin").string() + " --stack " +
              (ws / "stack.bin").string() + " --sensor " + (ws / "s.json").string() + " --out " +
              (ws / "recovered.png").string() + " --rings 3 --sectors 4 --nsr 1e-4") == 0);
    CHECK(fs::exists(ws / "recovered.png"));

    CHECK(run("eval metrics --test " + (ws / "recovered.png").string() + " --ref " +
              (ws / "img.png").string()) == 0);
}

TEST_CASE("identical seeds give identical tensors and manifests") {
    Workspace ws;
    write_tiny_inputs(ws);
    std::string base = "sim run --image " + (ws / "img.png").string() + " --prescription " +
                       (ws / "p.json").string() + " --sensor " + (ws / "s.json").string() +
                       " --out ";
    std::string tail = " --rings 3 --sectors 4 --seed 11 --pupil-samples 128";
    CHECK(run(base + (ws / "a.bin").string() + tail) == 0);
    CHECK(run(base + (ws / "b.bin").string() + tail + " --threads 3") == 0);
    CHECK(read_text(ws / "a.bin") == read_text(ws / "b.bin"));

    auto strip_paths = [](std::string s, const std::string& from, const std::string& to) {
        std::size_t pos;
        while ((pos = s.find(from)) != std::string::npos) s.replace(pos, from.size(), to);
        return s;
    };
    std::string ma = strip_paths(read_text(ws / "a.bin.manifest.json"), "a.bin", "x.bin");
    std::string mb = strip_paths(read_text(ws / "b.bin.manifest.json"), "b.bin", "x.bin");
    CHECK(ma == mb);
}

TEST_CASE("psfmap build and recover part run end to end") {
    Workspace ws;
    write_tiny_inputs(ws);
    CHECK(run("psf synth --prescription " + (ws / "p.json").string() + " --sensor " +
              (ws / "s.json").string() + " --out " + (ws / "stack.bin").string() +
              " --pupil-samples 128") == 0);

    CHECK(run("psfmap build --stack " + (ws / "stack.bin").string() + " --out " +
              (ws / "map.bin").string() + " --k-prime 5 --height 64 --width 64") == 0);
    CHECK(fs::exists(ws / "map.bin"));

    // toy config file
    write_text_atomic(ws / "cfg.json",
                      "{\"n_prtb\":1,\"n_pmab\":1,\"channels\":16,\"heads\":2,"
                      "\"window_size\":4,\"k_prime\":5,\"pfm_kernel\":3,\"mode\":\"ac\","
                      "\"upscale\":4}\n");
    CHECK(run("recover part --image " + (ws / "img.png").string() + " --map " +
              (ws / "map.bin").string() + " --config " + (ws / "cfg.json").string() +
              " --seed 3 --out " + (ws / "part.png").string() + " --save-weights " +
              (ws / "w.bin").string()) == 0);
    CHECK(fs::exists(ws / "part.png"));
    CHECK(fs::exists(ws / "w.bin"));

    // reusing the saved weights reproduces the output bit for bit
    CHECK(run("recover part --image " + (ws / "img.png").string() + " --map " +
              (ws / "map.bin").string() + " --weights " + (ws / "w.bin").string() + " --out " +
              (ws / "part2.bin").string()) == 0);
    CHECK(run("recover part --image " + (ws / "img.png").string() + " --map " +
              (ws / "map.bin").string() + " --weights " + (ws / "w.bin").string() + " --out " +
              (ws / "part3.bin").string()) == 0);
    CHECK(read_text(ws / "part2.bin") == read_text(ws / "part3.bin"));
}

TEST_CASE("sfr, oiqe, checker-gt and plots") {
    Workspace ws;
    // two slanted-edge patches, one sharper than the other
    auto edge = [&](double sigma, const fs::path& out) {
        Image img(96, 64, 3);
        double slope = std::tan(5.0 * M_PI / 180.0);
        for (int y = 0; y < 96; ++y)
            for (int x = 0; x < 64; ++x) {
                double d = (x - (32.0 + slope * y)) / std::sqrt(1.0 + slope * slope);
                double v = sigma <= 0.0 ? (d >= 0.0 ? 1.0 : 0.0)
                                        : 0.5 * (1.0 + std::erf(d / (sigma * std::sqrt(2.0))));
                for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>(v);
            }
        write_png(out, img, 16);
    };
    edge(0.8, ws / "sharp.png");
    edge(2.0, ws / "soft.png");
    write_text_atomic(ws / "test_list.txt", "soft.png,soft\n");
    write_text_atomic(ws / "ref_list.txt", "sharp.png,sharp\n");

    CHECK(run("eval sfr --patches " + (ws / "test_list.txt").string() + " --out-prefix " +
              (ws / "test").string()) == 0);
    CHECK(run("eval sfr --patches " + (ws / "ref_list.txt").string() + " --out-prefix " +
              (ws / "ref").string()) == 0);
    CHECK(fs::exists(ws / "test_curves.csv"));
    CHECK(fs::exists(ws / "ref_summary.csv"));

    CHECK(run("eval oiqe --test " + (ws / "test_summary.csv").string() + " --ref " +
              (ws / "ref_summary.csv").string() + " --csv " + (ws / "oiqe.csv").string()) == 0);
    std::string oiqe_text = read_text(ws / "oiqe.csv");
    CHECK(oiqe_text.find("oiqe") != std::string::npos);

    CHECK(run("plot mtf --curves " + (ws / "test_curves.csv").string() + " --out " +
              (ws / "mtf.png").string()) == 0);
    CHECK(fs::exists(ws / "mtf.png"));
    CHECK(fs::exists(ws / "mtf.png.csv"));

    // checkerboard ground truth
    Image checker(64, 64, 3);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            float v = ((y / 16 + x / 16) % 2 == 0) ? 0.9f : 0.1f;
            for (int c = 0; c < 3; ++c) checker.at(y, x, c) = v;
        }
    write_png(ws / "checker.png", checker, 16);
    CHECK(run("eval checker-gt --image " + (ws / "checker.png").string() + " --out " +
              (ws / "gt.png").string()) == 0);
    CHECK(fs::exists(ws / "gt.png"));

    // psf grid plot
    write_tiny_inputs(ws);
    CHECK(run("psf synth --prescription " + (ws / "p.json").string() + " --sensor " +
              (ws / "s.json").string() + " --out " + (ws / "stack.bin").string() +
              " --pupil-samples 128") == 0);
    CHECK(run("plot psf --stack " + (ws / "stack.bin").string() + " --out " +
              (ws / "grid.png").string()) == 0);
    CHECK(fs::exists(ws / "grid.png"));
    CHECK(fs::exists(ws / "grid.png.csv"));
}

TEST_CASE("sim dataset via the CLI is reproducible") {
    Workspace ws;
    write_tiny_inputs(ws);
    fs::create_directories(ws / "hq");
    write_png(ws / "hq" / "one.png", smooth(32, 32, 3), 16);

    std::string common = "sim dataset --hq " + (ws / "hq").string() + " --prescription " +
                         (ws / "p.json").string() + " --sensor " + (ws / "s.json").string() +
                         " --n-virtual 2 --range 0.25 --seed 21 --rings 3 --sectors 4 "
                         "--pupil-samples 128 --out ";
    CHECK(run(common + (ws / "d1").string()) == 0);
    CHECK(run(common + (ws / "d2").string()) == 0);
    CHECK(read_text(ws / "d1" / "manifest.json") == read_text(ws / "d2" / "manifest.json"));
}
