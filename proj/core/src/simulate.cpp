#include "palsim/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include <nlohmann/json.hpp>

#include "palsim/container.hpp"
#include "palsim/error.hpp"
#include "palsim/parallel.hpp"
#include "palsim/png_io.hpp"
#include "palsim/rng.hpp"

namespace palsim {

int FovPartition::ring_for(double radius) const {
    if (n_rings < 1) throw argument_error("partition: empty");
    double w = ring_width();
    int idx = static_cast<int>(std::floor((radius - ring_edges[0]) / w));
    return std::clamp(idx, 0, n_rings - 1);
}

FovPartition partition(const AnnularGeometry& geometry, int n_rings) {
    if (n_rings < 1) throw argument_error("partition: n_rings must be >= 1");
    if (geometry.r_blind >= geometry.r_max)
        throw argument_error("partition: r_blind must be below r_max");
    FovPartition p;
    p.n_rings = n_rings;
    p.ring_edges.resize(static_cast<std::size_t>(n_rings) + 1);
    double w = (geometry.r_max - geometry.r_blind) / n_rings;
    for (int i = 0; i <= n_rings; ++i)
        p.ring_edges[static_cast<std::size_t>(i)] = geometry.r_blind + w * i;
    p.ring_edges.back() = geometry.r_max;
    return p;
}

Kernel kernel_for_pixel(const PsfStack& stack, double x, double y,
                        const AnnularGeometry& geometry, int channel) {
    if (channel < 0 || channel >= 3) throw argument_error("kernel_for_pixel: bad channel");
    double r = geometry.radius(x, y);
    if (r < geometry.r_blind)
        return stack.per_channel[static_cast<std::size_t>(0)][static_cast<std::size_t>(channel)];
    double rho = std::clamp(r / geometry.r_max, 0.0, 1.0);
    int f = stack.fov_index_for(rho);
    double az = geometry.azimuth(x, y);
    return kernels::rotate(
        stack.per_channel[static_cast<std::size_t>(f)][static_cast<std::size_t>(channel)], az);
}

namespace {

// Sector index in [0, n_sectors) from a signed azimuth.
int sector_for(double azimuth, int n_sectors) {
    double a = azimuth < 0.0 ? azimuth + 2.0 * M_PI : azimuth;
    int s = static_cast<int>(std::floor(a / (2.0 * M_PI / n_sectors)));
    return std::clamp(s, 0, n_sectors - 1);
}

struct PatchBox {
    int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;
    void add(int x, int y) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
    }
    bool empty() const { return x1 < x0; }
};

} // namespace

Image blur_spatially_variant(const Image& linear, const PsfStack& stack,
                             const AnnularGeometry& geometry, const FovPartition& part,
                             int n_sectors, int threads) {
    if (linear.channels != 3) throw argument_error("blur: expected 3 channels");
    if (n_sectors < 1) throw argument_error("blur: n_sectors must be >= 1");
    geometry.validate(linear.height, linear.width);

    const int h = linear.height, w = linear.width;
    const int nr = part.n_rings, ns = n_sectors;

    // Pixel -> patch assignment and patch bounding boxes. Pixels inside the
    // blind area pass through; pixels beyond r_max fall into the last ring so
    // the whole frame is covered.
    std::vector<int32_t> patch_of(static_cast<std::size_t>(h) * w, -1);
    std::vector<PatchBox> boxes(static_cast<std::size_t>(nr) * ns);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double r = geometry.radius(x, y);
            if (r < geometry.r_blind) continue;
            int ring = part.ring_for(r);
            int sector = sector_for(geometry.azimuth(x, y), ns);
            int id = ring * ns + sector;
            patch_of[static_cast<std::size_t>(y) * w + x] = id;
            boxes[static_cast<std::size_t>(id)].add(x, y);
        }
    }

    Image out = linear; // blind area (and nothing else) keeps source values

    parallel_for(static_cast<std::size_t>(nr) * ns, threads, [&](std::size_t id) {
        const PatchBox& box = boxes[id];
        if (box.empty()) return;
        int ring = static_cast<int>(id) / ns;
        int sector = static_cast<int>(id) % ns;
        double rho = std::clamp(part.ring_center(ring) / geometry.r_max, 0.0, 1.0);
        int f = stack.fov_index_for(rho);
        double az = (sector + 0.5) * (2.0 * M_PI / ns);
        double gain = stack.illumination[static_cast<std::size_t>(f)];

        Kernel rot[3];
        for (int c = 0; c < 3; ++c)
            rot[c] = kernels::rotate(stack.per_channel[static_cast<std::size_t>(f)]
                                                      [static_cast<std::size_t>(c)],
                                     az);
        const int k = rot[0].size;
        const int c0 = k / 2;

        for (int y = box.y0; y <= box.y1; ++y) {
            for (int x = box.x0; x <= box.x1; ++x) {
                if (patch_of[static_cast<std::size_t>(y) * w + x] != static_cast<int>(id))
                    continue;
                for (int c = 0; c < 3; ++c) {
                    double acc = 0.0;
                    for (int u = 0; u < k; ++u) {
                        int yy = std::clamp(y + c0 - u, 0, h - 1);
                        for (int v = 0; v < k; ++v) {
                            int xx = std::clamp(x + c0 - v, 0, w - 1);
                            acc += rot[c].at(u, v) * linear.at(yy, xx, c);
                        }
                    }
                    out.at(y, x, c) = static_cast<float>(gain * acc);
                }
            }
        }
    });
    return out;
}

AnnularImage degrade(const AnnularImage& hq, const PsfStack& stack, const SensorModel& sensor,
                     const FovPartition& part, const DegradeOptions& options) {
    if (std::abs(stack.pixel_size_um - sensor.pixel_size_um) > 1e-9)
        throw config_error("degrade: psf stack pitch does not match the sensor pitch");
    Image linear = invert_isp(hq.pixels, sensor.isp);
    Image blurred = blur_spatially_variant(linear, stack, hq.geometry, part, options.n_sectors,
                                           options.threads);

    AnnularImage result;
    result.geometry = hq.geometry;
    if (options.mode == PipelineMode::SRAC) {
        int s = options.sr_factor;
        blurred = downsample_bicubic(blurred, s);
        result.geometry.cx = (hq.geometry.cx - 0.5 * (s - 1)) / s;
        result.geometry.cy = (hq.geometry.cy - 0.5 * (s - 1)) / s;
        result.geometry.r_blind = hq.geometry.r_blind / s;
        result.geometry.r_max = hq.geometry.r_max / s;
    }
    result.pixels = forward_isp(blurred, sensor.isp, options.seed, options.mosaic_noise);
    return result;
}

Image downsample_bicubic(const Image& img, int factor) {
    if (factor < 1) throw argument_error("downsample_bicubic: factor must be >= 1");
    if (factor == 1) return img;
    if (img.height % factor != 0 || img.width % factor != 0)
        throw argument_error("downsample_bicubic: dimensions must divide by the factor");

    // Catmull-Rom (a = -0.5) scaled by the factor for anti-aliasing.
    auto cubic = [](double t) {
        t = std::abs(t);
        if (t < 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
        if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
        return 0.0;
    };

    // Output sample o sits at input position o*factor + (factor-1)/2; the tap
    // offsets relative to o*factor are the same for every output.
    const double center = 0.5 * (factor - 1);
    const int j0 = static_cast<int>(std::ceil(center - 2.0 * factor));
    const int j1 = static_cast<int>(std::floor(center + 2.0 * factor));
    std::vector<double> weights(static_cast<std::size_t>(j1 - j0) + 1);
    double wsum = 0.0;
    for (int j = j0; j <= j1; ++j) {
        double v = cubic((j - center) / factor);
        weights[static_cast<std::size_t>(j - j0)] = v;
        wsum += v;
    }
    for (auto& v : weights) v /= wsum;

    const int oh = img.height / factor, ow = img.width / factor;
    const int ch = img.channels;

    // horizontal pass
    Image tmp(img.height, ow, ch);
    for (int y = 0; y < img.height; ++y)
        for (int ox = 0; ox < ow; ++ox)
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int j = j0; j <= j1; ++j) {
                    int x = std::clamp(ox * factor + j, 0, img.width - 1);
                    acc += weights[static_cast<std::size_t>(j - j0)] * img.at(y, x, c);
                }
                tmp.at(y, ox, c) = static_cast<float>(acc);
            }

    // vertical pass
    Image out(oh, ow, ch);
    for (int oy = 0; oy < oh; ++oy)
        for (int x = 0; x < ow; ++x)
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int j = j0; j <= j1; ++j) {
                    int y = std::clamp(oy * factor + j, 0, img.height - 1);
                    acc += weights[static_cast<std::size_t>(j - j0)] * tmp.at(y, x, c);
                }
                out.at(oy, x, c) = static_cast<float>(acc);
            }
    return out;
}

std::filesystem::path make_dataset(const std::filesystem::path& hq_dir,
                                   const OpticalPrescription& prescription,
                                   const SensorModel& sensor,
                                   const std::filesystem::path& out_dir,
                                   const DatasetParams& params) {
    if (params.n_virtual < 1) throw argument_error("make_dataset: n_virtual must be >= 1");
    std::set<std::filesystem::path> inputs;
    if (!std::filesystem::is_directory(hq_dir))
        throw data_error("make_dataset: not a directory: " + hq_dir.string());
    for (const auto& e : std::filesystem::directory_iterator(hq_dir))
        if (e.is_regular_file() && e.path().extension() == ".png") inputs.insert(e.path());
    if (inputs.empty()) throw data_error("make_dataset: no PNG images in " + hq_dir.string());

    std::filesystem::create_directories(out_dir);

    nlohmann::json manifest;
    manifest["format"] = "palsim-manifest";
    manifest["command"] = "sim dataset";
    manifest["seed"] = params.seed;
    manifest["n_virtual"] = params.n_virtual;
    manifest["range_fraction"] = params.range_fraction;
    manifest["mode"] = params.mode == PipelineMode::AC ? "ac" : "srac";
    manifest["n_rings"] = params.n_rings;
    manifest["n_sectors"] = params.n_sectors;
    manifest["pixel_size_um"] = sensor.pixel_size_um;
    manifest["samples"] = nlohmann::json::array();

    for (int v = 0; v < params.n_virtual; ++v) {
        uint64_t sample_seed = params.seed + static_cast<uint64_t>(v);
        OpticalPrescription pert = perturb(prescription, params.range_fraction, sample_seed);
        SynthesisOptions synth = params.synthesis;
        synth.threads = params.threads;
        PsfStack stack = synthesize_psf_stack(pert, sensor, synth);

        char sub[16];
        std::snprintf(sub, sizeof(sub), "v%02d", v);
        std::filesystem::create_directories(out_dir / sub);

        nlohmann::json sample;
        sample["virtual_index"] = v;
        sample["perturb_seed"] = sample_seed;
        sample["images"] = nlohmann::json::array();

        std::vector<std::filesystem::path> files(inputs.begin(), inputs.end());
        std::vector<nlohmann::json> records(files.size());
        std::vector<char> ok(files.size(), 0);
        parallel_for(files.size(), params.threads, [&](std::size_t i) {
            Image img;
            try {
                img = read_png(files[i]);
            } catch (const data_error& e) {
                std::cerr << "warning: skipping unreadable image " << files[i].string() << ": "
                          << e.what() << "\n";
                return;
            }
            AnnularImage annular;
            annular.pixels = std::move(img);
            double half = 0.5 * std::min(annular.pixels.height, annular.pixels.width);
            annular.geometry = AnnularGeometry::centered(
                annular.pixels.height, annular.pixels.width,
                params.r_blind_fraction * half, half);
            FovPartition part = partition(annular.geometry, params.n_rings);

            DegradeOptions d;
            d.mode = params.mode;
            d.n_sectors = params.n_sectors;
            d.seed = mix_key(params.seed, static_cast<uint64_t>(v), i);
            d.mosaic_noise = params.mosaic_noise;
            d.threads = 1; // parallelism lives at the image level here
            AnnularImage degraded = degrade(annular, stack, sensor, part, d);

            auto rel = std::filesystem::path(sub) / files[i].filename();
            auto out_path = out_dir / rel;
            write_png(out_path, degraded.pixels, params.png_bit_depth);
            nlohmann::json rec;
            rec["input"] = files[i].filename().string();
            rec["output"] = rel.generic_string();
            rec["sha256"] = sha256_file(out_path);
            rec["degrade_seed"] = d.seed;
            records[i] = std::move(rec);
            ok[i] = 1;
        });
        for (std::size_t i = 0; i < files.size(); ++i)
            if (ok[i]) sample["images"].push_back(records[i]);
        manifest["samples"].push_back(std::move(sample));
    }

    auto manifest_path = out_dir / "manifest.json";
    write_text_atomic(manifest_path, manifest.dump(1) + "\n");
    return manifest_path;
}

} // namespace palsim
