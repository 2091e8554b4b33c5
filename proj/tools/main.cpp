#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "palsim/checker.hpp"
#include "palsim/container.hpp"
#include "palsim/diffraction.hpp"
#include "palsim/error.hpp"
#include "palsim/manifest.hpp"
#include "palsim/metrics.hpp"
#include "palsim/net/part.hpp"
#include "palsim/parallel.hpp"
#include "palsim/png_io.hpp"
#include "palsim/prescription.hpp"
#include "palsim/psf_stack.hpp"
#include "palsim/psfmap.hpp"
#include "palsim/sfr.hpp"
#include "palsim/simulate.hpp"
#include "palsim/wiener.hpp"
#include "plot_render.hpp"

namespace fs = std::filesystem;
using namespace palsim;

namespace {

struct GeometryFlags {
    double cx = -1.0, cy = -1.0, r_blind = -1.0, r_max = -1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--center-x", cx, "Annulus center x (default: image center)");
        cmd->add_option("--center-y", cy, "Annulus center y (default: image center)");
        cmd->add_option("--r-blind", r_blind, "Blind-area radius in pixels (default 0)");
        cmd->add_option("--r-max", r_max, "Outer annulus radius (default min(H,W)/2)");
    }
    AnnularGeometry resolve(int height, int width) const {
        AnnularGeometry g = AnnularGeometry::full(height, width);
        if (cx >= 0.0) g.cx = cx;
        if (cy >= 0.0) g.cy = cy;
        if (r_blind >= 0.0) g.r_blind = r_blind;
        if (r_max > 0.0) g.r_max = r_max;
        return g;
    }
};

AnnularImage load_image_any(const fs::path& path, const GeometryFlags& flags) {
    AnnularImage img;
    if (path.extension() == ".bin") {
        img = load_image_tensor(path);
        AnnularGeometry g = flags.resolve(img.pixels.height, img.pixels.width);
        if (flags.cx >= 0.0 || flags.cy >= 0.0 || flags.r_blind >= 0.0 || flags.r_max > 0.0)
            img.geometry = g;
    } else {
        img.pixels = read_png(path);
        img.geometry = flags.resolve(img.pixels.height, img.pixels.width);
    }
    img.geometry.validate(img.pixels.height, img.pixels.width);
    return img;
}

void save_image_any(const fs::path& path, const AnnularImage& img, int bit_depth) {
    if (path.extension() == ".bin") save_image_tensor(path, img);
    else write_png(path, img.pixels, bit_depth);
}

PipelineMode parse_mode(const std::string& mode) {
    if (mode == "ac") return PipelineMode::AC;
    if (mode == "srac") return PipelineMode::SRAC;
    throw CLI::ValidationError("--mode", "must be 'ac' or 'srac'");
}

std::vector<std::pair<fs::path, std::string>> read_patch_list(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open patch list: " + path.string());
    std::vector<std::pair<fs::path, std::string>> items;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto comma = line.find(',');
        fs::path p = line.substr(0, comma);
        std::string label =
            comma == std::string::npos ? p.stem().string() : line.substr(comma + 1);
        if (p.is_relative()) p = path.parent_path() / p;
        items.emplace_back(p, label);
    }
    if (items.empty()) throw data_error("patch list is empty: " + path.string());
    return items;
}

void write_csv(const fs::path& path, const std::string& content) {
    write_text_atomic(path, content);
}

// ---- psf ----------------------------------------------------------------

int cmd_psf_synth(const fs::path& prescription_path, const fs::path& sensor_path,
                  const fs::path& out, int pupil_samples, int pad, int threads) {
    OpticalPrescription p = load_prescription(prescription_path);
    SensorModel sensor = load_sensor(sensor_path, p.zernike.lambdas_nm);
    SynthesisOptions opt;
    opt.pupil_samples = pupil_samples;
    opt.pad_factor = pad;
    opt.threads = threads;
    PsfStack stack = synthesize_psf_stack(p, sensor, opt);
    save_psf_stack(out, stack);
    write_run_manifest(fs::path(out.string() + ".manifest.json"), "psf synth",
                       {{"prescription", prescription_path.filename().string()},
                        {"sensor", sensor_path.filename().string()},
                        {"pupil_samples", pupil_samples},
                        {"pad_factor", pad}},
                       {out});
    std::cout << "wrote " << out.string() << " (" << stack.n_fov() << " fovs x "
              << stack.n_lambda() << " wavelengths, max kernel " << stack.max_kernel_size()
              << " px)\n";
    return 0;
}

int cmd_psf_perturb(const fs::path& prescription_path, double range, uint64_t seed,
                    const fs::path& out) {
    OpticalPrescription p = load_prescription(prescription_path);
    OpticalPrescription q = perturb(p, range, seed);
    save_prescription(out, q);
    write_run_manifest(fs::path(out.string() + ".manifest.json"), "psf perturb",
                       {{"prescription", prescription_path.filename().string()},
                        {"range_fraction", range},
                        {"seed", seed}},
                       {out});
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_psf_preset(const std::string& kind, int n_lambda, int n_fov, uint64_t seed,
                   const fs::path& out) {
    SyntheticPrescriptionParams params;
    params.n_lambda = n_lambda;
    params.n_fov = n_fov;
    params.seed = seed;
    if (kind == "p1") params.mean_spot_radius_um = 13.78;
    else if (kind == "p2") {
        params.mean_spot_radius_um = 46.26;
        params.aberration_scale = 2.0;
    } else throw CLI::ValidationError("--kind", "must be 'p1' or 'p2'");
    save_prescription(out, make_synthetic_prescription(params));
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_sensor_preset(const std::string& kind, const fs::path& out) {
    std::vector<double> lambdas(31);
    for (int i = 0; i < 31; ++i) lambdas[static_cast<std::size_t>(i)] = 400.0 + 10.0 * i;
    SensorModel sensor;
    if (kind == "small-pitch") sensor = sensor_preset_small_pitch(lambdas);
    else if (kind == "large-pitch") sensor = sensor_preset_large_pitch(lambdas);
    else throw CLI::ValidationError("--kind", "must be 'small-pitch' or 'large-pitch'");
    ResponseModel model;
    save_sensor(out, sensor, &model);
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

// ---- sim ----------------------------------------------------------------

int cmd_sim_run(const fs::path& image_path, const fs::path& prescription_path,
                const fs::path& sensor_path, const fs::path& stack_path, const fs::path& out,
                const std::string& mode, uint64_t seed, int rings, int sectors, bool no_noise,
                const GeometryFlags& geom, int pupil_samples, int threads, int bits) {
    OpticalPrescription p = load_prescription(prescription_path);
    SensorModel sensor = load_sensor(sensor_path, p.zernike.lambdas_nm);
    PsfStack stack;
    if (!stack_path.empty()) stack = load_psf_stack(stack_path);
    else {
        SynthesisOptions opt;
        opt.pupil_samples = pupil_samples;
        opt.threads = threads;
        stack = synthesize_psf_stack(p, sensor, opt);
    }
    AnnularImage hq = load_image_any(image_path, geom);
    FovPartition part = partition(hq.geometry, rings);
    DegradeOptions opt;
    opt.mode = parse_mode(mode);
    opt.n_sectors = sectors;
    opt.seed = seed;
    opt.mosaic_noise = !no_noise;
    opt.threads = threads;
    AnnularImage degraded = degrade(hq, stack, sensor, part, opt);
    save_image_any(out, degraded, bits);
    write_run_manifest(fs::path(out.string() + ".manifest.json"), "sim run",
                       {{"image", image_path.filename().string()},
                        {"mode", mode},
                        {"seed", seed},
                        {"rings", rings},
                        {"sectors", sectors},
                        {"noise", !no_noise}},
                       {out});
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_sim_dataset(const fs::path& hq_dir, const fs::path& prescription_path,
                    const fs::path& sensor_path, const fs::path& out_dir, int n_virtual,
                    double range, uint64_t seed, const std::string& mode, int rings, int sectors,
                    bool no_noise, int pupil_samples, int threads) {
    OpticalPrescription p = load_prescription(prescription_path);
    SensorModel sensor = load_sensor(sensor_path, p.zernike.lambdas_nm);
    DatasetParams params;
    params.n_virtual = n_virtual;
    params.range_fraction = range;
    params.seed = seed;
    params.mode = parse_mode(mode);
    params.n_rings = rings;
    params.n_sectors = sectors;
    params.mosaic_noise = !no_noise;
    params.synthesis.pupil_samples = pupil_samples;
    params.threads = threads;
    auto manifest = make_dataset(hq_dir, p, sensor, out_dir, params);
    std::cout << "wrote " << manifest.string() << "\n";
    return 0;
}

// ---- psfmap ---------------------------------------------------------------

int cmd_psfmap_build(const fs::path& stack_path, const fs::path& out, int k_prime,
                     const std::string& channel, int height, int width,
                     const GeometryFlags& geom, int downscale, int threads) {
    PsfStack stack = load_psf_stack(stack_path);
    PsfMapChannel ch;
    if (channel == "r") ch = PsfMapChannel::R;
    else if (channel == "g") ch = PsfMapChannel::G;
    else if (channel == "b") ch = PsfMapChannel::B;
    else if (channel == "luma") ch = PsfMapChannel::Luma;
    else throw CLI::ValidationError("--channel", "must be r, g, b, or luma");
    AnnularGeometry g = geom.resolve(height, width);
    PsfMap map = build_psf_map(stack, g, height, width, k_prime, ch, threads);
    if (downscale > 1) map = downscale_map(map, downscale);
    save_psf_map(out, map);
    write_run_manifest(fs::path(out.string() + ".manifest.json"), "psfmap build",
                       {{"stack", stack_path.filename().string()},
                        {"k_prime", k_prime},
                        {"channel", channel},
                        {"height", height},
                        {"width", width},
                        {"downscale", downscale}},
                       {out});
    std::cout << "wrote " << out.string() << " (" << map.data.height << "x" << map.data.width
              << "x" << map.data.channels << ")\n";
    return 0;
}

// ---- recover --------------------------------------------------------------

int cmd_recover_wiener(const fs::path& image_path, const fs::path& stack_path,
                       const fs::path& sensor_path, const fs::path& out, double nsr, int rings,
                       int sectors, const GeometryFlags& geom, int threads, int bits) {
    PsfStack stack = load_psf_stack(stack_path);
    SensorModel sensor = load_sensor(sensor_path, stack.lambdas_nm);
    AnnularImage img = load_image_any(image_path, geom);
    FovPartition part = partition(img.geometry, rings);
    WienerOptions opt;
    opt.nsr = nsr;
    opt.n_sectors = sectors;
    opt.threads = threads;
    AnnularImage recovered = wiener_image(img, stack, sensor, part, opt);
    save_image_any(out, recovered, bits);
    write_run_manifest(fs::path(out.string() + ".manifest.json"), "recover wiener",
                       {{"image", image_path.filename().string()},
                        {"nsr", nsr},
                        {"rings", rings},
                        {"sectors", sectors}},
                       {out});
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_recover_part(const fs::path& image_path, const fs::path& map_path,
                     const fs::path& config_path, const fs::path& weights_path,
                     const fs::path& out, uint64_t seed, const fs::path& save_weights,
                     const GeometryFlags& geom, int threads, int bits) {
    net::PartConfig config;
    net::PartWeights weights;
    if (!weights_path.empty()) {
        weights = net::PartWeights::load(weights_path, config);
    } else {
        if (!config_path.empty()) config = net::part_config_from_json_text(read_text(config_path));
        weights = net::PartWeights::init(config, seed);
    }
    if (!save_weights.empty()) weights.save(save_weights, config);

    AnnularImage img = load_image_any(image_path, geom);
    PsfMap map = load_psf_map(map_path);
    int r = config.unshuffle_factor();
    if (map.data.height == img.pixels.height && r > 1) map = downscale_map(map, r);

    net::PartRunInfo info;
    AnnularImage recovered = net::part_forward(img, map, config, weights, &info, threads);
    save_image_any(out, recovered, bits);
    write_run_manifest(fs::path(out.string() + ".manifest.json"), "recover part",
                       {{"image", image_path.filename().string()},
                        {"map", map_path.filename().string()},
                        {"seed", seed},
                        {"mode", config.mode == net::TaskMode::AC ? "ac" : "srac"},
                        {"feature_resolution",
                         {info.feature_height, info.feature_width}}},
                       {out});
    std::cout << "wrote " << out.string() << " (representation " << info.feature_height << "x"
              << info.feature_width << ")\n";
    return 0;
}

// ---- eval -----------------------------------------------------------------

int cmd_eval_metrics(const fs::path& test_path, const fs::path& ref_path,
                     const GeometryFlags& geom, const fs::path& csv_out) {
    GeometryFlags none;
    AnnularImage test = load_image_any(test_path, none);
    AnnularImage ref = load_image_any(ref_path, none);
    MetricMask mask;
    const MetricMask* mask_ptr = nullptr;
    if (geom.r_max > 0.0 || geom.r_blind >= 0.0) {
        AnnularGeometry g = geom.resolve(test.pixels.height, test.pixels.width);
        mask = annulus_mask(g, test.pixels.height, test.pixels.width);
        mask_ptr = &mask;
    }
    double p = psnr(test.pixels, ref.pixels, mask_ptr);
    double s = ssim(test.pixels, ref.pixels, mask_ptr);
    std::cout << "psnr_db=" << p << " ssim=" << s << "\n";
    if (!csv_out.empty())
        write_csv(csv_out, "psnr_db,ssim\n" + std::to_string(p) + "," + std::to_string(s) + "\n");
    return 0;
}

int cmd_eval_sfr(const fs::path& list_path, const fs::path& out_prefix, int oversample) {
    auto items = read_patch_list(list_path);
    std::ostringstream curves_csv, summary_csv;
    curves_csv << "label,frequency,mtf\n";
    summary_csv << "label,mtf50,mtf_area\n";
    GeometryFlags none;
    for (const auto& [path, label] : items) {
        AnnularImage patch = load_image_any(path, none);
        MtfCurve curve = sfr(patch.pixels, oversample);
        for (std::size_t i = 0; i < curve.frequencies.size(); ++i)
            curves_csv << label << "," << curve.frequencies[i] << "," << curve.values[i] << "\n";
        summary_csv << label << "," << mtf50(curve) << "," << mtf_area(curve) << "\n";
    }
    fs::path curves_path(out_prefix.string() + "_curves.csv");
    fs::path summary_path(out_prefix.string() + "_summary.csv");
    write_csv(curves_path, curves_csv.str());
    write_csv(summary_path, summary_csv.str());
    std::cout << "wrote " << curves_path.string() << " and " << summary_path.string() << "\n";
    return 0;
}

struct SummaryRows {
    std::vector<double> mtf50s, areas;
};

SummaryRows read_summary_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open summary csv: " + path.string());
    SummaryRows rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        auto c1 = line.find(',');
        auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw data_error("bad summary row in " + path.string() + ": " + line);
        rows.mtf50s.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
        rows.areas.push_back(std::stod(line.substr(c2 + 1)));
    }
    if (rows.mtf50s.empty()) throw data_error("summary csv has no rows: " + path.string());
    return rows;
}

// Reference for a diffraction-limited system: the zero-aberration PSF at the
// sensor pitch applied to an ideal slanted edge, measured with the same SFR
// pipeline.
SummaryRows diffraction_limited_reference(double pitch_um, double d_mm, double pupil_mm) {
    ZernikeGrid g;
    g.lambdas_nm = {550.0};
    g.fovs = {1.0};
    g.n_poly = 1;
    g.coeffs.assign(1, 0.0);
    PhaseMap phase = wavefront(g, 0, 0, 256);
    Kernel k = psf_on_sensor_pitch(phase, 550.0, d_mm, pupil_mm, 15, pitch_um);

    const int h = 120, w = 80;
    Image edge(h, w, 1);
    double slope = std::tan(5.0 * M_PI / 180.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            edge.at(y, x, 0) = (x - (0.5 * w + slope * y)) >= 0.0 ? 1.0f : 0.0f;
    Image blurred(h, w, 1);
    const int half = k.size / 2;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int u = 0; u < k.size; ++u)
                for (int v = 0; v < k.size; ++v) {
                    int yy = std::clamp(y + half - u, 0, h - 1);
                    int xx = std::clamp(x + half - v, 0, w - 1);
                    acc += k.at(u, v) * edge.at(yy, xx, 0);
                }
            blurred.at(y, x, 0) = static_cast<float>(acc);
        }
    MtfCurve curve = sfr(blurred, 4);
    SummaryRows rows;
    rows.mtf50s.push_back(mtf50(curve));
    rows.areas.push_back(mtf_area(curve));
    return rows;
}

int cmd_eval_oiqe(const fs::path& test_csv, const fs::path& ref_csv, const fs::path& out_csv,
                  bool diffraction_ref, double pitch_um, double d_mm, double pupil_mm) {
    SummaryRows test = read_summary_csv(test_csv);
    SummaryRows ref = diffraction_ref
                          ? diffraction_limited_reference(pitch_um, d_mm, pupil_mm)
                          : read_summary_csv(ref_csv);
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    OiqeResult r;
    r.oiqe50 = mean(test.mtf50s) / mean(ref.mtf50s);
    r.oiqe_area = mean(test.areas) / mean(ref.areas);
    r.oiqe = 0.5 * (r.oiqe50 + r.oiqe_area);
    std::cout << "oiqe50=" << r.oiqe50 * 100.0 << "% oiqe_area=" << r.oiqe_area * 100.0
              << "% oiqe=" << r.oiqe * 100.0 << "%\n";
    if (!out_csv.empty())
        write_csv(out_csv, "oiqe50,oiqe_area,oiqe\n" + std::to_string(r.oiqe50) + "," +
                               std::to_string(r.oiqe_area) + "," + std::to_string(r.oiqe) + "\n");
    return 0;
}

int cmd_eval_checker_gt(const fs::path& image_path, const fs::path& out, int bits) {
    GeometryFlags none;
    AnnularImage img = load_image_any(image_path, none);
    CheckerGt gt = checker_gt(img.pixels);
    if (gt.degenerate)
        std::cerr << "warning: single-region patch, returned unchanged\n";
    AnnularImage result;
    result.pixels = gt.binary;
    result.geometry = img.geometry;
    save_image_any(out, result, bits);
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

// ---- plot -----------------------------------------------------------------

int cmd_plot_mtf(const fs::path& curves_csv, const fs::path& out) {
    std::ifstream in(curves_csv);
    if (!in) throw data_error("cannot open curves csv: " + curves_csv.string());
    std::map<std::string, MtfCurve> curves;
    std::vector<std::string> order;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        auto c1 = line.find(',');
        auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw data_error("bad curve row: " + line);
        std::string label = line.substr(0, c1);
        if (curves.find(label) == curves.end()) order.push_back(label);
        curves[label].frequencies.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
        curves[label].values.push_back(std::stod(line.substr(c2 + 1)));
    }
    if (curves.empty()) throw data_error("no curves in " + curves_csv.string());
    std::vector<MtfCurve> list;
    for (const auto& label : order) list.push_back(curves[label]);
    Image img = plotting::render_curves(list);
    write_png(out, img, 8);
    // the underlying data rides along next to the plot
    fs::path csv_copy(out.string() + ".csv");
    write_text_atomic(csv_copy, read_text(curves_csv));
    std::cout << "wrote " << out.string() << " and " << csv_copy.string() << "\n";
    return 0;
}

int cmd_plot_psf(const fs::path& stack_path, const fs::path& out, int n_cells) {
    PsfStack stack = load_psf_stack(stack_path);
    std::vector<Kernel> cells;
    std::ostringstream csv;
    csv << "fov,kernel_size\n";
    int n = std::min(n_cells, stack.n_fov());
    for (int i = 0; i < n; ++i) {
        int f = n == 1 ? 0 : static_cast<int>(std::lround(
                                 static_cast<double>(i) * (stack.n_fov() - 1) / (n - 1)));
        cells.push_back(stack.per_channel[static_cast<std::size_t>(f)][1]);
        csv << stack.fovs[static_cast<std::size_t>(f)] << ","
            << stack.kernel_sizes[static_cast<std::size_t>(f)] << "\n";
    }
    Image img = plotting::render_kernel_grid(cells, std::min(8, n));
    write_png(out, img, 8);
    fs::path csv_path(out.string() + ".csv");
    write_text_atomic(csv_path, csv.str());
    std::cout << "wrote " << out.string() << " and " << csv_path.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Panoramic annular lens imaging simulation and recovery toolkit"};
    int rc = 0;
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand
    int threads = default_thread_count();
    app.add_option("--threads", threads, "Worker threads (default: PALSIM_THREADS or cores)");

    // psf
    auto* psf = app.add_subcommand("psf", "PSF stacks and prescriptions");
    psf->require_subcommand(1);

    fs::path a_prescription, a_sensor, a_out, a_stack, a_image, a_map, a_config, a_weights;
    fs::path a_save_weights, a_hq, a_ref, a_csv, a_list, a_prefix;
    uint64_t a_seed = 0;
    double a_range = 0.25, a_nsr = 1e-3;
    int a_pupil = 512, a_pad = 2, a_rings = 128, a_sectors = 16, a_bits = 16;
    int a_kprime = 5, a_height = 0, a_width = 0, a_downscale = 1, a_oversample = 4;
    int a_nvirtual = 10, a_cells = 8;
    std::string a_mode = "ac", a_kind = "p1", a_channel = "g";
    bool a_no_noise = false;
    GeometryFlags geom;

    auto* synth = psf->add_subcommand("synth", "Synthesize a PSF stack");
    synth->add_option("--prescription", a_prescription, "Prescription file")->required();
    synth->add_option("--sensor", a_sensor, "Sensor profile")->required();
    synth->add_option("--out", a_out, "Output stack (.bin)")->required();
    synth->add_option("--pupil-samples", a_pupil, "Pupil grid size (power of two)");
    synth->add_option("--pad", a_pad, "Zero-padding factor");
    synth->callback([&] { rc = cmd_psf_synth(a_prescription, a_sensor, a_out, a_pupil, a_pad, threads); });

    auto* pert = psf->add_subcommand("perturb", "Randomly perturb Zernike coefficients");
    pert->add_option("--prescription", a_prescription)->required();
    pert->add_option("--range", a_range, "Relative disturbance range (default 0.25)");
    pert->add_option("--seed", a_seed)->required();
    pert->add_option("--out", a_out)->required();
    pert->callback([&] { rc = cmd_psf_perturb(a_prescription, a_range, a_seed, a_out); });

    auto* preset = psf->add_subcommand("preset", "Write a synthetic prescription preset");
    int preset_nlambda = 31, preset_nfov = 128;
    preset->add_option("--kind", a_kind, "p1 (13.78 um spots) or p2 (46.26 um)");
    preset->add_option("--n-lambda", preset_nlambda, "Wavelength count");
    preset->add_option("--n-fov", preset_nfov, "FoV count");
    preset->add_option("--seed", a_seed, "Jitter seed");
    preset->add_option("--out", a_out)->required();
    preset->callback([&] { rc = cmd_psf_preset(a_kind, preset_nlambda, preset_nfov, a_seed, a_out); });

    // sensor
    auto* sensor_cmd = app.add_subcommand("sensor", "Sensor profiles");
    sensor_cmd->require_subcommand(1);
    auto* spreset = sensor_cmd->add_subcommand("preset", "Write a sensor profile preset");
    spreset->add_option("--kind", a_kind, "small-pitch (1.34 um) or large-pitch (4 um)")
        ->default_val("small-pitch");
    spreset->add_option("--out", a_out)->required();
    spreset->callback([&] { rc = cmd_sensor_preset(a_kind, a_out); });

    // sim
    auto* sim = app.add_subcommand("sim", "Imaging simulation");
    sim->require_subcommand(1);

    auto* run = sim->add_subcommand("run", "Degrade one image");
    run->add_option("--image", a_image)->required();
    run->add_option("--prescription", a_prescription)->required();
    run->add_option("--sensor", a_sensor)->required();
    run->add_option("--stack", a_stack, "Reuse a synthesized stack");
    run->add_option("--out", a_out)->required();
    run->add_option("--mode", a_mode, "ac or srac");
    run->add_option("--seed", a_seed);
    run->add_option("--rings", a_rings);
    run->add_option("--sectors", a_sectors);
    run->add_option("--pupil-samples", a_pupil);
    run->add_option("--png-bits", a_bits);
    run->add_flag("--no-noise", a_no_noise, "Disable mosaic and noise");
    geom.attach(run);
    run->callback([&] {
        rc = cmd_sim_run(a_image, a_prescription, a_sensor, a_stack, a_out, a_mode, a_seed,
                         a_rings, a_sectors, a_no_noise, geom, a_pupil, threads, a_bits);
    });

    auto* dataset = sim->add_subcommand("dataset", "Generate virtual-prototype datasets");
    dataset->add_option("--hq", a_hq, "Directory of clean PNG images")->required();
    dataset->add_option("--prescription", a_prescription)->required();
    dataset->add_option("--sensor", a_sensor)->required();
    dataset->add_option("--out", a_out)->required();
    dataset->add_option("--n-virtual", a_nvirtual);
    dataset->add_option("--range", a_range);
    dataset->add_option("--seed", a_seed)->required();
    dataset->add_option("--mode", a_mode);
    dataset->add_option("--rings", a_rings);
    dataset->add_option("--sectors", a_sectors);
    dataset->add_option("--pupil-samples", a_pupil);
    dataset->add_flag("--no-noise", a_no_noise);
    dataset->callback([&] {
        rc = cmd_sim_dataset(a_hq, a_prescription, a_sensor, a_out, a_nvirtual, a_range, a_seed,
                             a_mode, a_rings, a_sectors, a_no_noise, a_pupil, threads);
    });

    // psfmap
    auto* psfmap_cmd = app.add_subcommand("psfmap", "PSF-map modality");
    psfmap_cmd->require_subcommand(1);
    auto* build = psfmap_cmd->add_subcommand("build", "Build the aligned PSF map");
    build->add_option("--stack", a_stack)->required();
    build->add_option("--out", a_out)->required();
    build->add_option("--k-prime", a_kprime);
    build->add_option("--channel", a_channel, "r, g, b, or luma");
    build->add_option("--height", a_height)->required();
    build->add_option("--width", a_width)->required();
    build->add_option("--downscale", a_downscale, "Area-average factor after building");
    geom.attach(build);
    build->callback([&] {
        rc = cmd_psfmap_build(a_stack, a_out, a_kprime, a_channel, a_height, a_width, geom,
                              a_downscale, threads);
    });

    // recover
    auto* recover = app.add_subcommand("recover", "Image recovery");
    recover->require_subcommand(1);

    auto* wiener_cmd = recover->add_subcommand("wiener", "Non-blind Wiener deconvolution");
    wiener_cmd->add_option("--image", a_image)->required();
    wiener_cmd->add_option("--stack", a_stack)->required();
    wiener_cmd->add_option("--sensor", a_sensor)->required();
    wiener_cmd->add_option("--out", a_out)->required();
    wiener_cmd->add_option("--nsr", a_nsr, "Noise-to-signal ratio (default 1e-3)");
    wiener_cmd->add_option("--rings", a_rings);
    wiener_cmd->add_option("--sectors", a_sectors);
    wiener_cmd->add_option("--png-bits", a_bits);
    geom.attach(wiener_cmd);
    wiener_cmd->callback([&] {
        rc = cmd_recover_wiener(a_image, a_stack, a_sensor, a_out, a_nsr, a_rings, a_sectors,
                                geom, threads, a_bits);
    });

    auto* part_cmd = recover->add_subcommand("part", "PSF-aware transformer forward pass");
    part_cmd->add_option("--image", a_image)->required();
    part_cmd->add_option("--map", a_map, "PSF map tensor")->required();
    part_cmd->add_option("--out", a_out)->required();
    part_cmd->add_option("--config", a_config, "Model config JSON");
    part_cmd->add_option("--weights", a_weights, "Weight file (overrides --config)");
    part_cmd->add_option("--seed", a_seed, "Weight init seed when no file is given");
    part_cmd->add_option("--save-weights", a_save_weights, "Persist the weights in use");
    part_cmd->add_option("--png-bits", a_bits);
    geom.attach(part_cmd);
    part_cmd->callback([&] {
        rc = cmd_recover_part(a_image, a_map, a_config, a_weights, a_out, a_seed, a_save_weights,
                              geom, threads, a_bits);
    });

    // eval
    auto* eval = app.add_subcommand("eval", "Quality evaluation");
    eval->require_subcommand(1);

    auto* metrics = eval->add_subcommand("metrics", "PSNR and SSIM");
    metrics->add_option("--test", a_image)->required();
    metrics->add_option("--ref", a_ref)->required();
    metrics->add_option("--csv", a_csv, "Optional CSV output");
    geom.attach(metrics);
    metrics->callback([&] { rc = cmd_eval_metrics(a_image, a_ref, geom, a_csv); });

    auto* sfr_cmd = eval->add_subcommand("sfr", "Slanted-edge MTF measurement");
    sfr_cmd->add_option("--patches", a_list, "Patch list file: path[,label] per line")
        ->required();
    sfr_cmd->add_option("--out-prefix", a_prefix)->required();
    sfr_cmd->add_option("--oversample", a_oversample);
    sfr_cmd->callback([&] { rc = cmd_eval_sfr(a_list, a_prefix, a_oversample); });

    auto* oiqe_cmd = eval->add_subcommand("oiqe", "MTF ratios against a reference system");
    bool a_diff_ref = false;
    double a_pitch = 1.34, a_dist = 10.0, a_pupil_mm = 1.5;
    oiqe_cmd->add_option("--test", a_image, "Test summary CSV")->required();
    auto* ref_opt = oiqe_cmd->add_option("--ref", a_ref, "Reference summary CSV");
    oiqe_cmd->add_flag("--ref-diffraction-limited", a_diff_ref,
                       "Use a simulated diffraction-limited system as the reference");
    oiqe_cmd->add_option("--pitch-um", a_pitch, "Pixel pitch for the simulated reference");
    oiqe_cmd->add_option("--d-mm", a_dist, "Exit pupil distance for the simulated reference");
    oiqe_cmd->add_option("--pupil-mm", a_pupil_mm, "Pupil radius for the simulated reference");
    oiqe_cmd->add_option("--csv", a_csv, "Optional CSV output");
    ref_opt->excludes("--ref-diffraction-limited");
    oiqe_cmd->callback([&] {
        if (a_ref.empty() && !a_diff_ref)
            throw CLI::RequiredError("--ref or --ref-diffraction-limited");
        rc = cmd_eval_oiqe(a_image, a_ref, a_csv, a_diff_ref, a_pitch, a_dist, a_pupil_mm);
    });

    auto* checker = eval->add_subcommand("checker-gt", "Checkerboard ground-truth generation");
    checker->add_option("--image", a_image)->required();
    checker->add_option("--out", a_out)->required();
    checker->add_option("--png-bits", a_bits);
    checker->callback([&] { rc = cmd_eval_checker_gt(a_image, a_out, a_bits); });

    // plot
    auto* plot = app.add_subcommand("plot", "Plots with their CSV data");
    plot->require_subcommand(1);

    auto* mtf_plot = plot->add_subcommand("mtf", "Render MTF curves");
    mtf_plot->add_option("--curves", a_csv, "Curves CSV from eval sfr")->required();
    mtf_plot->add_option("--out", a_out)->required();
    mtf_plot->callback([&] { rc = cmd_plot_mtf(a_csv, a_out); });

    auto* psf_plot = plot->add_subcommand("psf", "Render a PSF grid");
    psf_plot->add_option("--stack", a_stack)->required();
    psf_plot->add_option("--out", a_out)->required();
    psf_plot->add_option("--cells", a_cells, "Number of FoV samples");
    psf_plot->callback([&] { rc = cmd_plot_psf(a_stack, a_out, a_cells); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const argument_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const measurement_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}
