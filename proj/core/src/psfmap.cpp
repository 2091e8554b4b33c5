#include "palsim/psfmap.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "palsim/container.hpp"
#include "palsim/error.hpp"
#include "palsim/parallel.hpp"

namespace palsim {

Kernel compress_kernel(const Kernel& k, int k_prime, int pad_to) {
    if (k_prime < 1 || k_prime % 2 == 0)
        throw argument_error("compress_kernel: k_prime must be odd and positive");
    if (pad_to < k.size) throw argument_error("compress_kernel: pad size below kernel size");

    // Zero-padding is symmetric (sizes share parity since kernel sizes are
    // odd); bins cover equal extents of the padded grid with fractional edge
    // weights.
    const int pad = (pad_to - k.size) / 2;
    auto padded_at = [&](int y, int x) -> double {
        int yy = y - pad, xx = x - pad;
        if (yy < 0 || yy >= k.size || xx < 0 || xx >= k.size) return 0.0;
        return k.at(yy, xx);
    };

    const double bin = static_cast<double>(pad_to) / k_prime;
    Kernel out(k_prime);
    for (int by = 0; by < k_prime; ++by) {
        double y_lo = by * bin, y_hi = (by + 1) * bin;
        for (int bx = 0; bx < k_prime; ++bx) {
            double x_lo = bx * bin, x_hi = (bx + 1) * bin;
            double acc = 0.0;
            for (int y = static_cast<int>(std::floor(y_lo)); y < pad_to && y < y_hi; ++y) {
                double wy = std::min<double>(y + 1, y_hi) - std::max<double>(y, y_lo);
                if (wy <= 0.0) continue;
                for (int x = static_cast<int>(std::floor(x_lo)); x < pad_to && x < x_hi; ++x) {
                    double wx = std::min<double>(x + 1, x_hi) - std::max<double>(x, x_lo);
                    if (wx <= 0.0) continue;
                    acc += wy * wx * padded_at(y, x);
                }
            }
            out.at(by, bx) = acc / (bin * bin); // area mean
        }
    }
    double s = out.sum();
    if (s > 0.0)
        for (double& v : out.data) v /= s;
    return out;
}

PsfMap build_psf_map(const PsfStack& stack, const AnnularGeometry& geometry, int height,
                     int width, int k_prime, PsfMapChannel channel, int threads) {
    stack.validate();
    geometry.validate(height, width);
    if (k_prime < 1 || k_prime % 2 == 0)
        throw argument_error("build_psf_map: k_prime must be odd and positive");

    const int max_k = stack.max_kernel_size();
    const int n_int = k_prime * k_prime;

    PsfMap map;
    map.k_prime = k_prime;
    map.geometry = geometry;
    map.data = Image(height, width, n_int + 3);

    auto source_kernel = [&](int f) {
        const auto& per_channel = stack.per_channel[static_cast<std::size_t>(f)];
        switch (channel) {
            case PsfMapChannel::R: return per_channel[0];
            case PsfMapChannel::G: return per_channel[1];
            case PsfMapChannel::B: return per_channel[2];
            case PsfMapChannel::Luma: {
                Kernel k(per_channel[0].size);
                for (std::size_t i = 0; i < k.data.size(); ++i)
                    k.data[i] = 0.299 * per_channel[0].data[i] + 0.587 * per_channel[1].data[i] +
                                0.114 * per_channel[2].data[i];
                kernels::normalize(k);
                return k;
            }
        }
        return per_channel[1];
    };

    parallel_for(static_cast<std::size_t>(height), threads, [&](std::size_t row) {
        int y = static_cast<int>(row);
        for (int x = 0; x < width; ++x) {
            double r = geometry.radius(x, y);
            int f;
            double az;
            if (r < geometry.r_blind) {
                f = 0;
                az = 0.0;
            } else {
                f = stack.fov_index_for(std::clamp(r / geometry.r_max, 0.0, 1.0));
                az = geometry.azimuth(x, y);
            }
            Kernel k = source_kernel(f);
            if (az != 0.0) k = kernels::rotate(k, az);
            Kernel compressed = compress_kernel(k, k_prime, max_k);
            for (int i = 0; i < n_int; ++i)
                map.data.at(y, x, i) = static_cast<float>(compressed.data[static_cast<std::size_t>(i)]);
            double size_norm =
                static_cast<double>(stack.kernel_sizes[static_cast<std::size_t>(f)]) / max_k;
            for (int c = 0; c < 3; ++c)
                map.data.at(y, x, n_int + c) = static_cast<float>(size_norm);
        }
    });
    return map;
}

PsfMap downscale_map(const PsfMap& map, int factor) {
    if (factor < 1) throw argument_error("downscale_map: factor must be >= 1");
    if (factor == 1) return map;
    if (map.data.height % factor != 0 || map.data.width % factor != 0)
        throw argument_error("downscale_map: dimensions must divide by the factor");

    const int oh = map.data.height / factor, ow = map.data.width / factor;
    const int ch = map.data.channels;
    const int n_int = map.intensity_channels();

    PsfMap out;
    out.k_prime = map.k_prime;
    out.geometry = map.geometry;
    out.geometry.cx = (map.geometry.cx - 0.5 * (factor - 1)) / factor;
    out.geometry.cy = (map.geometry.cy - 0.5 * (factor - 1)) / factor;
    out.geometry.r_blind = map.geometry.r_blind / factor;
    out.geometry.r_max = map.geometry.r_max / factor;
    out.data = Image(oh, ow, ch);

    const double inv_area = 1.0 / (static_cast<double>(factor) * factor);
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
            double sum_int = 0.0;
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int dy = 0; dy < factor; ++dy)
                    for (int dx = 0; dx < factor; ++dx)
                        acc += map.data.at(oy * factor + dy, ox * factor + dx, c);
                acc *= inv_area;
                out.data.at(oy, ox, c) = static_cast<float>(acc);
                if (c < n_int) sum_int += acc;
            }
            if (sum_int > 0.0)
                for (int c = 0; c < n_int; ++c)
                    out.data.at(oy, ox, c) = static_cast<float>(out.data.at(oy, ox, c) / sum_int);
        }
    return out;
}

void save_psf_map(const std::filesystem::path& path, const PsfMap& map) {
    nlohmann::json header = {
        {"format", "palsim-tensor"},
        {"kind", "psf_map"},
        {"dtype", "f32le"},
        {"height", map.data.height},
        {"width", map.data.width},
        {"channels", map.data.channels},
        {"k_prime", map.k_prime},
        {"geometry", {{"cx", map.geometry.cx},
                      {"cy", map.geometry.cy},
                      {"r_blind", map.geometry.r_blind},
                      {"r_max", map.geometry.r_max}}},
    };
    save_tensor(path, header, map.data.data);
}

PsfMap load_psf_map(const std::filesystem::path& path) {
    std::vector<float> blob;
    nlohmann::json header = load_tensor(path, blob);
    if (header.value("kind", "") != "psf_map")
        throw data_error("not a psf map: " + path.string());
    PsfMap map;
    map.k_prime = header.at("k_prime").get<int>();
    map.data.height = header.at("height").get<int>();
    map.data.width = header.at("width").get<int>();
    map.data.channels = header.at("channels").get<int>();
    if (map.data.channels != map.k_prime * map.k_prime + 3)
        throw data_error("psf map channel count mismatch: " + path.string());
    std::size_t expect = static_cast<std::size_t>(map.data.height) * map.data.width *
                         map.data.channels;
    if (blob.size() != expect) throw data_error("psf map blob size mismatch: " + path.string());
    map.data.data = std::move(blob);
    const auto& g = header.at("geometry");
    map.geometry.cx = g.at("cx").get<double>();
    map.geometry.cy = g.at("cy").get<double>();
    map.geometry.r_blind = g.at("r_blind").get<double>();
    map.geometry.r_max = g.at("r_max").get<double>();
    return map;
}

} // namespace palsim
