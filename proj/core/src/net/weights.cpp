#include "palsim/net/weights.hpp"

#include <numeric>

#include <nlohmann/json.hpp>

#include "palsim/container.hpp"
#include "palsim/error.hpp"
#include "palsim/rng.hpp"

namespace palsim::net {

void PartConfig::validate() const {
    if (n_prtb < 1 || n_pmab < 1) throw config_error("part config: block counts must be >= 1");
    if (channels < 2 || channels % 2 != 0)
        throw config_error("part config: channels must be even");
    if (heads < 1 || (channels / 2) % heads != 0)
        throw config_error("part config: half channels must divide by heads");
    if (window_size < 1) throw config_error("part config: window size must be >= 1");
    if (k_prime < 1 || k_prime % 2 == 0) throw config_error("part config: k_prime must be odd");
    if (pfm_kernel < 1 || pfm_kernel % 2 == 0)
        throw config_error("part config: pfm kernel must be odd");
    if (alpha < 0.0) throw config_error("part config: alpha must be >= 0");
    if (upscale < 1) throw config_error("part config: upscale must be >= 1");
    if (ffn_ratio < 1) throw config_error("part config: ffn ratio must be >= 1");
}

void PartWeights::push(Layer layer) {
    index_[layer.name] = layers_.size();
    layers_.push_back(std::move(layer));
}

const std::vector<float>& PartWeights::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw argument_error("part weights: unknown layer " + name);
    return layers_[it->second].data;
}

std::vector<float>& PartWeights::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw argument_error("part weights: unknown layer " + name);
    return layers_[it->second].data;
}

namespace {

std::size_t shape_size(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

enum class Init { TruncNormal, Zero, One };

struct LayerSpec {
    std::string name;
    std::vector<int> shape;
    Init init;
};

// Deterministic layer manifest for a configuration. Order defines the blob
// layout in the weight file.
std::vector<LayerSpec> layer_manifest(const PartConfig& c) {
    std::vector<LayerSpec> specs;
    const int C = c.channels;
    const int Ch = C / 2;
    const int bias_table = (2 * c.window_size - 1) * (2 * c.window_size - 1);

    auto conv = [&](const std::string& name, int out, int in, int k) {
        specs.push_back({name + "_w", {out, in, k, k}, Init::TruncNormal});
        specs.push_back({name + "_b", {out}, Init::Zero});
    };
    auto lin = [&](const std::string& name, int out, int in) {
        specs.push_back({name + "_w", {out, in}, Init::TruncNormal});
        specs.push_back({name + "_b", {out}, Init::Zero});
    };
    auto pfm = [&](const std::string& prefix, int k) {
        conv(prefix + ".res1", C, C, 1);
        conv(prefix + ".res2", C, C, 1);
        conv(prefix + ".out", C * k * k, C, 1);
    };
    auto attn = [&](const std::string& prefix, bool varied) {
        lin(prefix + ".qkv", 3 * Ch, Ch);
        lin(prefix + ".proj", Ch, Ch);
        specs.push_back({prefix + ".rel_bias", {bias_table, c.heads}, Init::TruncNormal});
        if (varied) lin(prefix + ".wt", 4 * c.heads, C);
    };
    auto ffn = [&](const std::string& prefix) {
        specs.push_back({prefix + ".ln_g", {C}, Init::One});
        specs.push_back({prefix + ".ln_b", {C}, Init::Zero});
        lin(prefix + ".fc1", c.ffn_ratio * C, C);
        lin(prefix + ".fc2", C, c.ffn_ratio * C);
    };

    conv("e_psf", C, c.map_channels(), 3);
    conv("feat", C, c.input_channels(), 3);
    pfm("pfm_in", c.pfm_kernel);
    for (int i = 0; i < c.n_prtb; ++i) {
        std::string p = "prtb" + std::to_string(i);
        for (int j = 0; j < c.n_pmab; ++j) {
            std::string q = p + ".pmab" + std::to_string(j);
            attn(q + ".wmsa", false);
            attn(q + ".pvsa", true);
            pfm(q + ".pfm", 1);
            ffn(q + ".ffn");
        }
        conv(p + ".conv", C, C, 3);
        pfm(p + ".pfm", c.pfm_kernel);
    }
    pfm("pfm_out", c.pfm_kernel);
    conv("recon.up", 3 * c.upscale * c.upscale, C, 3);
    conv("recon.out", 3, 3, 3);
    return specs;
}

nlohmann::json config_to_json(const PartConfig& c) {
    return nlohmann::json{
        {"n_prtb", c.n_prtb},
        {"n_pmab", c.n_pmab},
        {"channels", c.channels},
        {"heads", c.heads},
        {"window_size", c.window_size},
        {"k_prime", c.k_prime},
        {"pfm_kernel", c.pfm_kernel},
        {"alpha", c.alpha},
        {"mode", c.mode == TaskMode::AC ? "ac" : "srac"},
        {"upscale", c.upscale},
        {"ln_eps", c.ln_eps},
        {"ffn_ratio", c.ffn_ratio},
    };
}

PartConfig config_from_json(const nlohmann::json& j) {
    PartConfig c;
    c.n_prtb = j.value("n_prtb", c.n_prtb);
    c.n_pmab = j.value("n_pmab", c.n_pmab);
    c.channels = j.value("channels", c.channels);
    c.heads = j.value("heads", c.heads);
    c.window_size = j.value("window_size", c.window_size);
    c.k_prime = j.value("k_prime", c.k_prime);
    c.pfm_kernel = j.value("pfm_kernel", c.pfm_kernel);
    c.alpha = j.value("alpha", c.alpha);
    std::string mode = j.value("mode", "ac");
    if (mode == "ac") c.mode = TaskMode::AC;
    else if (mode == "srac") c.mode = TaskMode::SRAC;
    else throw data_error("part config: unknown mode " + mode);
    c.upscale = j.value("upscale", c.mode == TaskMode::AC ? 4 : 3);
    c.ln_eps = j.value("ln_eps", c.ln_eps);
    c.ffn_ratio = j.value("ffn_ratio", c.ffn_ratio);
    c.validate();
    return c;
}

} // namespace

PartWeights PartWeights::init(const PartConfig& config, uint64_t seed) {
    config.validate();
    PartWeights w;
    w.seed_ = seed;
    auto specs = layer_manifest(config);
    for (std::size_t li = 0; li < specs.size(); ++li) {
        Layer layer;
        layer.name = specs[li].name;
        layer.shape = specs[li].shape;
        layer.data.resize(shape_size(layer.shape));
        switch (specs[li].init) {
            case Init::Zero:
                break;
            case Init::One:
                std::fill(layer.data.begin(), layer.data.end(), 1.0f);
                break;
            case Init::TruncNormal:
                for (std::size_t e = 0; e < layer.data.size(); ++e)
                    layer.data[e] = static_cast<float>(
                        truncated_normal(mix_key(seed, li, e), 0.02));
                break;
        }
        w.push(std::move(layer));
    }
    return w;
}

void PartWeights::save(const std::filesystem::path& path, const PartConfig& config) const {
    nlohmann::json header;
    header["format"] = "palsim-tensor";
    header["kind"] = "part_weights";
    header["dtype"] = "f32le";
    header["config"] = config_to_json(config);
    header["seed"] = seed_;
    header["layers"] = nlohmann::json::array();
    std::vector<float> blob;
    std::size_t total = 0;
    for (const auto& layer : layers_) total += layer.data.size();
    blob.reserve(total);
    for (const auto& layer : layers_) {
        header["layers"].push_back({{"name", layer.name}, {"shape", layer.shape}});
        blob.insert(blob.end(), layer.data.begin(), layer.data.end());
    }
    save_tensor(path, header, blob);
}

PartWeights PartWeights::load(const std::filesystem::path& path, PartConfig& config_out) {
    std::vector<float> blob;
    nlohmann::json header = load_tensor(path, blob);
    if (header.value("kind", "") != "part_weights")
        throw data_error("not a weight file: " + path.string());
    config_out = config_from_json(header.at("config"));
    PartWeights w;
    w.seed_ = header.value("seed", 0ULL);
    std::size_t pos = 0;
    for (const auto& entry : header.at("layers")) {
        Layer layer;
        layer.name = entry.at("name").get<std::string>();
        layer.shape = entry.at("shape").get<std::vector<int>>();
        std::size_t n = shape_size(layer.shape);
        if (pos + n > blob.size()) throw data_error("weight blob truncated: " + path.string());
        layer.data.assign(blob.begin() + static_cast<std::ptrdiff_t>(pos),
                          blob.begin() + static_cast<std::ptrdiff_t>(pos + n));
        pos += n;
        w.push(std::move(layer));
    }
    if (pos != blob.size()) throw data_error("weight blob has trailing data: " + path.string());
    // A loaded file must cover the manifest of its own config.
    for (const auto& spec : layer_manifest(config_out))
        if (w.index_.find(spec.name) == w.index_.end())
            throw data_error("weight file missing layer " + spec.name + ": " + path.string());
    return w;
}

PartConfig part_config_from_json_text(const std::string& text) {
    try {
        return config_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("bad part config: ") + e.what());
    }
}

std::string part_config_to_json_text(const PartConfig& config) {
    return config_to_json(config).dump(1) + "\n";
}

} // namespace palsim::net
