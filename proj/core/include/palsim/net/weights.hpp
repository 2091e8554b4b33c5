#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "palsim/image.hpp"

namespace palsim::net {

enum class TaskMode { AC, SRAC };

struct PartConfig {
    int n_prtb = 6;
    int n_pmab = 6;
    int channels = 180;
    int heads = 6;
    int window_size = 8;
    int k_prime = 5;
    int pfm_kernel = 3;
    double alpha = 0.01;
    TaskMode mode = TaskMode::AC;
    int upscale = 4; // pixel-unshuffle factor for AC, SR factor for SRAC
    double ln_eps = 1e-5;
    int ffn_ratio = 2;

    int map_channels() const { return k_prime * k_prime + 3; }
    int unshuffle_factor() const { return mode == TaskMode::AC ? upscale : 1; }
    int input_channels() const { return 3 * unshuffle_factor() * unshuffle_factor() + map_channels(); }
    void validate() const;
};

// Named, ordered layer store. Regenerable from (config, seed): truncated
// normal (std 0.02) weights, zero biases, unit LayerNorm gains.
class PartWeights {
public:
    struct Layer {
        std::string name;
        std::vector<int> shape;
        std::vector<float> data;
    };

    static PartWeights init(const PartConfig& config, uint64_t seed);

    const std::vector<float>& get(const std::string& name) const;
    std::vector<float>& at(const std::string& name); // for tests forcing layers
    const std::vector<Layer>& layers() const { return layers_; }
    uint64_t seed() const { return seed_; }

    void save(const std::filesystem::path& path, const PartConfig& config) const;
    static PartWeights load(const std::filesystem::path& path, PartConfig& config_out);

private:
    std::vector<Layer> layers_;
    std::unordered_map<std::string, std::size_t> index_;
    uint64_t seed_ = 0;

    friend PartWeights build_layers(const PartConfig&);
    void push(Layer layer);
};

PartConfig part_config_from_json_text(const std::string& text);
std::string part_config_to_json_text(const PartConfig& config);

} // namespace palsim::net
