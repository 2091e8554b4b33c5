#include "palsim/manifest.hpp"

#include <nlohmann/json.hpp>

#include "palsim/container.hpp"

namespace palsim {

std::string library_version() { return "0.1.0"; }

void write_run_manifest(const std::filesystem::path& path, const std::string& command,
                        const nlohmann::json& params,
                        const std::vector<std::filesystem::path>& outputs) {
    nlohmann::json j;
    j["format"] = "palsim-manifest";
    j["version"] = library_version();
    j["command"] = command;
    j["params"] = params;
    j["config_sha256"] = sha256_hex(params.dump().data(), params.dump().size());
    j["outputs"] = nlohmann::json::array();
    for (const auto& out : outputs) {
        nlohmann::json rec;
        rec["path"] = out.filename().string();
        rec["sha256"] = sha256_file(out);
        j["outputs"].push_back(rec);
    }
    write_text_atomic(path, j.dump(1) + "\n");
}

} // namespace palsim
