#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace palsim {

// Run manifest written next to CLI outputs: the command, its parameters,
// the seed, and SHA-256 hashes of every produced file. Content is fully
// determined by inputs (no timestamps, relative paths only).
void write_run_manifest(const std::filesystem::path& path, const std::string& command,
                        const nlohmann::json& params,
                        const std::vector<std::filesystem::path>& outputs);

std::string library_version();

} // namespace palsim
