#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "palsim/image.hpp"

namespace palsim {

// Tensor container: one line of JSON (the header, newline terminated)
// followed by raw little-endian f32 data, row-major.

// Writes header+blob atomically (temp file in the same directory, then rename).
void save_tensor(const std::filesystem::path& path, const nlohmann::json& header,
                 const std::vector<float>& blob);

// Reads the header line and blob. Throws data_error on malformed input.
nlohmann::json load_tensor(const std::filesystem::path& path, std::vector<float>& blob);

// Atomic text write (temp + rename).
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::string read_text(const std::filesystem::path& path);

// Hex SHA-256 of a byte buffer / of a file's contents.
std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_file(const std::filesystem::path& path);

// Image <-> container (kind "image", channel-last blob, geometry in header).
void save_image_tensor(const std::filesystem::path& path, const AnnularImage& img);
AnnularImage load_image_tensor(const std::filesystem::path& path);

} // namespace palsim
