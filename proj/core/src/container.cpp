#include "palsim/container.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "palsim/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor container I/O assumes a little-endian host");

namespace palsim {

namespace {

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
    auto dir = path.parent_path();
    auto name = path.filename().string() + ".tmp." + std::to_string(::getpid());
    return dir / name;
}

void commit(const std::filesystem::path& tmp, const std::filesystem::path& path) {
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw data_error("rename failed for " + path.string() + ": " + ec.message());
    }
}

} // namespace

void save_tensor(const std::filesystem::path& path, const nlohmann::json& header,
                 const std::vector<float>& blob) {
    auto tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw data_error("cannot open for writing: " + tmp.string());
        std::string line = header.dump();
        line.push_back('\n');
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
        out.write(reinterpret_cast<const char*>(blob.data()),
                  static_cast<std::streamsize>(blob.size() * sizeof(float)));
        if (!out) throw data_error("short write: " + tmp.string());
    }
    commit(tmp, path);
}

nlohmann::json load_tensor(const std::filesystem::path& path, std::vector<float>& blob) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw data_error("missing header line: " + path.string());
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw data_error("bad tensor header in " + path.string() + ": " + e.what());
    }
    if (header.value("dtype", "") != "f32le")
        throw data_error("unsupported dtype in " + path.string());
    auto pos = in.tellg();
    in.seekg(0, std::ios::end);
    auto end = in.tellg();
    std::size_t bytes = static_cast<std::size_t>(end - pos);
    if (bytes % sizeof(float) != 0)
        throw data_error("tensor blob size not a multiple of 4: " + path.string());
    blob.resize(bytes / sizeof(float));
    in.seekg(pos);
    in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw data_error("short read: " + path.string());
    return header;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    auto tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw data_error("cannot open for writing: " + tmp.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw data_error("short write: " + tmp.string());
    }
    commit(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sha256_hex(const void* data, std::size_t size) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data, size, digest, &len, EVP_sha256(), nullptr))
        throw data_error("sha256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::string bytes = read_text(path);
    return sha256_hex(bytes.data(), bytes.size());
}

void save_image_tensor(const std::filesystem::path& path, const AnnularImage& img) {
    nlohmann::json header = {
        {"format", "palsim-tensor"},
        {"kind", "image"},
        {"dtype", "f32le"},
        {"height", img.pixels.height},
        {"width", img.pixels.width},
        {"channels", img.pixels.channels},
        {"geometry", {{"cx", img.geometry.cx},
                      {"cy", img.geometry.cy},
                      {"r_blind", img.geometry.r_blind},
                      {"r_max", img.geometry.r_max}}},
    };
    save_tensor(path, header, img.pixels.data);
}

AnnularImage load_image_tensor(const std::filesystem::path& path) {
    std::vector<float> blob;
    nlohmann::json header = load_tensor(path, blob);
    if (header.value("kind", "") != "image")
        throw data_error("not an image tensor: " + path.string());
    AnnularImage img;
    img.pixels.height = header.at("height").get<int>();
    img.pixels.width = header.at("width").get<int>();
    img.pixels.channels = header.at("channels").get<int>();
    std::size_t expect = static_cast<std::size_t>(img.pixels.height) * img.pixels.width *
                         img.pixels.channels;
    if (blob.size() != expect)
        throw data_error("image tensor size mismatch: " + path.string());
    img.pixels.data = std::move(blob);
    const auto& g = header.at("geometry");
    img.geometry.cx = g.at("cx").get<double>();
    img.geometry.cy = g.at("cy").get<double>();
    img.geometry.r_blind = g.at("r_blind").get<double>();
    img.geometry.r_max = g.at("r_max").get<double>();
    return img;
}

} // namespace palsim
