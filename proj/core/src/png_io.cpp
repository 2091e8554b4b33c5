#include "palsim/png_io.hpp"

#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>
#include <unistd.h>

#include "palsim/error.hpp"

namespace palsim {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

} // namespace

Image read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw data_error("cannot open PNG: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw data_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw data_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw data_error("PNG decode error: " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    if (bit_depth == 16) png_set_swap(png); // file is big-endian, host little
    png_read_update_info(png, info);
    bit_depth = png_get_bit_depth(png, info);

    std::size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<unsigned char> raw(rowbytes * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(static_cast<int>(h), static_cast<int>(w), 3);
    if (bit_depth == 16) {
        const auto* p = reinterpret_cast<const uint16_t*>(raw.data());
        for (std::size_t i = 0; i < img.size(); ++i)
            img.data[i] = static_cast<float>(p[i]) / 65535.0f;
    } else {
        for (std::size_t i = 0; i < img.size(); ++i)
            img.data[i] = static_cast<float>(raw[i]) / 255.0f;
    }
    return img;
}

void write_png(const std::filesystem::path& path, const Image& img, int bit_depth) {
    if (img.channels != 3) throw argument_error("write_png: expected 3 channels");
    if (bit_depth != 8 && bit_depth != 16) throw argument_error("write_png: bit depth must be 8 or 16");

    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        FilePtr fp(std::fopen(tmp.c_str(), "wb"));
        if (!fp) throw data_error("cannot open PNG for writing: " + tmp.string());

        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (!png) throw data_error("png_create_write_struct failed");
        png_infop info = png_create_info_struct(png);
        if (!info) {
            png_destroy_write_struct(&png, nullptr);
            throw data_error("png_create_info_struct failed");
        }
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            throw data_error("PNG encode error: " + tmp.string());
        }
        png_init_io(png, fp.get());
        png_set_IHDR(png, info, img.width, img.height, bit_depth, PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        if (bit_depth == 16) png_set_swap(png);

        std::size_t stride = static_cast<std::size_t>(img.width) * 3 * (bit_depth / 8);
        std::vector<unsigned char> row(stride);
        for (int y = 0; y < img.height; ++y) {
            if (bit_depth == 16) {
                auto* p = reinterpret_cast<uint16_t*>(row.data());
                for (int i = 0; i < img.width * 3; ++i) {
                    float v = img.data[static_cast<std::size_t>(y) * img.width * 3 + i];
                    v = std::clamp(v, 0.0f, 1.0f);
                    p[i] = static_cast<uint16_t>(std::lround(v * 65535.0f));
                }
            } else {
                for (int i = 0; i < img.width * 3; ++i) {
                    float v = img.data[static_cast<std::size_t>(y) * img.width * 3 + i];
                    v = std::clamp(v, 0.0f, 1.0f);
                    row[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
                }
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw data_error("rename failed for " + path.string() + ": " + ec.message());
    }
}

} // namespace palsim
