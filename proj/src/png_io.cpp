// Copyright 2026 The mffseg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mffseg/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

namespace mffseg::io {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
    auto* what = static_cast<std::string*>(png_get_error_ptr(png));
    if (what) *what = msg;
    png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

}  // namespace

Image8 read_png(const std::filesystem::path& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    MFFSEG_CHECK(file != nullptr, DataError, "png: cannot open '" + path.string() + "'");
    unsigned char sig[8];
    MFFSEG_CHECK(std::fread(sig, 1, 8, file.get()) == 8 && png_sig_cmp(sig, 0, 8) == 0, DataError,
                 "png: '" + path.string() + "' is not a PNG file");

    std::string error;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, png_warn);
    png_infop info = png_create_info_struct(png);
    Image8 img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("png: failed to decode '" + path.string() + "': " + error);
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    img.data.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
    rows.resize(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = img.data.data() + static_cast<std::size_t>(y) * img.width * img.channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    MFFSEG_CHECK(img.channels == 1 || img.channels == 3, DataError,
                 "png: '" + path.string() + "' has unsupported channel count " + std::to_string(img.channels));
    return img;
}

Frame read_frame(const std::filesystem::path& path) {
    Image8 img = read_png(path);
    Frame f(img.height, img.width);
    if (img.channels == 3) {
        f.pixels = std::move(img.data);
    } else {
        for (std::size_t i = 0; i < img.data.size(); ++i) f.pixels[3 * i] = f.pixels[3 * i + 1] = f.pixels[3 * i + 2] = img.data[i];
    }
    return f;
}

LabelMap read_gray(const std::filesystem::path& path) {
    Image8 img = read_png(path);
    LabelMap m(img.height, img.width);
    for (std::size_t i = 0; i < m.indices.size(); ++i) m.indices[i] = img.data[i * img.channels];
    return m;
}

void write_png(const std::filesystem::path& path, const Image8& img) {
    MFFSEG_CHECK(img.channels == 1 || img.channels == 3, DataError, "png: can only write gray or RGB images");
    MFFSEG_CHECK(img.data.size() == static_cast<std::size_t>(img.width) * img.height * img.channels, DataError,
                 "png: pixel buffer does not match image extent");
    FilePtr file(std::fopen(path.c_str(), "wb"));
    MFFSEG_CHECK(file != nullptr, DataError, "png: cannot create '" + path.string() + "'");
    std::string error;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, png_warn);
    png_infop info = png_create_info_struct(png);
    std::vector<png_bytep> rows(img.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("png: failed to encode '" + path.string() + "': " + error);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, img.width, img.height, 8, img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        rows[y] = const_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * img.width * img.channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_frame(const std::filesystem::path& path, const Frame& frame) {
    write_png(path, {frame.height, frame.width, 3, frame.pixels});
}

void write_gray(const std::filesystem::path& path, const LabelMap& map) {
    write_png(path, {map.height, map.width, 1, map.indices});
}

}  // namespace mffseg::io
