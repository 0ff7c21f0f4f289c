// Copyright 2026 The roofstock Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include <png.h>

#include "roofstock/errors.hpp"
#include "roofstock/tiling.hpp"

namespace roofstock {

namespace {

void png_error_fn(png_structp png, png_const_charp msg) {
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err) *err = msg;
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void append_bytes(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void flush_noop(png_structp) {}

struct ReadBuffer {
    const std::vector<std::uint8_t>* bytes;
    std::size_t offset;
};

void read_bytes(png_structp png, png_bytep data, png_size_t len) {
    auto* buf = static_cast<ReadBuffer*>(png_get_io_ptr(png));
    if (buf->offset + len > buf->bytes->size()) png_error(png, "truncated PNG");
    std::memcpy(data, buf->bytes->data() + buf->offset, len);
    buf->offset += len;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.empty() || (img.bands != 1 && img.bands != 3)) throw ValidationError("encode_png: need a 1- or 3-band image");
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) throw IoError("png: allocation failed");
    std::vector<std::uint8_t> out;
    std::vector<png_bytep> rows(img.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png encode failed: " + err);
    }
    png_set_write_fn(png, &out, append_bytes, flush_noop);
    png_set_IHDR(png, info, img.width, img.height, 8, img.bands == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    for (int r = 0; r < img.height; ++r)
        rows[r] = const_cast<png_bytep>(&img.data[std::size_t(r) * img.width * img.bands]);
    png_set_rows(png, info, rows.data());
    png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

void write_png(const std::filesystem::path& path, const Image& img) {
    const auto bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

Image read_png(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8)) throw IoError(path.string() + " is not a PNG file");

    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) throw IoError("png: allocation failed");
    ReadBuffer buf{&bytes, 0};
    Image img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png decode failed for " + path.string() + ": " + err);
    }
    png_set_read_fn(png, &buf, read_bytes);
    png_read_png(png, info, PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_PACKING | PNG_TRANSFORM_EXPAND |
                                PNG_TRANSFORM_STRIP_ALPHA, nullptr);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    png_bytepp rows = png_get_rows(png, info);
    img = Image(w, h, channels == 1 ? 1 : 3);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int b = 0; b < img.bands; ++b) img.at(r, c, b) = rows[r][c * channels + (channels == 2 ? 0 : b)];
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace roofstock
