// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include <gsav/io.hpp>

#include <png.h>

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <memory>

namespace gsav::io {

std::uint8_t quantize_u8(float v) {
    const double x = std::clamp(double(v), 0.0, 1.0) * 255.0;
    // nearbyint honours the default round-to-nearest-even mode.
    return static_cast<std::uint8_t>(std::nearbyint(x));
}

void write_png(const Image& image, const fs::path& path) {
    const int w = image.width(), h = image.height(), ch = image.channels();
    std::vector<std::uint8_t> rgba(static_cast<std::size_t>(w) * h * 4);
    for (std::size_t p = 0; p < std::size_t(w) * h; ++p) {
        const float* src = image.data().data() + p * ch;
        std::uint8_t* dst = rgba.data() + p * 4;
        if (ch == 1) {
            dst[0] = dst[1] = dst[2] = quantize_u8(src[0]);
            dst[3] = quantize_u8(src[0]);
        } else {
            for (int c = 0; c < 3; ++c) dst[c] = quantize_u8(src[c]);
            dst[3] = ch == 4 ? quantize_u8(src[3]) : 255;
        }
    }

    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw ValidationError("cannot write '" + path.string() + "'");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw InvariantError("png: cannot allocate write struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw InvariantError("png: cannot allocate info struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw ValidationError("png: write failed for '" + path.string() + "'");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y) png_write_row(png, rgba.data() + static_cast<std::size_t>(y) * w * 4);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace gsav::io
