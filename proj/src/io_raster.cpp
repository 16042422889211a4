// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include <gsav/io.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace gsav::io {

namespace {

constexpr char kMagic[4] = {'G', 'S', 'F', 'R'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>((v >> (8 * k)) & 0xff));
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

} // namespace

std::vector<std::uint8_t> encode_raw(const RawRaster& r) {
    const std::size_t n = std::size_t(r.width) * r.height * r.channels;
    if (r.values.size() != n) throw ValidationError("gsfr: payload length differs from header");
    std::vector<std::uint8_t> out;
    out.reserve(kRawHeaderBytes + 4 * n);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u16(out, kRawVersion);
    put_u16(out, 0);
    put_u32(out, r.width);
    put_u32(out, r.height);
    put_u32(out, r.channels);
    for (float v : r.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

RawRaster decode_raw(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kRawHeaderBytes) throw ValidationError("gsfr: truncated header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ValidationError("gsfr: bad magic");
    const std::uint16_t version = get_u16(bytes.data() + 4);
    if (version != kRawVersion)
        throw ValidationError("gsfr: unsupported version " + std::to_string(version));
    if (get_u16(bytes.data() + 6) != 0) throw ValidationError("gsfr: reserved field is not zero");
    RawRaster r;
    r.width = get_u32(bytes.data() + 8);
    r.height = get_u32(bytes.data() + 12);
    r.channels = get_u32(bytes.data() + 16);
    if (r.width == 0 || r.height == 0 || r.channels == 0)
        throw ValidationError("gsfr: zero dimension");
    const std::uint64_t n = std::uint64_t(r.width) * r.height * r.channels;
    if (bytes.size() - kRawHeaderBytes != n * 4)
        throw ValidationError("gsfr: payload is " + std::to_string(bytes.size() - kRawHeaderBytes) +
                              " bytes, expected " + std::to_string(n * 4));
    r.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        r.values[i] = std::bit_cast<float>(get_u32(bytes.data() + kRawHeaderBytes + 4 * i));
    return r;
}

void write_raw(const RawRaster& raster, const fs::path& path) {
    write_bytes(path, encode_raw(raster));
}

RawRaster read_raw(const fs::path& path) {
    const auto bytes = read_bytes(path);
    try {
        return decode_raw(bytes);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

RawRaster to_raster(const Image& image) {
    return {std::uint32_t(image.width()), std::uint32_t(image.height()),
            std::uint32_t(image.channels()), image.data()};
}

RawRaster to_raster(const RayMap& map) {
    return {std::uint32_t(map.width), std::uint32_t(map.height), std::uint32_t(map.channels),
            map.values};
}

Image to_image(const RawRaster& r) {
    return Image(int(r.width), int(r.height), int(r.channels), r.values);
}

// ---------------------------------------------------------------------------

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw ValidationError("write failed for '" + path.string() + "'");
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ValidationError("write failed for '" + path.string() + "'");
}

} // namespace gsav::io
