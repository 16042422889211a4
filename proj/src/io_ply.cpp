// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include <gsav/io.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <sstream>

namespace gsav::io {

static_assert(std::endian::native == std::endian::little, "PLY codec assumes a little-endian host");

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

float decode_opacity(float raw) { return static_cast<float>(1.0 / (1.0 + std::exp(-double(raw)))); }

float decode_scale(float raw) { return static_cast<float>(std::exp(double(raw))); }

float decode_color(float raw) {
    return static_cast<float>(std::clamp(kShC0 * double(raw) + 0.5, 0.0, 1.0));
}

namespace {

// Floats mapped to unsigned keys whose order matches numeric order.
std::uint32_t float_key(float f) {
    const auto b = std::bit_cast<std::uint32_t>(f);
    return (b & 0x80000000u) ? ~b : (b | 0x80000000u);
}

float key_float(std::uint32_t k) {
    return std::bit_cast<float>((k & 0x80000000u) ? (k & 0x7fffffffu) : ~k);
}

/// For a nondecreasing decode function, finds a stored value in [lo, hi]
/// that decodes exactly to `target`, or returns `guess` if none exists.
template <typename Decode>
float find_preimage(Decode decode, float target, float guess, float lo, float hi) {
    guess = std::clamp(guess, lo, hi);
    if (decode(guess) == target) return guess;
    std::uint32_t a = float_key(lo), b = float_key(hi);
    // Smallest key whose decoded value is >= target.
    while (a < b) {
        const std::uint32_t mid = a + (b - a) / 2;
        if (decode(key_float(mid)) < target)
            a = mid + 1;
        else
            b = mid;
    }
    const float r = key_float(a);
    return decode(r) == target ? r : guess;
}

} // namespace

float encode_opacity(float value) {
    const double v = value;
    double guess;
    if (v <= 0.0)
        guess = -kOpacityLogitLimit;
    else if (v >= 1.0)
        guess = kOpacityLogitLimit;
    else
        guess = std::clamp(std::log(v / (1.0 - v)), -double(kOpacityLogitLimit),
                           double(kOpacityLogitLimit));
    return find_preimage(decode_opacity, value, static_cast<float>(guess), -kOpacityLogitLimit,
                         kOpacityLogitLimit);
}

float encode_scale(float value) {
    if (!(value > 0.f)) throw ValidationError("PLY: cannot encode non-positive scale");
    return find_preimage(decode_scale, value, static_cast<float>(std::log(double(value))), -103.f,
                         88.f);
}

float encode_color(float value) {
    const double guess = (double(value) - 0.5) / kShC0;
    return find_preimage(decode_color, value, static_cast<float>(guess), -1e6f, 1e6f);
}

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<const char*, 17> kProperties = {
    "x",       "y",       "z",       "nx",      "ny",      "nz",      "f_dc_0", "f_dc_1", "f_dc_2",
    "opacity", "scale_0", "scale_1", "scale_2", "rot_0",   "rot_1",   "rot_2",  "rot_3"};

enum Prop { X, Y, Z, NX, NY, NZ, DC0, DC1, DC2, OPACITY, S0, S1, S2, R0, R1, R2, R3 };

std::string next_line(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    std::string line;
    while (pos < bytes.size() && bytes[pos] != '\n') line.push_back(static_cast<char>(bytes[pos++]));
    if (pos >= bytes.size()) throw ValidationError("PLY: truncated header");
    ++pos;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

} // namespace

SplatCloud parse_ply(std::span<const std::uint8_t> bytes, PartLabel part) {
    std::size_t pos = 0;
    if (next_line(bytes, pos) != "ply") throw ValidationError("PLY: missing 'ply' magic");

    std::size_t count = 0;
    bool have_vertex = false, have_format = false;
    std::vector<std::string> props;
    for (;;) {
        const std::string line = next_line(bytes, pos);
        std::istringstream ss(line);
        std::string kw;
        ss >> kw;
        if (kw == "end_header") break;
        if (kw == "comment" || kw == "obj_info" || kw.empty()) continue;
        if (kw == "format") {
            std::string fmt, ver;
            ss >> fmt >> ver;
            if (fmt == "ascii") throw ValidationError("PLY: ASCII format is not supported");
            if (fmt != "binary_little_endian")
                throw ValidationError("PLY: unsupported format '" + fmt + "'");
            have_format = true;
        } else if (kw == "element") {
            std::string name;
            long long n = -1;
            ss >> name >> n;
            if (name != "vertex") throw ValidationError("PLY: unexpected element '" + name + "'");
            if (have_vertex) throw ValidationError("PLY: duplicate vertex element");
            if (n < 0) throw ValidationError("PLY: invalid vertex count");
            count = static_cast<std::size_t>(n);
            have_vertex = true;
        } else if (kw == "property") {
            if (!have_vertex) throw ValidationError("PLY: property before element");
            std::string type, name;
            ss >> type >> name;
            if (type == "list") throw ValidationError("PLY: list properties are not supported");
            if (name.rfind("f_rest_", 0) == 0)
                throw ValidationError("PLY: spherical harmonics above degree 0 are not supported ('" +
                                      name + "')");
            if (type != "float" && type != "float32")
                throw ValidationError("PLY: property '" + name + "' has type '" + type +
                                      "', expected float");
            props.push_back(name);
        } else {
            throw ValidationError("PLY: unexpected header line '" + line + "'");
        }
    }
    if (!have_format) throw ValidationError("PLY: missing format line");
    if (!have_vertex) throw ValidationError("PLY: missing vertex element");

    std::array<int, kProperties.size()> column{};
    column.fill(-1);
    for (std::size_t c = 0; c < props.size(); ++c) {
        const auto it = std::find_if(kProperties.begin(), kProperties.end(),
                                     [&](const char* p) { return props[c] == p; });
        if (it == kProperties.end())
            throw ValidationError("PLY: unexpected property '" + props[c] + "'");
        auto& slot = column[static_cast<std::size_t>(it - kProperties.begin())];
        if (slot >= 0) throw ValidationError("PLY: duplicate property '" + props[c] + "'");
        slot = static_cast<int>(c);
    }
    for (std::size_t k = 0; k < kProperties.size(); ++k)
        if (column[k] < 0)
            throw ValidationError(std::string("PLY: missing property '") + kProperties[k] + "'");

    const std::size_t stride = props.size() * 4;
    if (bytes.size() - pos != count * stride)
        throw ValidationError("PLY: payload is " + std::to_string(bytes.size() - pos) +
                              " bytes, expected " + std::to_string(count * stride));

    std::vector<Splat> splats;
    std::vector<Vec3f> normals;
    splats.reserve(count);
    normals.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint8_t* row = bytes.data() + pos + i * stride;
        auto get = [&](Prop p) {
            float v;
            std::memcpy(&v, row + 4 * column[p], 4);
            return v;
        };
        RawSplat r;
        r.position = {get(X), get(Y), get(Z)};
        r.color = {decode_color(get(DC0)), decode_color(get(DC1)), decode_color(get(DC2))};
        r.opacity = decode_opacity(get(OPACITY));
        r.scale = {decode_scale(get(S0)), decode_scale(get(S1)), decode_scale(get(S2))};
        r.rotation = {get(R0), get(R1), get(R2), get(R3)};
        try {
            splats.push_back(validate_splat(r));
        } catch (const ValidationError& e) {
            throw ValidationError("PLY: vertex " + std::to_string(i) + ": " + e.what());
        }
        normals.emplace_back(get(NX), get(NY), get(NZ));
    }
    std::vector<std::uint32_t> ids(count);
    for (std::size_t i = 0; i < count; ++i) ids[i] = static_cast<std::uint32_t>(i);
    return SplatCloud(part, std::move(splats), std::move(ids), std::move(normals));
}

SplatCloud read_ply(const fs::path& path, PartLabel part) {
    const auto bytes = read_bytes(path);
    try {
        return parse_ply(bytes, part);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_ply(const SplatCloud& cloud) {
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size() << "\n";
    for (const char* p : kProperties) header << "property float " << p << "\n";
    header << "end_header\n";
    const std::string h = header.str();

    std::vector<std::uint8_t> out(h.begin(), h.end());
    out.reserve(out.size() + cloud.size() * kProperties.size() * 4);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Splat& s = cloud[i];
        const Vec3f n = cloud.has_normals() ? cloud.normals()[i] : Vec3f::Zero();
        const std::array<float, kProperties.size()> row = {
            s.position().x(),          s.position().y(),          s.position().z(),
            n.x(),                     n.y(),                     n.z(),
            encode_color(s.color()[0]), encode_color(s.color()[1]), encode_color(s.color()[2]),
            encode_opacity(s.opacity()), encode_scale(s.scale()[0]), encode_scale(s.scale()[1]),
            encode_scale(s.scale()[2]), s.rotation()[0],          s.rotation()[1],
            s.rotation()[2],           s.rotation()[3]};
        const auto* p = reinterpret_cast<const std::uint8_t*>(row.data());
        out.insert(out.end(), p, p + sizeof(row));
    }
    return out;
}

void write_ply(const SplatCloud& cloud, const fs::path& path) { write_bytes(path, encode_ply(cloud)); }

} // namespace gsav::io
