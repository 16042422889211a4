// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

// Random instances for serialization round-trip checks. Each check returns
// an empty string on success and a description of the first mismatch
// otherwise.

#pragma once

#include <gsav/io.hpp>
#include <gsav/random.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>
#include <string>

namespace gsav::fuzz {

/// Any finite float, drawn from the raw bit space.
inline float any_finite_float(Rng& rng) {
    for (;;) {
        const float f = std::bit_cast<float>(static_cast<std::uint32_t>(rng.next_u64()));
        if (std::isfinite(f)) return f;
    }
}

/// A PLY file whose stored values lie where the activations are defined:
/// logit opacity within the saturation limit, log scale with a finite
/// positive decode, any finite position, normal and color coefficient.
inline std::vector<std::uint8_t> random_ply(Rng& rng, int max_splats = 8) {
    const int n = static_cast<int>(rng.next_u64() % (max_splats + 1));
    std::ostringstream h;
    h << "ply\nformat binary_little_endian 1.0\nelement vertex " << n << "\n";
    static const char* names[] = {"x",       "y",       "z",       "nx",    "ny",    "nz",
                                  "f_dc_0",  "f_dc_1",  "f_dc_2",  "opacity", "scale_0", "scale_1",
                                  "scale_2", "rot_0",   "rot_1",   "rot_2", "rot_3"};
    for (const char* p : names) h << "property float " << p << "\n";
    h << "end_header\n";
    const std::string hs = h.str();
    std::vector<std::uint8_t> out(hs.begin(), hs.end());
    for (int i = 0; i < n; ++i) {
        float row[17];
        for (int k = 0; k < 6; ++k) row[k] = rng.uniform() < 0.5 ? any_finite_float(rng) : float(rng.normal());
        for (int k = 6; k < 9; ++k) row[k] = float(rng.uniform(-3, 3));
        row[9] = float(rng.uniform(-16, 16));
        for (int k = 10; k < 13; ++k) row[k] = float(rng.uniform(-20, 5));
        do {
            for (int k = 13; k < 17; ++k) row[k] = float(rng.normal());
        } while (std::abs(row[13]) + std::abs(row[14]) + std::abs(row[15]) + std::abs(row[16]) < 1e-3f);
        const auto* p = reinterpret_cast<const std::uint8_t*>(row);
        out.insert(out.end(), p, p + sizeof(row));
    }
    return out;
}

/// parse -> encode -> parse must reproduce the cloud, and encoding is
/// byte-stable from then on.
inline std::string check_ply(const std::vector<std::uint8_t>& file) {
    const SplatCloud first = io::parse_ply(file);
    const auto bytes = io::encode_ply(first);
    const SplatCloud second = io::parse_ply(bytes);
    if (!(second == first)) return "decoded cloud changed after re-encoding";
    if (io::encode_ply(second) != bytes) return "encoding is not byte-stable";
    return {};
}

inline Camera random_camera(Rng& rng) {
    const Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    Mat4d m = Mat4d::Identity();
    m.topLeftCorner<3, 3>() = q.normalized().toRotationMatrix();
    for (int k = 0; k < 3; ++k) m(k, 3) = rng.uniform(-10, 10) * std::pow(10.0, rng.uniform(-3, 3));
    CameraParams p;
    p.width = 1 + static_cast<int>(rng.next_u64() % 4096);
    p.height = 1 + static_cast<int>(rng.next_u64() % 4096);
    p.fx = rng.uniform(1e-3, 1e4);
    p.fy = rng.uniform(1e-3, 1e4);
    p.cx = rng.uniform(-1e3, 1e4);
    p.cy = rng.uniform(-1e3, 1e4);
    p.world_to_camera = m;
    return Camera(p);
}

inline std::string check_cameras(const std::vector<Camera>& cams) {
    const std::string text = io::camera_json_string(cams);
    const auto back = io::parse_camera_json(text);
    if (back != cams) return "camera values changed";
    if (io::camera_json_string(back) != text) return "canonical JSON is not byte-stable";
    return {};
}

inline io::RawRaster random_raster(Rng& rng) {
    io::RawRaster r;
    r.width = 1 + static_cast<std::uint32_t>(rng.next_u64() % 9);
    r.height = 1 + static_cast<std::uint32_t>(rng.next_u64() % 9);
    r.channels = 1 + static_cast<std::uint32_t>(rng.next_u64() % 96);
    r.values.resize(std::size_t(r.width) * r.height * r.channels);
    for (float& v : r.values) v = any_finite_float(rng);
    return r;
}

inline std::string check_raster(const io::RawRaster& r) {
    const auto bytes = io::encode_raw(r);
    if (bytes.size() != io::kRawHeaderBytes + r.values.size() * 4) return "unexpected byte length";
    const io::RawRaster back = io::decode_raw(bytes);
    if (back.width != r.width || back.height != r.height || back.channels != r.channels)
        return "header changed";
    if (std::memcmp(back.values.data(), r.values.data(), r.values.size() * 4) != 0)
        return "payload bits changed";
    return {};
}

} // namespace gsav::fuzz
