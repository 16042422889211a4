// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include <gsav/io.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdio>

namespace gsav::io {

using nlohmann::json;

namespace {

double number(const json& obj, const char* key, std::size_t idx) {
    const std::string where = "camera " + std::to_string(idx) + ": ";
    if (!obj.contains(key)) throw ValidationError(where + "missing field '" + key + "'");
    const json& v = obj.at(key);
    if (!v.is_number()) throw ValidationError(where + "field '" + key + "' is not a number");
    return v.get<double>();
}

int integer(const json& obj, const char* key, std::size_t idx) {
    const double v = number(obj, key, idx);
    if (v != std::floor(v) || v < 1 || v > 1 << 24)
        throw ValidationError("camera " + std::to_string(idx) + ": field '" + key +
                              "' must be a positive integer");
    return static_cast<int>(v);
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::vector<Camera> parse_camera_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("camera JSON: ") + e.what());
    }
    if (!doc.is_array()) throw ValidationError("camera JSON: top level must be an array");

    std::vector<Camera> cams;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& c = doc[i];
        if (!c.is_object()) throw ValidationError("camera " + std::to_string(i) + ": not an object");
        CameraParams p;
        p.fx = number(c, "fx", i);
        p.fy = number(c, "fy", i);
        p.cx = number(c, "cx", i);
        p.cy = number(c, "cy", i);
        p.width = integer(c, "width", i);
        p.height = integer(c, "height", i);
        if (!c.contains("world_to_camera"))
            throw ValidationError("camera " + std::to_string(i) + ": missing field 'world_to_camera'");
        const json& m = c.at("world_to_camera");
        if (!m.is_array() || m.size() != 16)
            throw ValidationError("camera " + std::to_string(i) +
                                  ": 'world_to_camera' must hold 16 numbers");
        for (int k = 0; k < 16; ++k) {
            if (!m[k].is_number())
                throw ValidationError("camera " + std::to_string(i) +
                                      ": 'world_to_camera' must hold 16 numbers");
            p.world_to_camera(k / 4, k % 4) = m[k].get<double>();
        }
        const double err = orthonormality_error(p.world_to_camera.topLeftCorner<3, 3>());
        if (err > kCameraJsonOrthoTolerance)
            throw ValidationError("camera " + std::to_string(i) +
                                  ": rotation is not orthonormal (error " + g17(err) + ")");
        try {
            cams.emplace_back(p);
        } catch (const ValidationError& e) {
            throw ValidationError("camera " + std::to_string(i) + ": " + e.what());
        }
    }
    return cams;
}

std::vector<Camera> read_camera_json(const fs::path& path) {
    try {
        return parse_camera_json(read_text(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::string camera_json_string(const std::vector<Camera>& cameras) {
    std::string out = "[\n";
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        const Camera& c = cameras[i];
        out += "  {\"cx\": " + g17(c.cx()) + ", \"cy\": " + g17(c.cy()) + ", \"fx\": " +
               g17(c.fx()) + ", \"fy\": " + g17(c.fy()) +
               ", \"height\": " + std::to_string(c.height()) +
               ", \"width\": " + std::to_string(c.width()) + ", \"world_to_camera\": [";
        for (int k = 0; k < 16; ++k) {
            if (k) out += ", ";
            out += g17(c.world_to_camera()(k / 4, k % 4));
        }
        out += "]}";
        out += i + 1 < cameras.size() ? ",\n" : "\n";
    }
    out += "]\n";
    return out;
}

void write_camera_json(const std::vector<Camera>& cameras, const fs::path& path) {
    write_text(path, camera_json_string(cameras));
}

} // namespace gsav::io
