// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gsav/composition.hpp>
#include <gsav/core.hpp>
#include <gsav/cropping.hpp>
#include <gsav/diffusion.hpp>
#include <gsav/oracle.hpp>
#include <gsav/raymap.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gsav::io {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// PLY (binary little-endian 3DGS layout, SH degree 0)
// ---------------------------------------------------------------------------

/// SH band-0 constant, 1 / (2 sqrt(pi)).
inline constexpr double kShC0 = 0.28209479177387814;
/// Stored logit opacities are saturated to +-this value.
inline constexpr float kOpacityLogitLimit = 16.f;

/// Activations applied when decoding stored PLY values.
float decode_opacity(float raw);
float decode_scale(float raw);
float decode_color(float raw);

/// Stored value that decodes exactly to `value` when one exists (searched
/// over adjacent floats); otherwise the closest analytic inverse.
float encode_opacity(float value);
float encode_scale(float value);
float encode_color(float value);

/// Reads vertex properties x y z nx ny nz f_dc_0..2 opacity scale_0..2
/// rot_0..3 (float32, any order). Throws ValidationError on ASCII or
/// big-endian files, missing or extra properties, non-float types and
/// truncated payloads.
SplatCloud read_ply(const fs::path& path, PartLabel part = PartLabel::Full);
SplatCloud parse_ply(std::span<const std::uint8_t> bytes, PartLabel part = PartLabel::Full);

void write_ply(const SplatCloud& cloud, const fs::path& path);
std::vector<std::uint8_t> encode_ply(const SplatCloud& cloud);

// ---------------------------------------------------------------------------
// Cameras (JSON array)
// ---------------------------------------------------------------------------

/// Rotation blocks further than this from orthonormal are rejected.
inline constexpr double kCameraJsonOrthoTolerance = 1e-4;

std::vector<Camera> parse_camera_json(const std::string& text);
std::vector<Camera> read_camera_json(const fs::path& path);

/// Canonical form: sorted keys, %.17g doubles, one camera per line.
std::string camera_json_string(const std::vector<Camera>& cameras);
void write_camera_json(const std::vector<Camera>& cameras, const fs::path& path);

// ---------------------------------------------------------------------------
// Raw float rasters ("GSFR")
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kRawVersion = 1;
/// magic(4) version(2) reserved(2) width(4) height(4) channels(4).
inline constexpr std::size_t kRawHeaderBytes = 20;

struct RawRaster {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t channels = 0;
    std::vector<float> values;

    friend bool operator==(const RawRaster&, const RawRaster&) = default;
};

std::vector<std::uint8_t> encode_raw(const RawRaster& raster);
RawRaster decode_raw(std::span<const std::uint8_t> bytes);
void write_raw(const RawRaster& raster, const fs::path& path);
RawRaster read_raw(const fs::path& path);

RawRaster to_raster(const Image& image);
RawRaster to_raster(const RayMap& map);
/// Throws ValidationError unless channels is 1, 3 or 4.
Image to_image(const RawRaster& raster);

// ---------------------------------------------------------------------------
// PNG export
// ---------------------------------------------------------------------------

/// 8-bit value for a float in [0, 1]: clamp, x255, round half to even.
std::uint8_t quantize_u8(float v);

/// 8-bit RGBA. Alpha-only images become gray with that alpha; RGB images
/// get opaque alpha.
void write_png(const Image& image, const fs::path& path);

// ---------------------------------------------------------------------------
// JSON sidecars
// ---------------------------------------------------------------------------

/// Object mapping joint name to [x, y]; absent joints are invalid, other
/// names are ignored.
Joints2D parse_joints_json(const std::string& text);
Joints2D read_joints_json(const fs::path& path);

/// [x_tl, y_tl, x_br, y_br].
CropBox parse_box_json(const std::string& text);

/// {seed, count, extent, opacity_range, scale_range, width, height,
/// focal_factor}; every key optional, unknown keys rejected.
struct SceneFile {
    std::uint64_t seed = 0;
    oracle::SceneDescriptor descriptor;
};
SceneFile parse_scene_json(const std::string& text);
SceneFile read_scene_json(const fs::path& path);
std::string scene_json_string(const SceneFile& scene);

struct SimulationConfig {
    int timesteps = kDefaultTimesteps;
    double beta_start = kDefaultBetaStart;
    double beta_end = kDefaultBetaEnd;
    int steps = kDefaultSamplingSteps;
    TimeWindow joint_window = kDefaultJointWindow;
    bool refine = false;
    double strength = kDefaultRefineStrength;
    TimeWindow refine_window = kDefaultRefineJointWindow;
    double eta = 0.0;
    std::uint64_t seed = 0;
    std::string denoiser = "oracle";
    std::string generator = "oracle";
    double noise_magnitude = 0.05; // noisy-oracle only
    bool trace = false;

    DiffusionSchedule schedule() const;
};
SimulationConfig parse_simulation_json(const std::string& text);
SimulationConfig read_simulation_json(const fs::path& path);

/// One JSON object per line: {part, source_index, kept, rule, coverage_own,
/// coverage_by_part, salience_own, salience_other}.
std::string decision_log_jsonl(const std::vector<Decision>& log);
std::vector<Decision> parse_decision_log(const std::string& text);

// ---------------------------------------------------------------------------

std::string read_text(const fs::path& path);
std::vector<std::uint8_t> read_bytes(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);
void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes);

} // namespace gsav::io
