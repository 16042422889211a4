// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gsav/core.hpp>

#include <optional>
#include <vector>

namespace gsav {

/// Default number of sinusoidal octaves for the denoiser ray map.
inline constexpr int kDefaultOctaves = 8;

/// Axis-aligned rectangle in parent-view pixel coordinates. May extend past
/// the image; only positive area is required.
struct CropBox {
    double x_tl = 0, y_tl = 0, x_br = 1, y_br = 1;

    double width() const { return x_br - x_tl; }
    double height() const { return y_br - y_tl; }

    /// Throws ValidationError unless the box is finite with positive area.
    void validate() const;

    static CropBox full_frame(const Camera& cam) {
        return {0.0, 0.0, double(cam.width()), double(cam.height())};
    }

    friend bool operator==(const CropBox&, const CropBox&) = default;
};

struct Ray {
    Vec3d origin;
    Vec3d direction; // unit
};

enum class EmbeddingKind { Plucker, Sinusoidal };

/// Per-pixel camera embedding, row-major, channel-interleaved.
struct RayMap {
    int width = 0;
    int height = 0;
    EmbeddingKind kind = EmbeddingKind::Plucker;
    int octaves = 0; // sinusoidal only
    int channels = 0;
    std::vector<float> values;

    float at(int x, int y, int c) const {
        return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

int embedding_channels(EmbeddingKind kind, int octaves);

/// World-space ray through the center (i + 0.5, j + 0.5) of pixel (i, j).
/// (i, j) may be fractional and may lie outside the image.
Ray pixel_ray(const Camera& camera, double i, double j);

/// (o, o x d).
std::array<double, 6> plucker_embed(const Vec3d& origin, const Vec3d& direction);

/// For each of (o.x, o.y, o.z, d.x, d.y, d.z) and each k in [0, octaves):
/// sin(2^k v), cos(2^k v). Layout is scalar-major, octave-minor, sin before
/// cos, i.e. index = (scalar * octaves + k) * 2 + {0: sin, 1: cos}.
std::vector<double> sinusoidal_embed(const Vec3d& origin, const Vec3d& direction,
                                     int octaves = kDefaultOctaves);

/// Maps local crop pixel (u, v) of a w x h crop back to global pixel
/// coordinates: i = x_tl + (x_br - x_tl) u / w, j likewise.
Vec2d crop_to_global(const CropBox& box, double u, double v, int w, int h);

/// The box of the global view covered by `inner`, a box given in the pixel
/// frame of a w x h crop of `outer`.
CropBox compose_crops(const CropBox& outer, const CropBox& inner, int w, int h);

/// Rays sampled for every output pixel, before embedding. With a box, pixel
/// (u, v) takes the global camera's ray at crop_to_global(box, u, v).
std::vector<Ray> ray_grid(const Camera& camera, const std::optional<CropBox>& box, int out_w,
                          int out_h);

RayMap build_ray_map(const Camera& camera, const std::optional<CropBox>& box, int out_w, int out_h,
                     EmbeddingKind kind, int octaves = kDefaultOctaves);

} // namespace gsav
