// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gsav/error.hpp>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <tuple>
#include <vector>

namespace gsav {

using Vec2d = Eigen::Vector2d;
using Vec3d = Eigen::Vector3d;
using Vec3f = Eigen::Vector3f;
using Vec4f = Eigen::Vector4f;
using Mat3d = Eigen::Matrix3d;
using Mat4d = Eigen::Matrix4d;

// ---------------------------------------------------------------------------
// Splat
// ---------------------------------------------------------------------------

/// Unvalidated splat fields, as they arrive from a file or a generator.
struct RawSplat {
    Vec3f position = Vec3f::Zero();
    Vec4f rotation{1.f, 0.f, 0.f, 0.f}; // (w, x, y, z)
    Vec3f scale = Vec3f::Ones();
    float opacity = 1.f;
    Vec3f color = Vec3f::Zero();
};

/// One 3D Gaussian primitive. Positions and scales are in meters, scale is
/// the per-axis standard deviation (linear, not log). Color is plain RGB.
///
/// Only `validate_splat` produces instances, so every Splat satisfies: unit
/// quaternion (within 1e-6), finite positive scales, opacity and color in
/// [0, 1].
class Splat {
  public:
    Splat() = default;

    const Vec3f& position() const { return position_; }
    const Vec4f& rotation() const { return rotation_; }
    const Vec3f& scale() const { return scale_; }
    float opacity() const { return opacity_; }
    const Vec3f& color() const { return color_; }

    RawSplat raw() const { return {position_, rotation_, scale_, opacity_, color_}; }

    /// Rotation matrix of the (unit) quaternion.
    Mat3d rotation_matrix() const;

    friend Splat validate_splat(const RawSplat& s);
    friend bool operator==(const Splat&, const Splat&) = default;

  private:
    Vec3f position_ = Vec3f::Zero();
    Vec4f rotation_{1.f, 0.f, 0.f, 0.f};
    Vec3f scale_ = Vec3f::Constant(0.01f);
    float opacity_ = 1.f;
    Vec3f color_ = Vec3f::Zero();
};

/// Normalizes the quaternion and clamps opacity and color. Throws
/// ValidationError naming the offending field on non-finite input or a
/// non-positive scale. Idempotent: validate(validate(s).raw()) == validate(s).
Splat validate_splat(const RawSplat& s);

// ---------------------------------------------------------------------------
// Body parts
// ---------------------------------------------------------------------------

enum class PartLabel : std::uint8_t { Full = 0, Upper = 1, Lower = 2, Head = 3 };

inline constexpr std::array<PartLabel, 4> kAllParts = {PartLabel::Full, PartLabel::Upper,
                                                       PartLabel::Lower, PartLabel::Head};

/// Detail hierarchy: Head > Upper = Lower > Full.
constexpr int detail_level(PartLabel p) {
    switch (p) {
    case PartLabel::Full:
        return 0;
    case PartLabel::Upper:
    case PartLabel::Lower:
        return 1;
    case PartLabel::Head:
        return 2;
    }
    return 0;
}

std::string_view part_name(PartLabel p);
/// Inverse of part_name ("full", "upper", "lower", "head"); throws
/// ValidationError on anything else.
PartLabel parse_part(std::string_view name);

// ---------------------------------------------------------------------------
// SplatCloud
// ---------------------------------------------------------------------------

/// Ordered splats tagged with a body part. `source_index` is a stable
/// per-splat identifier, a permutation of 0..N-1. Normals are carried only
/// for PLY interchange and are never interpreted.
class SplatCloud {
  public:
    SplatCloud() = default;

    /// source_index = 0..N-1 in storage order.
    SplatCloud(PartLabel part, std::vector<Splat> splats);

    /// Explicit identifiers; must be a permutation of 0..N-1. `normals` is
    /// either empty or one entry per splat.
    SplatCloud(PartLabel part, std::vector<Splat> splats, std::vector<std::uint32_t> source_index,
               std::vector<Vec3f> normals = {});

    PartLabel part() const { return part_; }
    std::size_t size() const { return splats_.size(); }
    bool empty() const { return splats_.empty(); }

    const std::vector<Splat>& splats() const { return splats_; }
    const Splat& operator[](std::size_t i) const { return splats_[i]; }
    const std::vector<std::uint32_t>& source_index() const { return source_index_; }
    const std::vector<Vec3f>& normals() const { return normals_; }
    bool has_normals() const { return !normals_.empty(); }

    /// Same splats, different label.
    SplatCloud relabeled(PartLabel part) const;

    friend bool operator==(const SplatCloud&, const SplatCloud&) = default;

  private:
    PartLabel part_ = PartLabel::Full;
    std::vector<Splat> splats_;
    std::vector<std::uint32_t> source_index_;
    std::vector<Vec3f> normals_;
};

// ---------------------------------------------------------------------------
// Camera
// ---------------------------------------------------------------------------

struct CameraParams {
    double fx = 1, fy = 1, cx = 0, cy = 0;
    int width = 1, height = 1;
    Mat4d world_to_camera = Mat4d::Identity();
};

/// Pinhole camera. Camera frame: +z forward, +x right, +y down.
/// `world_to_camera` is a rigid transform (orthonormal rotation within
/// 1e-6, last row 0 0 0 1).
class Camera {
  public:
    /// Identity pose, unit focal, 1x1.
    Camera();
    /// Throws ValidationError when an invariant fails.
    explicit Camera(const CameraParams& p);

    double fx() const { return p_.fx; }
    double fy() const { return p_.fy; }
    double cx() const { return p_.cx; }
    double cy() const { return p_.cy; }
    int width() const { return p_.width; }
    int height() const { return p_.height; }
    const Mat4d& world_to_camera() const { return p_.world_to_camera; }
    const CameraParams& params() const { return p_; }

    Mat3d rotation() const { return p_.world_to_camera.topLeftCorner<3, 3>(); }
    Vec3d translation() const { return p_.world_to_camera.topRightCorner<3, 1>(); }
    /// Camera center in world coordinates, -R^T t.
    Vec3d center() const;

    Vec3d to_camera(const Vec3d& world) const { return rotation() * world + translation(); }

    /// Copy with a different world-to-camera transform.
    Camera with_pose(const Mat4d& world_to_camera) const;

    friend bool operator==(const Camera& a, const Camera& b);

  private:
    CameraParams p_;
};

/// Largest absolute entry of R R^T - I.
double orthonormality_error(const Mat3d& r);

/// Camera at `eye` looking at `target`; `up` is the world up direction,
/// which maps to image -y.
Camera look_at_camera(const Vec3d& eye, const Vec3d& target, const Vec3d& up, double fx,
                      double fy, double cx, double cy, int width, int height);

// ---------------------------------------------------------------------------
// Image
// ---------------------------------------------------------------------------

/// Row-major, channel-interleaved float raster with 1, 3 or 4 channels.
/// Rendered images live in [0, 1]; intermediate diffusion states are only
/// required to be finite.
class Image {
  public:
    Image() = default;
    Image(int width, int height, int channels);
    /// Throws ValidationError on size mismatch or non-finite data.
    Image(int width, int height, int channels, std::vector<float> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t size() const { return pixels_.size(); }

    float& at(int x, int y, int c) { return pixels_[index(x, y, c)]; }
    float at(int x, int y, int c) const { return pixels_[index(x, y, c)]; }

    std::vector<float>& data() { return pixels_; }
    const std::vector<float>& data() const { return pixels_; }

    bool same_shape(const Image& o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }

    friend bool operator==(const Image&, const Image&) = default;

  private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> pixels_;
};

/// Max over elements of |a - b|; throws ValidationError on shape mismatch.
double max_abs_diff(const Image& a, const Image& b);

// ---------------------------------------------------------------------------
// Scene normalization
// ---------------------------------------------------------------------------

/// Canonical mean camera distance to the cloud centroid, in meters.
inline constexpr double kCanonicalCameraDistance = 1.5;

struct NormalizedScene {
    SplatCloud cloud;
    std::vector<Camera> cameras;
    double scale_factor = 1.0;
};

/// Uniformly rescales the scene about the cloud centroid (positions, splat
/// scales, camera centers) so the mean camera-center distance to the
/// centroid equals `target_distance`. Rotations and intrinsics are kept, so
/// renders are unchanged.
NormalizedScene normalize_scene(const SplatCloud& cloud, const std::vector<Camera>& cameras,
                                double target_distance = kCanonicalCameraDistance);

/// Unweighted mean of splat positions (double precision).
Vec3d centroid(const SplatCloud& cloud);

} // namespace gsav
