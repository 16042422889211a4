// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gsav/core.hpp>
#include <gsav/raymap.hpp>

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace gsav {

enum class Joint : std::uint8_t { Pelvis, Neck, LeftAnkle, RightAnkle, LeftEar, RightEar };

inline constexpr std::array<Joint, 6> kAllJoints = {Joint::Pelvis,     Joint::Neck,
                                                    Joint::LeftAnkle,  Joint::RightAnkle,
                                                    Joint::LeftEar,    Joint::RightEar};

std::string_view joint_name(Joint j);

/// Named 2D keypoints in global-view pixels; an absent joint is invalid.
struct Joints2D {
    std::array<std::optional<Vec2d>, 6> positions;

    const std::optional<Vec2d>& operator[](Joint j) const {
        return positions[static_cast<std::size_t>(j)];
    }
    std::optional<Vec2d>& operator[](Joint j) { return positions[static_cast<std::size_t>(j)]; }

    /// Every valid joint must lie within half the image diagonal of the
    /// frame. Throws ValidationError naming the joint.
    void validate(int width, int height) const;
};

/// Relative crop size per part (Full, Upper, Lower, Head), against the
/// full-body square side.
inline constexpr std::array<double, 4> kPartScales = {1.0, 0.5, 0.5, 0.25};

constexpr double part_scale(PartLabel p) { return kPartScales[static_cast<std::size_t>(p)]; }

struct CropConfig {
    /// Fractional growth of the full-body square side over the tight square
    /// around the mask box.
    double margin = 0.05;
    std::array<double, 4> scales = kPartScales;
};

/// Side of the full-body square: max(mask w, mask h) * (1 + margin).
double full_body_side(const CropBox& mask_bbox, const CropConfig& cfg = {});

/// Center joint(s): Full=pelvis, Upper=neck, Lower=ankle midpoint,
/// Head=ear midpoint.
Vec2d part_center(const Joints2D& joints, PartLabel part);

/// Square crop centered on the part's joint(s), side = scale * full-body
/// side. Not clamped to the image.
CropBox part_crop_box(const Joints2D& joints, const CropBox& mask_bbox, PartLabel part,
                      const Camera& global_cam, const CropConfig& cfg = {});

/// Zoomed camera seeing exactly `box` at out_w x out_h. Extrinsics are
/// kept; pixel (u, v) of the result casts the same ray as global pixel
/// crop_to_global(box, u, v).
Camera crop_camera(const Camera& global_cam, const CropBox& box, int out_w, int out_h);

} // namespace gsav
