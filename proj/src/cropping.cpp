// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include <gsav/cropping.hpp>

#include <algorithm>
#include <cmath>

namespace gsav {

std::string_view joint_name(Joint j) {
    switch (j) {
    case Joint::Pelvis:
        return "pelvis";
    case Joint::Neck:
        return "neck";
    case Joint::LeftAnkle:
        return "left_ankle";
    case Joint::RightAnkle:
        return "right_ankle";
    case Joint::LeftEar:
        return "left_ear";
    case Joint::RightEar:
        return "right_ear";
    }
    return "pelvis";
}

void Joints2D::validate(int width, int height) const {
    const double slack = 0.5 * std::hypot(double(width), double(height));
    for (Joint j : kAllJoints) {
        const auto& p = (*this)[j];
        if (!p) continue;
        if (!p->allFinite())
            throw ValidationError("joint '" + std::string(joint_name(j)) + "' is not finite");
        if (p->x() < -slack || p->x() > width + slack || p->y() < -slack || p->y() > height + slack)
            throw ValidationError("joint '" + std::string(joint_name(j)) +
                                  "' lies implausibly far outside the frame");
    }
}

namespace {

Vec2d require(const Joints2D& joints, Joint j) {
    const auto& p = joints[j];
    if (!p) throw ValidationError("missing required joint '" + std::string(joint_name(j)) + "'");
    return *p;
}

} // namespace

double full_body_side(const CropBox& mask_bbox, const CropConfig& cfg) {
    mask_bbox.validate();
    return std::max(mask_bbox.width(), mask_bbox.height()) * (1.0 + cfg.margin);
}

Vec2d part_center(const Joints2D& joints, PartLabel part) {
    switch (part) {
    case PartLabel::Full:
        return require(joints, Joint::Pelvis);
    case PartLabel::Upper:
        return require(joints, Joint::Neck);
    case PartLabel::Lower:
        return 0.5 * (require(joints, Joint::LeftAnkle) + require(joints, Joint::RightAnkle));
    case PartLabel::Head:
        return 0.5 * (require(joints, Joint::LeftEar) + require(joints, Joint::RightEar));
    }
    throw InvariantError("part_center: unknown part");
}

CropBox part_crop_box(const Joints2D& joints, const CropBox& mask_bbox, PartLabel part,
                      const Camera& global_cam, const CropConfig& cfg) {
    joints.validate(global_cam.width(), global_cam.height());
    const Vec2d c = part_center(joints, part);
    const double half = 0.5 * cfg.scales[static_cast<std::size_t>(part)] *
                        full_body_side(mask_bbox, cfg);
    return {c.x() - half, c.y() - half, c.x() + half, c.y() + half};
}

Camera crop_camera(const Camera& global_cam, const CropBox& box, int out_w, int out_h) {
    box.validate();
    if (out_w < 1 || out_h < 1) throw ValidationError("crop camera: output size must be >= 1");
    const double sx = out_w / box.width();
    const double sy = out_h / box.height();
    CameraParams p = global_cam.params();
    p.fx = global_cam.fx() * sx;
    p.fy = global_cam.fy() * sy;
    // Pixel centers sit at +0.5 in both frames; the 0.5 (1 - s) term keeps
    // crop pixel u aligned with global coordinate x_tl + u / s.
    p.cx = sx * (global_cam.cx() - box.x_tl) + 0.5 * (1.0 - sx);
    p.cy = sy * (global_cam.cy() - box.y_tl) + 0.5 * (1.0 - sy);
    p.width = out_w;
    p.height = out_h;
    return Camera(p);
}

} // namespace gsav
