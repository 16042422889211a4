// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include <gsav/core.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace gsav {

namespace {

bool all_finite(const auto& v) { return v.allFinite(); }

// Renormalization is skipped when the norm is already this close to 1, which
// makes validate_splat idempotent in float arithmetic.
constexpr double kQuatNormSlack = 1e-7;

} // namespace

Splat validate_splat(const RawSplat& s) {
    if (!all_finite(s.position)) throw ValidationError("splat: non-finite position");
    if (!all_finite(s.rotation)) throw ValidationError("splat: non-finite rotation");
    if (!all_finite(s.scale)) throw ValidationError("splat: non-finite scale");
    if (!std::isfinite(s.opacity)) throw ValidationError("splat: non-finite opacity");
    if (!all_finite(s.color)) throw ValidationError("splat: non-finite color");
    if ((s.scale.array() <= 0.f).any()) throw ValidationError("splat: non-positive scale");

    const Eigen::Vector4d q = s.rotation.cast<double>();
    const double norm = q.norm();
    if (norm == 0.0) throw ValidationError("splat: zero-norm rotation");

    Splat out;
    out.position_ = s.position;
    out.rotation_ =
        std::abs(norm - 1.0) > kQuatNormSlack ? Vec4f((q / norm).cast<float>()) : s.rotation;
    out.scale_ = s.scale;
    out.opacity_ = std::clamp(s.opacity, 0.f, 1.f);
    out.color_ = s.color.cwiseMax(0.f).cwiseMin(1.f);
    return out;
}

Mat3d Splat::rotation_matrix() const {
    const Eigen::Quaterniond q(rotation_[0], rotation_[1], rotation_[2], rotation_[3]);
    return q.normalized().toRotationMatrix();
}

std::string_view part_name(PartLabel p) {
    switch (p) {
    case PartLabel::Full:
        return "full";
    case PartLabel::Upper:
        return "upper";
    case PartLabel::Lower:
        return "lower";
    case PartLabel::Head:
        return "head";
    }
    return "full";
}

PartLabel parse_part(std::string_view name) {
    for (PartLabel p : kAllParts) {
        if (part_name(p) == name) return p;
    }
    throw ValidationError("unknown body part '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

SplatCloud::SplatCloud(PartLabel part, std::vector<Splat> splats)
    : part_(part), splats_(std::move(splats)), source_index_(splats_.size()) {
    std::iota(source_index_.begin(), source_index_.end(), 0u);
}

SplatCloud::SplatCloud(PartLabel part, std::vector<Splat> splats,
                       std::vector<std::uint32_t> source_index, std::vector<Vec3f> normals)
    : part_(part), splats_(std::move(splats)), source_index_(std::move(source_index)),
      normals_(std::move(normals)) {
    if (source_index_.size() != splats_.size())
        throw ValidationError("splat cloud: source_index length differs from splat count");
    if (!normals_.empty() && normals_.size() != splats_.size())
        throw ValidationError("splat cloud: normals length differs from splat count");
    std::vector<bool> seen(splats_.size(), false);
    for (std::uint32_t idx : source_index_) {
        if (idx >= splats_.size() || seen[idx])
            throw ValidationError("splat cloud: source_index is not a permutation of 0..N-1");
        seen[idx] = true;
    }
}

SplatCloud SplatCloud::relabeled(PartLabel part) const {
    SplatCloud out = *this;
    out.part_ = part;
    return out;
}

// ---------------------------------------------------------------------------

double orthonormality_error(const Mat3d& r) {
    return (r * r.transpose() - Mat3d::Identity()).cwiseAbs().maxCoeff();
}

Camera::Camera() : p_{} {}

Camera::Camera(const CameraParams& p) : p_(p) {
    if (!std::isfinite(p.fx) || !std::isfinite(p.fy) || p.fx <= 0 || p.fy <= 0)
        throw ValidationError("camera: focal lengths must be finite and positive");
    if (!std::isfinite(p.cx) || !std::isfinite(p.cy))
        throw ValidationError("camera: non-finite principal point");
    if (p.width < 1 || p.height < 1) throw ValidationError("camera: width and height must be >= 1");
    if (!p.world_to_camera.allFinite()) throw ValidationError("camera: non-finite world_to_camera");
    const Eigen::RowVector4d last = p.world_to_camera.row(3);
    if (last != Eigen::RowVector4d(0, 0, 0, 1))
        throw ValidationError("camera: world_to_camera last row must be 0 0 0 1");
    const Mat3d r = p.world_to_camera.topLeftCorner<3, 3>();
    const double err = orthonormality_error(r);
    if (err > 1e-6)
        throw ValidationError("camera: rotation not orthonormal (error " + std::to_string(err) + ")");
    if (r.determinant() < 0) throw ValidationError("camera: rotation is a reflection");
}

Vec3d Camera::center() const { return -rotation().transpose() * translation(); }

Camera Camera::with_pose(const Mat4d& world_to_camera) const {
    CameraParams p = p_;
    p.world_to_camera = world_to_camera;
    return Camera(p);
}

bool operator==(const Camera& a, const Camera& b) {
    const auto& p = a.p_;
    const auto& q = b.p_;
    return p.fx == q.fx && p.fy == q.fy && p.cx == q.cx && p.cy == q.cy && p.width == q.width &&
           p.height == q.height && p.world_to_camera == q.world_to_camera;
}

Camera look_at_camera(const Vec3d& eye, const Vec3d& target, const Vec3d& up, double fx,
                      double fy, double cx, double cy, int width, int height) {
    const Vec3d forward = (target - eye).normalized();
    const Vec3d down = (-up - (-up).dot(forward) * forward).normalized();
    const Vec3d right = down.cross(forward);
    Mat3d r;
    r.row(0) = right.transpose();
    r.row(1) = down.transpose();
    r.row(2) = forward.transpose();
    Mat4d m = Mat4d::Identity();
    m.topLeftCorner<3, 3>() = r;
    m.topRightCorner<3, 1>() = -r * eye;
    return Camera(CameraParams{fx, fy, cx, cy, width, height, m});
}

// ---------------------------------------------------------------------------

Image::Image(int width, int height, int channels)
    : width_(width), height_(height), channels_(channels) {
    if (width < 1 || height < 1) throw ValidationError("image: width and height must be >= 1");
    if (channels != 1 && channels != 3 && channels != 4)
        throw ValidationError("image: channels must be 1, 3 or 4");
    pixels_.assign(static_cast<std::size_t>(width) * height * channels, 0.f);
}

Image::Image(int width, int height, int channels, std::vector<float> pixels)
    : Image(width, height, channels) {
    if (pixels.size() != pixels_.size())
        throw ValidationError("image: pixel buffer length differs from width*height*channels");
    if (!std::all_of(pixels.begin(), pixels.end(), [](float v) { return std::isfinite(v); }))
        throw ValidationError("image: non-finite pixel value");
    pixels_ = std::move(pixels);
}

double max_abs_diff(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw ValidationError("max_abs_diff: image shapes differ");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(double(a.data()[i]) - double(b.data()[i])));
    return m;
}

// ---------------------------------------------------------------------------

Vec3d centroid(const SplatCloud& cloud) {
    Vec3d sum = Vec3d::Zero();
    for (const Splat& s : cloud.splats()) sum += s.position().cast<double>();
    return cloud.empty() ? sum : Vec3d(sum / double(cloud.size()));
}

NormalizedScene normalize_scene(const SplatCloud& cloud, const std::vector<Camera>& cameras,
                                double target_distance) {
    if (cameras.empty()) throw ValidationError("normalize_scene: no cameras");
    if (cloud.empty()) throw ValidationError("normalize_scene: empty cloud");
    if (!(target_distance > 0)) throw ValidationError("normalize_scene: target distance must be > 0");

    const Vec3d c = centroid(cloud);
    double mean_dist = 0.0;
    for (const Camera& cam : cameras) mean_dist += (cam.center() - c).norm();
    mean_dist /= double(cameras.size());
    if (!(mean_dist > 1e-12))
        throw ValidationError("normalize_scene: degenerate scene, cameras sit at the centroid");

    const double s = target_distance / mean_dist;
    NormalizedScene out;
    out.scale_factor = s;
    if (s == 1.0) {
        out.cloud = cloud;
        out.cameras = cameras;
        return out;
    }

    std::vector<Splat> splats;
    splats.reserve(cloud.size());
    for (const Splat& sp : cloud.splats()) {
        RawSplat r = sp.raw();
        r.position = (c + s * (sp.position().cast<double>() - c)).cast<float>();
        r.scale = (s * sp.scale().cast<double>()).cast<float>();
        splats.push_back(validate_splat(r));
    }
    out.cloud = SplatCloud(cloud.part(), std::move(splats), cloud.source_index(), cloud.normals());

    out.cameras.reserve(cameras.size());
    for (const Camera& cam : cameras) {
        const Vec3d center = c + s * (cam.center() - c);
        Mat4d m = cam.world_to_camera();
        m.topRightCorner<3, 1>() = -cam.rotation() * center;
        out.cameras.push_back(cam.with_pose(m));
    }
    return out;
}

} // namespace gsav
