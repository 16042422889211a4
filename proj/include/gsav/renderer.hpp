// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gsav/core.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace gsav {

using Mat2d = Eigen::Matrix2d;

struct RenderConfig {
    /// Per-splat alpha is clipped to this value.
    double alpha_max = 0.99;
    /// Contributions whose Gaussian falloff (relative to the splat peak) is
    /// below this are skipped, and it sets the tile-binning radius. The
    /// oracle has no cutoff, so this bounds renderer/oracle deviation.
    double min_gaussian = 1e-12;
    /// Low-pass term added to the diagonal of every 2D covariance, px^2.
    double blur = 0.3;
    /// Splats at camera depth <= near are culled, meters.
    double near_plane = 0.01;
    int tile_size = 16;
};

/// A splat after EWA projection into one camera.
struct ProjectedSplat {
    Vec2d mean2d;        // continuous pixel coordinates
    Mat2d cov2d;         // px^2, blur included
    Mat2d conic;         // cov2d^-1
    double depth = 0;    // camera-space z
    double alpha_peak = 0;
    Vec3d color;
    std::uint32_t storage_index = 0; // position in the source cloud
    std::uint32_t source_index = 0;
};

/// EWA projection. Returns nothing when depth <= near_plane.
std::optional<ProjectedSplat> project_splat(const Camera& cam, const Splat& s,
                                            const RenderConfig& cfg = {});

/// All retained projections, sorted front to back by depth; ties are
/// broken by source_index. This order defines compositing for every
/// renderer in the library, including the oracle.
std::vector<ProjectedSplat> project_sorted(const SplatCloud& cloud, const Camera& cam,
                                           const RenderConfig& cfg = {});

/// Gaussian falloff exp(-0.5 d^T conic d) at pixel (px, py), evaluated at
/// the pixel center.
inline double gaussian_at(const ProjectedSplat& p, int px, int py) {
    const double dx = px + 0.5 - p.mean2d.x();
    const double dy = py + 0.5 - p.mean2d.y();
    const double power =
        -0.5 * (p.conic(0, 0) * dx * dx + 2.0 * p.conic(0, 1) * dx * dy + p.conic(1, 1) * dy * dy);
    return std::exp(power);
}

/// Tile-binned, OpenMP-parallel front-to-back compositing into RGBA on a
/// black background. RGB is premultiplied (C = sum c_i a_i T_i), alpha is
/// A = sum a_i T_i. Output is bit-identical for any thread count.
Image render(const SplatCloud& cloud, const Camera& cam, int out_w, int out_h,
             const RenderConfig& cfg = {});

enum class SalienceReduction {
    SumOfAbs, // sum over views of |dS_v / d opacity|
    AbsOfSum, // |sum over views of dS_v / d opacity|
};

/// Per-view opacity gradient of the rendered alpha sum, one entry per splat
/// in storage order. Analytic backward pass through the compositing
/// equation.
std::vector<double> alpha_sum_gradient(const SplatCloud& cloud, const Camera& view, int out_w,
                                       int out_h, const RenderConfig& cfg = {});

/// Visibility salience: opacity gradient of the alpha-channel sum,
/// reduced over views. One entry per splat in storage order; all >= 0.
std::vector<double> splat_salience(const SplatCloud& cloud, const std::vector<Camera>& views,
                                   int out_w, int out_h, const RenderConfig& cfg = {},
                                   SalienceReduction reduction = SalienceReduction::SumOfAbs);

/// Same, rendering each view at its own camera resolution.
std::vector<double> splat_salience(const SplatCloud& cloud, const std::vector<Camera>& views,
                                   const RenderConfig& cfg = {},
                                   SalienceReduction reduction = SalienceReduction::SumOfAbs);

enum class CoverageMode {
    Center,    // projected center inside [0,W) x [0,H)
    Footprint, // cutoff ellipse bounding box overlaps the frame
};

/// Number of views whose frustum captures the splat (depth > near_plane
/// and the coverage test for `mode`).
int view_coverage(const Splat& s, const std::vector<Camera>& views,
                  CoverageMode mode = CoverageMode::Center, const RenderConfig& cfg = {});

} // namespace gsav
