// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include <gsav/renderer.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gsav {

std::optional<ProjectedSplat> project_splat(const Camera& cam, const Splat& s,
                                            const RenderConfig& cfg) {
    const Vec3d pc = cam.to_camera(s.position().cast<double>());
    const double z = pc.z();
    if (!(z > cfg.near_plane)) return std::nullopt;

    const Mat3d rot = s.rotation_matrix();
    const Vec3d var = s.scale().cast<double>().array().square();
    const Mat3d cov_world = rot * var.asDiagonal() * rot.transpose();
    const Mat3d w = cam.rotation();
    const Mat3d cov_cam = w * cov_world * w.transpose();

    Eigen::Matrix<double, 2, 3> j;
    j << cam.fx() / z, 0.0, -cam.fx() * pc.x() / (z * z), //
        0.0, cam.fy() / z, -cam.fy() * pc.y() / (z * z);

    ProjectedSplat p;
    p.cov2d = j * cov_cam * j.transpose();
    p.cov2d(0, 1) = p.cov2d(1, 0) = 0.5 * (p.cov2d(0, 1) + p.cov2d(1, 0));
    p.cov2d(0, 0) += cfg.blur;
    p.cov2d(1, 1) += cfg.blur;
    const double det = p.cov2d.determinant();
    if (!(det > 0)) return std::nullopt;
    p.conic << p.cov2d(1, 1) / det, -p.cov2d(0, 1) / det, -p.cov2d(1, 0) / det,
        p.cov2d(0, 0) / det;
    p.mean2d = {cam.fx() * pc.x() / z + cam.cx(), cam.fy() * pc.y() / z + cam.cy()};
    p.depth = z;
    p.alpha_peak = s.opacity();
    p.color = s.color().cast<double>();
    return p;
}

std::vector<ProjectedSplat> project_sorted(const SplatCloud& cloud, const Camera& cam,
                                           const RenderConfig& cfg) {
    std::vector<ProjectedSplat> out;
    out.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (auto p = project_splat(cam, cloud[i], cfg)) {
            p->storage_index = static_cast<std::uint32_t>(i);
            p->source_index = cloud.source_index()[i];
            out.push_back(*p);
        }
    }
    std::sort(out.begin(), out.end(), [](const ProjectedSplat& a, const ProjectedSplat& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.source_index < b.source_index;
    });
    return out;
}

namespace {

/// Per-tile lists of indices into the depth-sorted projection array, each
/// list in ascending depth order.
struct TileBins {
    int tile = 16;
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<std::vector<std::uint32_t>> lists;
};

TileBins bin_splats(const std::vector<ProjectedSplat>& sorted, int w, int h,
                    const RenderConfig& cfg) {
    TileBins bins;
    bins.tile = std::max(1, cfg.tile_size);
    bins.tiles_x = (w + bins.tile - 1) / bins.tile;
    bins.tiles_y = (h + bins.tile - 1) / bins.tile;
    bins.lists.resize(static_cast<std::size_t>(bins.tiles_x) * bins.tiles_y);

    const double k = cfg.min_gaussian > 0 ? -2.0 * std::log(cfg.min_gaussian)
                                          : std::numeric_limits<double>::infinity();
    for (std::uint32_t idx = 0; idx < sorted.size(); ++idx) {
        const ProjectedSplat& p = sorted[idx];
        int x0 = 0, x1 = w - 1, y0 = 0, y1 = h - 1;
        if (std::isfinite(k)) {
            // Pixel centers px + 0.5 within the cutoff ellipse's bounding box.
            const double ex = std::sqrt(k * p.cov2d(0, 0));
            const double ey = std::sqrt(k * p.cov2d(1, 1));
            const double lo_x = std::ceil(p.mean2d.x() - ex - 0.5);
            const double hi_x = std::floor(p.mean2d.x() + ex - 0.5);
            const double lo_y = std::ceil(p.mean2d.y() - ey - 0.5);
            const double hi_y = std::floor(p.mean2d.y() + ey - 0.5);
            if (hi_x < 0 || hi_y < 0 || lo_x > w - 1 || lo_y > h - 1) continue;
            x0 = static_cast<int>(std::max(lo_x, 0.0));
            x1 = static_cast<int>(std::min(hi_x, double(w - 1)));
            y0 = static_cast<int>(std::max(lo_y, 0.0));
            y1 = static_cast<int>(std::min(hi_y, double(h - 1)));
        }
        for (int ty = y0 / bins.tile; ty <= y1 / bins.tile; ++ty)
            for (int tx = x0 / bins.tile; tx <= x1 / bins.tile; ++tx)
                bins.lists[static_cast<std::size_t>(ty) * bins.tiles_x + tx].push_back(idx);
    }
    return bins;
}

struct PixelContribution {
    std::uint32_t pos; // index into the tile list
    double g;
    double alpha;
    double t_before;
    bool clipped;
};

} // namespace

Image render(const SplatCloud& cloud, const Camera& cam, int out_w, int out_h,
             const RenderConfig& cfg) {
    Image img(out_w, out_h, 4);
    const std::vector<ProjectedSplat> sorted = project_sorted(cloud, cam, cfg);
    if (sorted.empty()) return img;
    const TileBins bins = bin_splats(sorted, out_w, out_h, cfg);
    const int n_tiles = static_cast<int>(bins.lists.size());
    float* out = img.data().data();

#pragma omp parallel for schedule(dynamic, 1)
    for (int t = 0; t < n_tiles; ++t) {
        const auto& list = bins.lists[t];
        if (list.empty()) continue;
        const int tx0 = (t % bins.tiles_x) * bins.tile;
        const int ty0 = (t / bins.tiles_x) * bins.tile;
        const int tx1 = std::min(tx0 + bins.tile, out_w);
        const int ty1 = std::min(ty0 + bins.tile, out_h);
        for (int py = ty0; py < ty1; ++py) {
            for (int px = tx0; px < tx1; ++px) {
                double trans = 1.0, r = 0.0, g = 0.0, b = 0.0, a = 0.0;
                for (std::uint32_t idx : list) {
                    const ProjectedSplat& p = sorted[idx];
                    const double falloff = gaussian_at(p, px, py);
                    if (falloff < cfg.min_gaussian) continue;
                    const double alpha = std::min(cfg.alpha_max, p.alpha_peak * falloff);
                    const double wgt = alpha * trans;
                    r += p.color.x() * wgt;
                    g += p.color.y() * wgt;
                    b += p.color.z() * wgt;
                    a += wgt;
                    trans *= 1.0 - alpha;
                }
                float* dst = out + (static_cast<std::size_t>(py) * out_w + px) * 4;
                dst[0] = static_cast<float>(r);
                dst[1] = static_cast<float>(g);
                dst[2] = static_cast<float>(b);
                dst[3] = static_cast<float>(a);
            }
        }
    }
    return img;
}

std::vector<double> alpha_sum_gradient(const SplatCloud& cloud, const Camera& view, int out_w,
                                       int out_h, const RenderConfig& cfg) {
    std::vector<double> grad(cloud.size(), 0.0);
    if (out_w < 1 || out_h < 1) throw ValidationError("salience: output size must be >= 1");
    const std::vector<ProjectedSplat> sorted = project_sorted(cloud, view, cfg);
    if (sorted.empty()) return grad;
    const TileBins bins = bin_splats(sorted, out_w, out_h, cfg);
    const int n_tiles = static_cast<int>(bins.lists.size());

    // Per-tile partial sums, reduced afterwards in tile order so the result
    // does not depend on scheduling.
    std::vector<std::vector<double>> partials(bins.lists.size());

#pragma omp parallel
    {
        std::vector<PixelContribution> contribs;
#pragma omp for schedule(dynamic, 1)
        for (int t = 0; t < n_tiles; ++t) {
            const auto& list = bins.lists[t];
            if (list.empty()) continue;
            auto& part = partials[t];
            part.assign(list.size(), 0.0);
            const int tx0 = (t % bins.tiles_x) * bins.tile;
            const int ty0 = (t / bins.tiles_x) * bins.tile;
            const int tx1 = std::min(tx0 + bins.tile, out_w);
            const int ty1 = std::min(ty0 + bins.tile, out_h);
            for (int py = ty0; py < ty1; ++py) {
                for (int px = tx0; px < tx1; ++px) {
                    contribs.clear();
                    double trans = 1.0;
                    for (std::uint32_t pos = 0; pos < list.size(); ++pos) {
                        const ProjectedSplat& p = sorted[list[pos]];
                        const double falloff = gaussian_at(p, px, py);
                        if (falloff < cfg.min_gaussian) continue;
                        const double raw = p.alpha_peak * falloff;
                        const bool clipped = raw > cfg.alpha_max;
                        const double alpha = clipped ? cfg.alpha_max : raw;
                        contribs.push_back({pos, falloff, alpha, trans, clipped});
                        trans *= 1.0 - alpha;
                    }
                    // A = 1 - prod(1 - a_j), so dA/do_k = g_k T_k prod_{j>k}(1 - a_j).
                    double suffix = 1.0;
                    for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
                        if (!it->clipped) part[it->pos] += it->g * it->t_before * suffix;
                        suffix *= 1.0 - it->alpha;
                    }
                }
            }
        }
    }

    for (std::size_t t = 0; t < bins.lists.size(); ++t) {
        const auto& list = bins.lists[t];
        const auto& part = partials[t];
        for (std::size_t pos = 0; pos < part.size(); ++pos)
            grad[sorted[list[pos]].storage_index] += part[pos];
    }
    return grad;
}

namespace {

std::vector<double> reduce_salience(const SplatCloud& cloud, const std::vector<Camera>& views,
                                    int out_w, int out_h, bool own_size, const RenderConfig& cfg,
                                    SalienceReduction reduction) {
    if (views.empty()) throw ValidationError("salience: at least one view required");
    std::vector<double> total(cloud.size(), 0.0);
    for (const Camera& v : views) {
        const int w = own_size ? v.width() : out_w;
        const int h = own_size ? v.height() : out_h;
        const std::vector<double> g = alpha_sum_gradient(cloud, v, w, h, cfg);
        for (std::size_t i = 0; i < g.size(); ++i)
            total[i] += reduction == SalienceReduction::SumOfAbs ? std::abs(g[i]) : g[i];
    }
    if (reduction == SalienceReduction::AbsOfSum)
        for (double& v : total) v = std::abs(v);
    return total;
}

} // namespace

std::vector<double> splat_salience(const SplatCloud& cloud, const std::vector<Camera>& views,
                                   int out_w, int out_h, const RenderConfig& cfg,
                                   SalienceReduction reduction) {
    return reduce_salience(cloud, views, out_w, out_h, false, cfg, reduction);
}

std::vector<double> splat_salience(const SplatCloud& cloud, const std::vector<Camera>& views,
                                   const RenderConfig& cfg, SalienceReduction reduction) {
    return reduce_salience(cloud, views, 0, 0, true, cfg, reduction);
}

int view_coverage(const Splat& s, const std::vector<Camera>& views, CoverageMode mode,
                  const RenderConfig& cfg) {
    int count = 0;
    for (const Camera& cam : views) {
        if (mode == CoverageMode::Center) {
            const Vec3d pc = cam.to_camera(s.position().cast<double>());
            if (!(pc.z() > cfg.near_plane)) continue;
            const double x = cam.fx() * pc.x() / pc.z() + cam.cx();
            const double y = cam.fy() * pc.y() / pc.z() + cam.cy();
            if (x >= 0 && x < cam.width() && y >= 0 && y < cam.height()) ++count;
        } else {
            const auto p = project_splat(cam, s, cfg);
            if (!p) continue;
            const double k = -2.0 * std::log(std::max(cfg.min_gaussian, 1e-300));
            const double ex = std::sqrt(k * p->cov2d(0, 0));
            const double ey = std::sqrt(k * p->cov2d(1, 1));
            if (p->mean2d.x() + ex >= 0 && p->mean2d.x() - ex < cam.width() &&
                p->mean2d.y() + ey >= 0 && p->mean2d.y() - ey < cam.height())
                ++count;
        }
    }
    return count;
}

} // namespace gsav
