// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include <gsav/oracle.hpp>
#include <gsav/random.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

namespace gsav::oracle {

namespace {

void guard(const SplatCloud& cloud) {
    if (cloud.size() > kMaxOracleSplats)
        throw GuardError("oracle: " + std::to_string(cloud.size()) + " splats exceeds the limit of " +
                         std::to_string(kMaxOracleSplats));
}

/// Straight-line compositing of one pixel over every projected splat.
template <typename Fn>
void composite_pixel(const std::vector<ProjectedSplat>& sorted, int px, int py, double alpha_max,
                     std::size_t perturbed, double delta, Fn&& emit) {
    double trans = 1.0;
    for (const ProjectedSplat& p : sorted) {
        double peak = p.alpha_peak;
        if (p.storage_index == perturbed) peak += delta;
        const double alpha = std::min(alpha_max, peak * gaussian_at(p, px, py));
        emit(p, alpha * trans);
        trans *= 1.0 - alpha;
    }
}

} // namespace

Image oracle_render(const SplatCloud& cloud, const Camera& cam, int w, int h,
                    const RenderConfig& cfg) {
    guard(cloud);
    Image img(w, h, 4);
    const std::vector<ProjectedSplat> sorted = project_sorted(cloud, cam, cfg);
    for (int py = 0; py < h; ++py) {
        for (int px = 0; px < w; ++px) {
            double rgba[4] = {0, 0, 0, 0};
            composite_pixel(sorted, px, py, cfg.alpha_max, SIZE_MAX, 0.0,
                            [&](const ProjectedSplat& p, double wgt) {
                                rgba[0] += p.color.x() * wgt;
                                rgba[1] += p.color.y() * wgt;
                                rgba[2] += p.color.z() * wgt;
                                rgba[3] += wgt;
                            });
            for (int c = 0; c < 4; ++c) img.at(px, py, c) = static_cast<float>(rgba[c]);
        }
    }
    return img;
}

double oracle_alpha_sum(const SplatCloud& cloud, const Camera& cam, int w, int h,
                        const RenderConfig& cfg, std::size_t perturbed, double opacity_delta) {
    guard(cloud);
    const std::vector<ProjectedSplat> sorted = project_sorted(cloud, cam, cfg);
    double sum = 0.0;
    for (int py = 0; py < h; ++py)
        for (int px = 0; px < w; ++px)
            composite_pixel(sorted, px, py, cfg.alpha_max, perturbed, opacity_delta,
                            [&](const ProjectedSplat&, double wgt) { sum += wgt; });
    return sum;
}

std::vector<double> oracle_salience_fd(const SplatCloud& cloud, const std::vector<Camera>& views,
                                       int w, int h, double step, const RenderConfig& cfg) {
    if (!(step > 0)) throw ValidationError("oracle_salience_fd: step must be > 0");
    std::vector<double> out(cloud.size(), 0.0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (const Camera& v : views) {
            const double plus = oracle_alpha_sum(cloud, v, w, h, cfg, i, step);
            const double minus = oracle_alpha_sum(cloud, v, w, h, cfg, i, -step);
            out[i] += std::abs((plus - minus) / (2.0 * step));
        }
    }
    return out;
}

Image oracle_render_like(const SplatCloud& cloud, const Camera& cam, const Image& like,
                         const RenderConfig& cfg) {
    const Image rgba = oracle_render(cloud, cam, like.width(), like.height(), cfg);
    if (like.channels() == 4) return rgba;
    Image out(like.width(), like.height(), like.channels());
    const std::size_t n = static_cast<std::size_t>(like.width()) * like.height();
    for (std::size_t p = 0; p < n; ++p) {
        if (like.channels() == 1)
            out.data()[p] = rgba.data()[p * 4 + 3];
        else
            for (int c = 0; c < 3; ++c) out.data()[p * 3 + c] = rgba.data()[p * 4 + c];
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<Camera> canonical_orbit_cameras(const Vec3d& center, double distance, double focal,
                                            int width, int height) {
    std::vector<Camera> cams;
    for (int k = 0; k < 4; ++k) {
        const double a = k * std::numbers::pi / 2.0;
        const Vec3d eye = center + distance * Vec3d(std::sin(a), 0.0, -std::cos(a));
        cams.push_back(look_at_camera(eye, center, Vec3d::UnitY(), focal, focal, 0.5 * width,
                                      0.5 * height, width, height));
    }
    return cams;
}

void SceneDescriptor::validate() const {
    if (count < 1) throw ValidationError("scene: count must be >= 1");
    if (!(extent > 0)) throw ValidationError("scene: extent must be > 0");
    if (!(opacity_min >= 0 && opacity_min <= opacity_max && opacity_max <= 1))
        throw ValidationError("scene: opacity range must satisfy 0 <= min <= max <= 1");
    if (!(scale_min > 0 && scale_min <= scale_max))
        throw ValidationError("scene: scale range must satisfy 0 < min <= max");
    if (width < 1 || height < 1) throw ValidationError("scene: width and height must be >= 1");
    if (!(focal_factor > 0)) throw ValidationError("scene: focal_factor must be > 0");
}

namespace {

Vec4f random_quaternion(Rng& rng) {
    Eigen::Vector4d q;
    do {
        q = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    } while (q.norm() < 1e-6);
    return (q / q.norm()).cast<float>();
}

} // namespace

SyntheticScene make_scene(const SceneDescriptor& d, std::uint64_t seed) {
    d.validate();
    Rng rng(seed);
    std::vector<Splat> splats;
    splats.reserve(d.count);
    for (int i = 0; i < d.count; ++i) {
        RawSplat r;
        r.position = Vec3f(float(rng.uniform(-0.5, 0.5) * d.extent),
                           float(rng.uniform(-0.5, 0.5) * d.extent),
                           float(rng.uniform(-0.5, 0.5) * d.extent));
        r.rotation = random_quaternion(rng);
        for (int k = 0; k < 3; ++k)
            r.scale[k] = float(rng.uniform(d.scale_min, d.scale_max) * d.extent);
        r.opacity = float(rng.uniform(d.opacity_min, d.opacity_max));
        r.color = Vec3f(float(rng.uniform()), float(rng.uniform()), float(rng.uniform()));
        splats.push_back(validate_splat(r));
    }
    SplatCloud cloud(PartLabel::Full, std::move(splats));
    const auto cams = canonical_orbit_cameras(centroid(cloud), 2.0 * d.extent,
                                              d.focal_factor * d.width, d.width, d.height);
    NormalizedScene n = normalize_scene(cloud, cams);
    return {std::move(n.cloud), std::move(n.cameras), seed, d};
}

// ---------------------------------------------------------------------------

OracleDenoiser::OracleDenoiser(SplatCloud cloud, double noise_magnitude, std::uint64_t seed,
                               int num_timesteps, RenderConfig cfg)
    : cloud_(std::move(cloud)), noise_magnitude_(noise_magnitude), seed_(seed),
      num_timesteps_(num_timesteps), cfg_(cfg) {
    guard(cloud_);
    if (!(noise_magnitude >= 0)) throw ValidationError("noisy oracle: magnitude must be >= 0");
}

std::vector<Image> OracleDenoiser::predict_clean(const ViewBundle& bundle, int t) {
    std::vector<Image> out;
    out.reserve(bundle.targets.size());
    for (std::size_t j = 0; j < bundle.targets.size(); ++j) {
        Image img = oracle_render_like(cloud_, bundle.targets[j].camera, bundle.targets[j].image,
                                       cfg_);
        if (noise_magnitude_ > 0.0) {
            const double amp = noise_magnitude_ * double(t) / double(num_timesteps_);
            Rng rng(mix_seed(seed_, static_cast<std::uint64_t>(t), j));
            for (float& v : img.data()) v = static_cast<float>(v + amp * rng.normal());
        }
        out.push_back(std::move(img));
    }
    return out;
}

ViewBundle make_bundle(const SyntheticScene& scene, std::uint64_t seed) {
    const int w = scene.descriptor.width, h = scene.descriptor.height;
    ViewBundle b;
    const Image shape(w, h, 3);
    InputView in;
    in.camera = scene.cameras.front();
    in.image = oracle_render_like(scene.cloud, in.camera, shape);
    in.ray_map = build_ray_map(in.camera, std::nullopt, w, h, EmbeddingKind::Sinusoidal);
    b.inputs.push_back(std::move(in));
    for (std::size_t j = 0; j < scene.cameras.size(); ++j) {
        TargetView tv;
        tv.camera = scene.cameras[j];
        tv.image = gaussian_noise_like(shape, mix_seed(seed, j));
        tv.ray_map = build_ray_map(tv.camera, std::nullopt, w, h, EmbeddingKind::Sinusoidal);
        b.targets.push_back(std::move(tv));
    }
    return b;
}

// ---------------------------------------------------------------------------

namespace {

Vec2d project_point(const Camera& cam, const Vec3d& world) {
    const Vec3d pc = cam.to_camera(world);
    return {cam.fx() * pc.x() / pc.z() + cam.cx() - 0.5, cam.fy() * pc.y() / pc.z() + cam.cy() - 0.5};
}

Splat body_splat(Rng& rng, const Vec3d& pos, double sigma_lo, double sigma_hi, const Vec3f& tint) {
    RawSplat r;
    r.position = pos.cast<float>();
    r.rotation = random_quaternion(rng);
    for (int k = 0; k < 3; ++k) r.scale[k] = float(rng.uniform(sigma_lo, sigma_hi));
    r.opacity = float(rng.uniform(0.5, 0.9));
    for (int c = 0; c < 3; ++c) r.color[c] = std::clamp(tint[c] + float(rng.uniform(-0.1, 0.1)), 0.f, 1.f);
    return validate_splat(r);
}

Vec3d in_cylinder(Rng& rng, double y_lo, double y_hi, double radius, const Vec3d& axis_origin) {
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double r = radius * std::sqrt(rng.uniform());
    return axis_origin + Vec3d(r * std::cos(a), rng.uniform(y_lo, y_hi), r * std::sin(a));
}

} // namespace

PartScene make_part_scene(const PartSceneDescriptor& d, std::uint64_t seed) {
    if (d.splats_per_part < 1 || d.view_size < 8 || !(d.focal > 0))
        throw ValidationError("part scene: invalid descriptor");
    Rng rng(seed);
    const int n = d.view_size;
    PartScene scene;
    scene.global_cameras =
        canonical_orbit_cameras(Vec3d::Zero(), kCanonicalCameraDistance, d.focal, n, n);

    auto jitter = [&] {
        return Vec3d(rng.uniform(-d.jitter, d.jitter), rng.uniform(-d.jitter, d.jitter),
                     rng.uniform(-d.jitter, d.jitter));
    };
    // Proportions put the Upper and Lower crops in a narrow overlap at the
    // pelvis and the Head crop inside the Upper crop's top.
    const Vec3d pelvis = Vec3d(0, 0, 0) + jitter();
    const Vec3d neck = Vec3d(0, 0.22, 0) + jitter();
    const Vec3d l_ankle = Vec3d(-0.08, -0.22, 0) + jitter();
    const Vec3d r_ankle = Vec3d(0.08, -0.22, 0) + jitter();
    const Vec3d l_ear = Vec3d(-0.07, 0.38, 0) + jitter();
    const Vec3d r_ear = Vec3d(0.07, 0.38, 0) + jitter();
    const Vec3d head_center = 0.5 * (l_ear + r_ear);

    std::array<std::vector<Camera>, 4> views;
    for (const Camera& g : scene.global_cameras) {
        Joints2D j;
        j[Joint::Pelvis] = project_point(g, pelvis);
        j[Joint::Neck] = project_point(g, neck);
        j[Joint::LeftAnkle] = project_point(g, l_ankle);
        j[Joint::RightAnkle] = project_point(g, r_ankle);
        j[Joint::LeftEar] = project_point(g, l_ear);
        j[Joint::RightEar] = project_point(g, r_ear);
        Vec2d lo = Vec2d::Constant(1e300), hi = Vec2d::Constant(-1e300);
        for (int c = 0; c < 8; ++c) {
            const Vec3d corner((c & 1) ? 0.15 : -0.15, (c & 2) ? 0.5 : -0.5, (c & 4) ? 0.15 : -0.15);
            const Vec2d p = project_point(g, corner);
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        const CropBox mask{lo.x(), lo.y(), hi.x(), hi.y()};
        for (PartLabel p : kAllParts)
            views[static_cast<std::size_t>(p)].push_back(
                crop_camera(g, part_crop_box(j, mask, p, g), n, n));
    }

    const int m = d.splats_per_part;
    const Vec3d axis = pelvis;

    // Full: whole body, head duplicates, and two floaters seen only from the
    // side cameras.
    std::vector<Splat> full;
    for (int i = 0; i < m; ++i)
        full.push_back(body_splat(rng, in_cylinder(rng, -0.45, 0.45, 0.1, axis), 0.01, 0.02,
                                  Vec3f(0.5f, 0.5f, 0.5f)));
    for (int i = 0; i < 6; ++i) {
        scene.full_head_duplicates.push_back(static_cast<std::uint32_t>(full.size()));
        full.push_back(body_splat(rng, head_center + Vec3d(rng.uniform(-0.03, 0.03),
                                                           rng.uniform(-0.03, 0.03),
                                                           rng.uniform(-0.03, 0.03)),
                                  0.01, 0.015, Vec3f(0.8f, 0.6f, 0.5f)));
    }
    for (double x : {0.9, -0.9}) {
        scene.full_floaters.push_back(static_cast<std::uint32_t>(full.size()));
        full.push_back(body_splat(rng, Vec3d(x, rng.uniform(-0.2, 0.2), 0.0), 0.01, 0.02,
                                  Vec3f(0.2f, 0.9f, 0.2f)));
    }

    // Upper: torso plus one splat centered just inside the bottom edge of
    // every Upper view, so most of its footprint falls outside them.
    const auto& upper_views = views[static_cast<std::size_t>(PartLabel::Upper)];
    double edge_y = -1e300;
    for (const Camera& c : upper_views) {
        // Cameras are level, so camera y is -world y.
        const Vec3d pc = c.to_camera(axis);
        edge_y = std::max(edge_y, -(c.height() - c.cy()) * pc.z() / c.fy());
    }
    std::vector<Splat> upper;
    for (int i = 0; i < m; ++i)
        upper.push_back(body_splat(rng, in_cylinder(rng, 0.0, 0.3, 0.1, axis), 0.008, 0.015,
                                   Vec3f(0.3f, 0.3f, 0.8f)));
    scene.upper_seam_splat = static_cast<std::uint32_t>(upper.size());
    {
        RawSplat r;
        r.position = Vec3d(axis.x(), edge_y + 0.004, axis.z()).cast<float>();
        r.scale = Vec3f::Constant(0.02f);
        r.opacity = 0.8f;
        r.color = Vec3f(1.f, 0.f, 0.f);
        upper.push_back(validate_splat(r));
    }

    std::vector<Splat> lower;
    for (int i = 0; i < m; ++i)
        lower.push_back(body_splat(rng, in_cylinder(rng, -0.45, 0.0, 0.1, axis), 0.008, 0.015,
                                   Vec3f(0.6f, 0.3f, 0.2f)));

    std::vector<Splat> head;
    for (int i = 0; i < m; ++i)
        head.push_back(body_splat(rng, in_cylinder(rng, -0.05, 0.05, 0.05, head_center), 0.004,
                                  0.008, Vec3f(0.8f, 0.6f, 0.5f)));

    auto add = [&](PartLabel p, std::vector<Splat> s) {
        scene.parts.push_back({SplatCloud(p, std::move(s)), views[static_cast<std::size_t>(p)]});
    };
    add(PartLabel::Full, std::move(full));
    add(PartLabel::Upper, std::move(upper));
    add(PartLabel::Lower, std::move(lower));
    add(PartLabel::Head, std::move(head));
    return scene;
}

// ---------------------------------------------------------------------------

namespace {

int projected_coverage(const Splat& s, const std::vector<Camera>& views, double near) {
    int n = 0;
    for (const Camera& c : views) {
        const Vec3d p = c.to_camera(s.position().cast<double>());
        if (p.z() <= near) continue;
        const double u = c.fx() * p.x() / p.z() + c.cx();
        const double v = c.fy() * p.y() / p.z() + c.cy();
        n += u >= 0 && u < c.width() && v >= 0 && v < c.height();
    }
    return n;
}

/// Finite-difference salience of one splat under a set of views.
double fd_salience(const SplatCloud& cloud, std::size_t i, const std::vector<Camera>& views,
                   const CompositionConfig& cfg, double step) {
    double sum_abs = 0.0, sum = 0.0;
    for (const Camera& v : views) {
        const double g = (oracle_alpha_sum(cloud, v, v.width(), v.height(), cfg.render, i, step) -
                          oracle_alpha_sum(cloud, v, v.width(), v.height(), cfg.render, i, -step)) /
                         (2.0 * step);
        sum_abs += std::abs(g);
        sum += g;
    }
    return cfg.salience_reduction == SalienceReduction::SumOfAbs ? sum_abs : std::abs(sum);
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-3 * std::max(a, b) + 1e-6; }

} // namespace

std::vector<std::string> audit_composition(const PartViews& parts, const CompositionConfig& cfg,
                                           const CompositionResult& result) {
    if (cfg.coverage_mode != CoverageMode::Center)
        throw ValidationError("audit_composition: only center coverage is supported");
    constexpr double kStep = 1e-4;
    std::vector<std::string> problems;
    std::array<const PartInput*, 4> table{};
    for (const PartInput& p : parts) table[static_cast<std::size_t>(p.cloud.part())] = &p;

    std::size_t expected_entries = 0;
    for (const PartInput* p : table)
        if (p) expected_entries += p->cloud.size();
    if (result.log.size() != expected_entries)
        problems.push_back("log has " + std::to_string(result.log.size()) + " entries for " +
                           std::to_string(expected_entries) + " input splats");

    std::size_t kept = 0;
    for (std::size_t k = 0; k < result.log.size(); ++k) {
        const Decision& d = result.log[k];
        const std::string who = std::string(part_name(d.origin.part)) + "#" +
                                std::to_string(d.origin.source_index);
        if (k > 0 && !(result.log[k - 1].origin < d.origin))
            problems.push_back(who + ": log out of order or duplicated");
        const PartInput* own = table[static_cast<std::size_t>(d.origin.part)];
        if (!own || d.origin.source_index >= own->cloud.size()) {
            problems.push_back(who + ": unknown splat");
            continue;
        }
        const auto& ids = own->cloud.source_index();
        const std::size_t pos = static_cast<std::size_t>(
            std::find(ids.begin(), ids.end(), d.origin.source_index) - ids.begin());
        const Splat& s = own->cloud[pos];
        const PartLabel p = d.origin.part;

        // Rule 1.
        const int cov_own = projected_coverage(s, own->views, cfg.render.near_plane);
        if (cov_own != d.coverage_own)
            problems.push_back(who + ": logged own coverage " + std::to_string(d.coverage_own) +
                               ", recomputed " + std::to_string(cov_own));
        const int min_cov = p == PartLabel::Head ? cfg.min_coverage_head : cfg.min_coverage_body;
        const bool fails_reliability = cov_own < min_cov;

        // Rule 2.
        bool fails_redundancy = false;
        for (PartLabel q : kAllParts) {
            const PartInput* other = table[static_cast<std::size_t>(q)];
            if (!other) continue;
            const int c = projected_coverage(s, other->views, cfg.render.near_plane);
            if (d.coverage_by_part[static_cast<std::size_t>(q)] != c)
                problems.push_back(who + ": logged coverage by " + std::string(part_name(q)) +
                                   " disagrees with projection");
            if (detail_level(q) > detail_level(p) && c >= cfg.redundancy_coverage)
                fails_redundancy = true;
        }

        // Rule 3, evaluated only where it decides the outcome.
        bool fails_salience = false, ambiguous = false;
        if (!fails_reliability && !fails_redundancy && cfg.salience_rule) {
            std::optional<double> other_sal;
            for (PartLabel q : kAllParts) {
                const PartInput* other = table[static_cast<std::size_t>(q)];
                if (!other || q == p || detail_level(q) != detail_level(p)) continue;
                const double v = fd_salience(own->cloud, pos, other->views, cfg, kStep);
                other_sal = std::max(other_sal.value_or(v), v);
            }
            if (other_sal) {
                const double own_sal = fd_salience(own->cloud, pos, own->views, cfg, kStep);
                if (!d.salience_other || !close(*d.salience_other, *other_sal) ||
                    !close(d.salience_own, own_sal))
                    problems.push_back(who + ": logged salience disagrees with finite differences");
                ambiguous = close(*other_sal, own_sal) ||
                            std::abs(*other_sal - cfg.salience_epsilon) <= 1e-6;
                fails_salience = *other_sal > own_sal && *other_sal > cfg.salience_epsilon;
            } else if (d.salience_other) {
                problems.push_back(who + ": salience logged without an equal-detail peer");
            }
        }

        const DropRule expected = fails_reliability  ? DropRule::Reliability
                                  : fails_redundancy ? DropRule::Redundancy
                                  : fails_salience   ? DropRule::Salience
                                                     : DropRule::None;
        const bool salience_call = expected == DropRule::Salience || expected == DropRule::None;
        const bool rule_ok = d.rule == expected ||
                             (ambiguous && salience_call &&
                              (d.rule == DropRule::Salience || d.rule == DropRule::None));
        if (!rule_ok)
            problems.push_back(who + ": logged rule '" + std::string(rule_name(d.rule)) +
                               "', audit expects '" + std::string(rule_name(expected)) + "'");
        if (d.kept != (d.rule == DropRule::None))
            problems.push_back(who + ": kept flag disagrees with rule");
        if (d.kept) {
            if (kept >= result.cloud.size() || !(result.cloud[kept] == s) ||
                result.origins.at(kept) != d.origin)
                problems.push_back(who + ": kept splat missing from the output at position " +
                                   std::to_string(kept));
            ++kept;
        }
    }
    if (kept != result.cloud.size())
        problems.push_back("output has " + std::to_string(result.cloud.size()) +
                           " splats, log keeps " + std::to_string(kept));
    return problems;
}

} // namespace gsav::oracle

