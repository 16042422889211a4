// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include <gsav/raymap.hpp>

#include <cmath>

namespace gsav {

void CropBox::validate() const {
    if (!std::isfinite(x_tl) || !std::isfinite(y_tl) || !std::isfinite(x_br) ||
        !std::isfinite(y_br))
        throw ValidationError("crop box: non-finite coordinate");
    if (!(x_br > x_tl) || !(y_br > y_tl)) throw ValidationError("crop box: zero or negative area");
}

int embedding_channels(EmbeddingKind kind, int octaves) {
    return kind == EmbeddingKind::Plucker ? 6 : 6 * 2 * octaves;
}

Ray pixel_ray(const Camera& camera, double i, double j) {
    const Vec3d d_cam((i + 0.5 - camera.cx()) / camera.fx(), (j + 0.5 - camera.cy()) / camera.fy(),
                      1.0);
    const Vec3d d_world = camera.rotation().transpose() * d_cam;
    return {camera.center(), d_world.normalized()};
}

std::array<double, 6> plucker_embed(const Vec3d& origin, const Vec3d& direction) {
    const Vec3d m = origin.cross(direction);
    return {origin.x(), origin.y(), origin.z(), m.x(), m.y(), m.z()};
}

std::vector<double> sinusoidal_embed(const Vec3d& origin, const Vec3d& direction, int octaves) {
    if (octaves < 1) throw ValidationError("sinusoidal_embed: octaves must be >= 1");
    const double v[6] = {origin.x(),    origin.y(),    origin.z(),
                         direction.x(), direction.y(), direction.z()};
    std::vector<double> out(static_cast<std::size_t>(12 * octaves));
    for (int s = 0; s < 6; ++s) {
        double freq = 1.0;
        for (int k = 0; k < octaves; ++k, freq *= 2.0) {
            const std::size_t base = (static_cast<std::size_t>(s) * octaves + k) * 2;
            out[base] = std::sin(freq * v[s]);
            out[base + 1] = std::cos(freq * v[s]);
        }
    }
    return out;
}

Vec2d crop_to_global(const CropBox& box, double u, double v, int w, int h) {
    return {box.x_tl + (box.x_br - box.x_tl) * u / w, box.y_tl + (box.y_br - box.y_tl) * v / h};
}

CropBox compose_crops(const CropBox& outer, const CropBox& inner, int w, int h) {
    const Vec2d tl = crop_to_global(outer, inner.x_tl, inner.y_tl, w, h);
    const Vec2d br = crop_to_global(outer, inner.x_br, inner.y_br, w, h);
    return {tl.x(), tl.y(), br.x(), br.y()};
}

std::vector<Ray> ray_grid(const Camera& camera, const std::optional<CropBox>& box, int out_w,
                          int out_h) {
    if (out_w < 1 || out_h < 1) throw ValidationError("ray map: output size must be >= 1");
    if (box) box->validate();
    std::vector<Ray> rays(static_cast<std::size_t>(out_w) * out_h);
#pragma omp parallel for schedule(static)
    for (int v = 0; v < out_h; ++v) {
        for (int u = 0; u < out_w; ++u) {
            Vec2d ij(u, v);
            if (box) ij = crop_to_global(*box, u, v, out_w, out_h);
            rays[static_cast<std::size_t>(v) * out_w + u] = pixel_ray(camera, ij.x(), ij.y());
        }
    }
    return rays;
}

RayMap build_ray_map(const Camera& camera, const std::optional<CropBox>& box, int out_w, int out_h,
                     EmbeddingKind kind, int octaves) {
    if (kind == EmbeddingKind::Sinusoidal && octaves < 1)
        throw ValidationError("ray map: octaves must be >= 1");
    const std::vector<Ray> rays = ray_grid(camera, box, out_w, out_h);

    RayMap map;
    map.width = out_w;
    map.height = out_h;
    map.kind = kind;
    map.octaves = kind == EmbeddingKind::Sinusoidal ? octaves : 0;
    map.channels = embedding_channels(kind, octaves);
    map.values.resize(rays.size() * map.channels);

    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(rays.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < n; ++p) {
        float* dst = map.values.data() + p * map.channels;
        const Ray& r = rays[p];
        if (kind == EmbeddingKind::Plucker) {
            const auto e = plucker_embed(r.origin, r.direction);
            for (int c = 0; c < 6; ++c) dst[c] = static_cast<float>(e[c]);
        } else {
            const auto e = sinusoidal_embed(r.origin, r.direction, octaves);
            for (int c = 0; c < map.channels; ++c) dst[c] = static_cast<float>(e[c]);
        }
    }
    return map;
}

} // namespace gsav
