// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Brute-force reference implementations and synthetic scenes. These are
// the serial ground truth the parallel kernels are tested against, and the
// plug-ins that let the diffusion loop run without a neural model.

#include <gsav/composition.hpp>
#include <gsav/core.hpp>
#include <gsav/cropping.hpp>
#include <gsav/diffusion.hpp>
#include <gsav/renderer.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace gsav::oracle {

inline constexpr std::size_t kMaxOracleSplats = 1000;

/// Exhaustive per-pixel compositing of every splat in depth order: same
/// projection, sort and alpha clip as gsav::render, no tiling and no
/// contribution cutoff. Throws GuardError above kMaxOracleSplats.
Image oracle_render(const SplatCloud& cloud, const Camera& cam, int w, int h,
                    const RenderConfig& cfg = {});

/// Sum over pixels of the oracle alpha channel, in double precision.
/// `opacity_delta` is added to the peak alpha of splat `perturbed`
/// (storage index) before compositing; pass perturbed = SIZE_MAX for none.
double oracle_alpha_sum(const SplatCloud& cloud, const Camera& cam, int w, int h,
                        const RenderConfig& cfg = {}, std::size_t perturbed = SIZE_MAX,
                        double opacity_delta = 0.0);

/// Central finite difference of the alpha sum w.r.t. each splat's opacity,
/// |.| summed over views.
std::vector<double> oracle_salience_fd(const SplatCloud& cloud, const std::vector<Camera>& views,
                                       int w, int h, double step, const RenderConfig& cfg = {});

/// Four inward-facing cameras at 90 degree azimuth spacing (front, left,
/// back, right) around `center`, world +y up.
std::vector<Camera> canonical_orbit_cameras(const Vec3d& center, double distance, double focal,
                                            int width, int height);

struct SceneDescriptor {
    int count = 20;
    double extent = 1.0;
    double opacity_min = 0.2;
    double opacity_max = 0.9;
    /// Splat standard deviations, as fractions of `extent`.
    double scale_min = 0.02;
    double scale_max = 0.08;
    int width = 64;
    int height = 64;
    /// Focal length as a multiple of the image width.
    double focal_factor = 1.0;

    void validate() const;
};

struct SyntheticScene {
    SplatCloud cloud;
    std::vector<Camera> cameras;
    std::uint64_t seed = 0;
    SceneDescriptor descriptor;
};

/// Splats uniform in an extent-sized cube, four orbit cameras around the
/// centroid, then normalized so the camera distance is 1.5 m.
/// Bit-reproducible from (descriptor, seed).
SyntheticScene make_scene(const SceneDescriptor& descriptor, std::uint64_t seed);

/// Oracle render converted to the channel layout of `like`.
Image oracle_render_like(const SplatCloud& cloud, const Camera& cam, const Image& like,
                         const RenderConfig& cfg = {});

/// Returns ground-truth renders of a fixed cloud for the requested target
/// cameras at every t. With noise_magnitude > 0 it adds seeded noise scaled
/// by magnitude * t / T.
class OracleDenoiser : public Denoiser {
  public:
    explicit OracleDenoiser(SplatCloud cloud, double noise_magnitude = 0.0,
                            std::uint64_t seed = 0, int num_timesteps = kDefaultTimesteps,
                            RenderConfig cfg = {});

    std::vector<Image> predict_clean(const ViewBundle& bundle, int t) override;

  private:
    SplatCloud cloud_;
    double noise_magnitude_;
    std::uint64_t seed_;
    int num_timesteps_;
    RenderConfig cfg_;
};

/// Returns the bound cloud regardless of inputs.
class OracleGenerator : public Generator {
  public:
    explicit OracleGenerator(SplatCloud cloud) : cloud_(std::move(cloud)) {}

    SplatCloud generate(const ViewBundle&, const std::vector<Image>&, int) override {
        return cloud_;
    }

  private:
    SplatCloud cloud_;
};

/// Bundle with one target per scene camera, each carrying its oracle ray map
/// and a pure-noise image (RGB); the first camera also serves as the input
/// view with its ground-truth render.
ViewBundle make_bundle(const SyntheticScene& scene, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Part scenes for composition
// ---------------------------------------------------------------------------

struct PartSceneDescriptor {
    int splats_per_part = 60;
    int view_size = 64;
    double focal = 64.0;
    double jitter = 0.01; // meters, applied to joint positions
};

/// A synthetic standing figure (world +y up, feet to head in [-0.5, 0.5])
/// reconstructed per part. Part views are crop cameras of four global orbit
/// cameras, cropped by part_crop_box from projected joints.
struct PartScene {
    PartViews parts;
    std::vector<Camera> global_cameras;
    /// source_index values of Full splats duplicating head geometry.
    std::vector<std::uint32_t> full_head_duplicates;
    /// source_index values of Full splats seen by fewer than 3 own views.
    std::vector<std::uint32_t> full_floaters;
    /// source_index of an Upper splat straddling the Upper/Lower seam.
    std::uint32_t upper_seam_splat = 0;
};

PartScene make_part_scene(const PartSceneDescriptor& descriptor, std::uint64_t seed);

/// Re-derives every composition decision independently: coverage by direct
/// pinhole projection, salience by central finite differences of the oracle
/// alpha sum. Checks that each dropped splat fails exactly the rule it is
/// logged under (and none earlier), that each kept splat fails none, and
/// that the output cloud matches the log. Decisions whose salience
/// comparison is within the finite-difference tolerance are accepted either
/// way. Returns one message per problem; empty means the audit passed.
/// Requires CoverageMode::Center.
std::vector<std::string> audit_composition(const PartViews& parts, const CompositionConfig& cfg,
                                           const CompositionResult& result);

} // namespace gsav::oracle
