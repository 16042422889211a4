// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gsav/core.hpp>
#include <gsav/raymap.hpp>
#include <gsav/renderer.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace gsav {

/// Half-open timestep interval (lo, hi].
struct TimeWindow {
    int lo = 0;
    int hi = 0;

    bool contains(int t) const { return t > lo && t <= hi; }
    bool empty() const { return hi <= lo; }

    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

inline constexpr int kDefaultTimesteps = 1000;
inline constexpr double kDefaultBetaStart = 0.00085;
inline constexpr double kDefaultBetaEnd = 0.012;
inline constexpr int kDefaultSamplingSteps = 50;
inline constexpr TimeWindow kDefaultJointWindow{500, 900};
inline constexpr TimeWindow kDefaultRefineJointWindow{350, 500};
inline constexpr double kDefaultRefineStrength = 0.5;

/// Discrete noise schedule. Timesteps run 1..T; index 0 is the clean state
/// with alpha_bar(0) = 1.
struct DiffusionSchedule {
    int num_timesteps = kDefaultTimesteps;
    std::vector<double> betas;      // betas[t - 1] for t in 1..T
    std::vector<double> alpha_bars; // alpha_bars[t] for t in 0..T
    std::vector<int> sampling_steps; // strictly decreasing, all in [1, T]
    TimeWindow joint_window = kDefaultJointWindow;
    TimeWindow refine_joint_window = kDefaultRefineJointWindow;
    double eta = 0.0;

    double alpha_bar(int t) const { return alpha_bars.at(static_cast<std::size_t>(t)); }

    /// Throws ValidationError if any invariant fails.
    void validate() const;
};

/// Betas linear in square-root space between beta_start and beta_end, then
/// squared; `steps` uniformly strided sampling timesteps from T down.
DiffusionSchedule make_schedule(int num_timesteps = kDefaultTimesteps,
                                double beta_start = kDefaultBetaStart,
                                double beta_end = kDefaultBetaEnd,
                                int steps = kDefaultSamplingSteps);

/// x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps, eps ~ N(0, 1) per element from
/// `seed`. t = 0 returns x0.
Image add_noise(const Image& x0, int t, const DiffusionSchedule& schedule, std::uint64_t seed);

/// Standard normal image of the given shape.
Image gaussian_noise_like(const Image& shape, std::uint64_t seed);

/// One DDIM-style update from t to t_prev given the clean prediction.
Image reverse_step(const Image& x_t, const Image& x0_hat, int t, int t_prev,
                   const DiffusionSchedule& schedule, std::uint64_t seed);

/// Noise scale of reverse_step; zero when eta is zero or t_prev is 0.
double reverse_sigma(const DiffusionSchedule& schedule, int t, int t_prev);

// ---------------------------------------------------------------------------
// Views and plug-ins
// ---------------------------------------------------------------------------

struct InputView {
    Image image;
    std::optional<Image> pose_map; // opaque conditioning
    RayMap ray_map;                // width 0 means absent
    Camera camera;
};

struct TargetView {
    Image image; // noisy state x^t, or a clean render before refinement
    std::optional<Image> pose_map;
    RayMap ray_map;
    Camera camera;
};

struct ViewBundle {
    std::vector<InputView> inputs;
    std::vector<TargetView> targets;

    /// Throws ValidationError when a ray map or pose map disagrees with its
    /// image resolution.
    void validate() const;
};

/// Multi-view denoiser: predicts clean target images at timestep t.
class Denoiser {
  public:
    virtual ~Denoiser() = default;
    virtual std::vector<Image> predict_clean(const ViewBundle& bundle, int t) = 0;
};

/// Feed-forward 3D reconstructor from clean target predictions.
class Generator {
  public:
    virtual ~Generator() = default;
    virtual SplatCloud generate(const ViewBundle& bundle, const std::vector<Image>& clean,
                                int t) = 0;
};

/// Snapshot handed to a StepObserver after each reverse step.
struct StepRecord {
    int t = 0;
    int t_prev = 0;
    bool joint = false;
    /// Clean predictions fed to reverse_step (renders of `cloud` for the
    /// replaced views on a joint step).
    const std::vector<Image>* clean = nullptr;
    const SplatCloud* cloud = nullptr; // joint steps only
    const std::vector<Image>* next = nullptr; // x at t_prev
};

using StepObserver = std::function<void(const StepRecord&)>;

struct SampleOptions {
    /// Per target view: replace its clean prediction with the render of the
    /// generated cloud. Empty means every view.
    std::vector<bool> replace_mask;
    RenderConfig render;
    StepObserver observer;
};

struct SampleResult {
    std::vector<Image> images;
    SplatCloud cloud;
};

/// Joint diffusion-reconstruction sampling over schedule.sampling_steps,
/// starting from the bundle's target images as x at the first step. Inside
/// schedule.joint_window the generator is called and its renders replace the
/// clean predictions. A final generator call at t = 0 produces the cloud.
SampleResult joint_sample(ViewBundle bundle, Denoiser& denoiser, Generator& generator,
                          const DiffusionSchedule& schedule, std::uint64_t seed,
                          const SampleOptions& options = {});

/// Image-to-image refinement: targets carry clean renders, which are noised
/// to the first sampling step at or below round(strength * T) and denoised
/// with refine_joint_window as the joint window.
SampleResult refine_images(ViewBundle bundle, double strength, Denoiser& denoiser,
                           Generator& generator, const DiffusionSchedule& schedule,
                           std::uint64_t seed, const SampleOptions& options = {});

/// Render converted to the channel layout of `like` (1: alpha, 3: RGB,
/// 4: RGBA).
Image render_like(const SplatCloud& cloud, const Camera& cam, const Image& like,
                  const RenderConfig& cfg = {});

} // namespace gsav
