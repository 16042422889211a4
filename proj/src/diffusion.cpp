// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include <gsav/diffusion.hpp>
#include <gsav/random.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace gsav {

void DiffusionSchedule::validate() const {
    const int n = num_timesteps;
    if (n < 1) throw ValidationError("schedule: T must be >= 1");
    if (betas.size() != static_cast<std::size_t>(n) ||
        alpha_bars.size() != static_cast<std::size_t>(n) + 1)
        throw ValidationError("schedule: beta/alpha_bar lengths do not match T");
    for (double b : betas)
        if (!(b > 0.0 && b < 1.0)) throw ValidationError("schedule: betas must lie in (0, 1)");
    if (alpha_bars[0] != 1.0) throw ValidationError("schedule: alpha_bar(0) must be 1");
    for (int t = 1; t <= n; ++t)
        if (!(alpha_bars[t] < alpha_bars[t - 1]))
            throw ValidationError("schedule: alpha_bar must be strictly decreasing");
    for (std::size_t i = 0; i < sampling_steps.size(); ++i) {
        const int s = sampling_steps[i];
        if (s < 1 || s > n) throw ValidationError("schedule: sampling step outside [1, T]");
        if (i > 0 && !(s < sampling_steps[i - 1]))
            throw ValidationError("schedule: sampling steps must be strictly decreasing");
    }
    for (const TimeWindow& w : {joint_window, refine_joint_window})
        if (w.lo < 0 || w.hi > n || w.lo > w.hi)
            throw ValidationError("schedule: joint window must lie within [0, T]");
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw ValidationError("schedule: eta must be >= 0");
}

DiffusionSchedule make_schedule(int num_timesteps, double beta_start, double beta_end, int steps) {
    if (num_timesteps < 1) throw ValidationError("make_schedule: T must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw ValidationError("make_schedule: require 0 < beta_start <= beta_end < 1");
    if (steps < 1 || steps > num_timesteps)
        throw ValidationError("make_schedule: require 1 <= steps <= T");

    DiffusionSchedule s;
    s.num_timesteps = num_timesteps;
    s.betas.resize(num_timesteps);
    const double a = std::sqrt(beta_start), b = std::sqrt(beta_end);
    for (int i = 0; i < num_timesteps; ++i) {
        const double f = num_timesteps == 1 ? 0.0 : double(i) / double(num_timesteps - 1);
        const double r = a + (b - a) * f;
        s.betas[i] = r * r;
    }
    s.alpha_bars.resize(num_timesteps + 1);
    s.alpha_bars[0] = 1.0;
    for (int t = 1; t <= num_timesteps; ++t)
        s.alpha_bars[t] = s.alpha_bars[t - 1] * (1.0 - s.betas[t - 1]);

    s.sampling_steps.resize(steps);
    for (int k = 0; k < steps; ++k)
        s.sampling_steps[k] = static_cast<int>(
            (static_cast<long long>(num_timesteps) * (steps - k)) / steps);
    s.validate();
    return s;
}

Image gaussian_noise_like(const Image& shape, std::uint64_t seed) {
    Image out(shape.width(), shape.height(), shape.channels());
    Rng rng(seed);
    for (float& v : out.data()) v = static_cast<float>(rng.normal());
    return out;
}

Image add_noise(const Image& x0, int t, const DiffusionSchedule& schedule, std::uint64_t seed) {
    if (t < 0 || t > schedule.num_timesteps) throw ValidationError("add_noise: t outside [0, T]");
    const double ab = schedule.alpha_bar(t);
    const double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
    Image out = x0;
    Rng rng(seed);
    for (float& v : out.data()) v = static_cast<float>(sa * v + sn * rng.normal());
    return out;
}

double reverse_sigma(const DiffusionSchedule& schedule, int t, int t_prev) {
    const double ab_t = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(t_prev);
    if (schedule.eta == 0.0) return 0.0;
    return schedule.eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab_t)) *
           std::sqrt(std::max(0.0, 1.0 - ab_t / ab_prev));
}

Image reverse_step(const Image& x_t, const Image& x0_hat, int t, int t_prev,
                   const DiffusionSchedule& schedule, std::uint64_t seed) {
    if (!(t_prev < t)) throw ValidationError("reverse_step: require t_prev < t");
    if (t_prev < 0 || t > schedule.num_timesteps)
        throw ValidationError("reverse_step: timesteps outside [0, T]");
    if (!x_t.same_shape(x0_hat)) throw ValidationError("reverse_step: image shapes differ");

    const double ab_t = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(t_prev);
    const double sigma = reverse_sigma(schedule, t, t_prev);
    const double sa_t = std::sqrt(ab_t), sn_t = std::sqrt(1.0 - ab_t);
    const double sa_prev = std::sqrt(ab_prev);
    const double dir = std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma * sigma));

    Image out(x_t.width(), x_t.height(), x_t.channels());
    Rng rng(seed);
    const auto& xt = x_t.data();
    const auto& x0 = x0_hat.data();
    auto& dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const double eps = (double(xt[i]) - sa_t * double(x0[i])) / sn_t;
        double v = sa_prev * double(x0[i]) + dir * eps;
        if (sigma > 0.0) v += sigma * rng.normal();
        dst[i] = static_cast<float>(v);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_view(const Image& img, const std::optional<Image>& pose, const RayMap& rays,
                const std::string& what) {
    if (img.size() == 0) throw ValidationError(what + ": empty image");
    if (pose && (pose->width() != img.width() || pose->height() != img.height()))
        throw ValidationError(what + ": pose map resolution differs from image");
    if (rays.width != 0 && (rays.width != img.width() || rays.height != img.height()))
        throw ValidationError(what + ": ray map resolution differs from image");
}

} // namespace

void ViewBundle::validate() const {
    for (std::size_t i = 0; i < inputs.size(); ++i)
        check_view(inputs[i].image, inputs[i].pose_map, inputs[i].ray_map,
                   "input view " + std::to_string(i));
    for (std::size_t j = 0; j < targets.size(); ++j)
        check_view(targets[j].image, targets[j].pose_map, targets[j].ray_map,
                   "target view " + std::to_string(j));
}

Image render_like(const SplatCloud& cloud, const Camera& cam, const Image& like,
                  const RenderConfig& cfg) {
    const Image rgba = render(cloud, cam, like.width(), like.height(), cfg);
    if (like.channels() == 4) return rgba;
    Image out(like.width(), like.height(), like.channels());
    const std::size_t n = static_cast<std::size_t>(like.width()) * like.height();
    for (std::size_t p = 0; p < n; ++p) {
        if (like.channels() == 1) {
            out.data()[p] = rgba.data()[p * 4 + 3];
        } else {
            for (int c = 0; c < 3; ++c) out.data()[p * 3 + c] = rgba.data()[p * 4 + c];
        }
    }
    return out;
}

namespace {

void check_predictions(const std::vector<Image>& clean, const ViewBundle& bundle,
                       const char* who) {
    if (clean.size() != bundle.targets.size())
        throw InvariantError(std::string(who) + " returned " + std::to_string(clean.size()) +
                             " images for " + std::to_string(bundle.targets.size()) +
                             " target views");
    for (std::size_t j = 0; j < clean.size(); ++j) {
        if (!clean[j].same_shape(bundle.targets[j].image))
            throw InvariantError(std::string(who) + " output for target view " +
                                 std::to_string(j) + " has the wrong shape");
        for (float v : clean[j].data())
            if (!std::isfinite(v))
                throw InvariantError(std::string(who) + " output for target view " +
                                     std::to_string(j) + " is not finite");
    }
}

bool replaces(const SampleOptions& o, std::size_t j) {
    return o.replace_mask.empty() || (j < o.replace_mask.size() && o.replace_mask[j]);
}

SampleResult run_loop(ViewBundle bundle, Denoiser& denoiser, Generator& generator,
                      const DiffusionSchedule& schedule, const std::vector<int>& steps,
                      TimeWindow window, std::uint64_t seed, const SampleOptions& options) {
    const std::size_t k = bundle.targets.size();
    std::vector<Image> clean;
    std::vector<Image> next(k);

    for (std::size_t s = 0; s < steps.size(); ++s) {
        const int t = steps[s];
        const int t_prev = s + 1 < steps.size() ? steps[s + 1] : 0;

        clean = denoiser.predict_clean(bundle, t);
        check_predictions(clean, bundle, "denoiser");

        const bool joint = window.contains(t);
        SplatCloud cloud;
        if (joint) {
            cloud = generator.generate(bundle, clean, t);
            for (std::size_t j = 0; j < k; ++j)
                if (replaces(options, j))
                    clean[j] = render_like(cloud, bundle.targets[j].camera, bundle.targets[j].image,
                                           options.render);
        }

        const std::uint64_t step_seed = mix_seed(seed, static_cast<std::uint64_t>(t));
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(k); ++j)
            next[j] = reverse_step(bundle.targets[j].image, clean[j], t, t_prev, schedule,
                                   mix_seed(step_seed, static_cast<std::uint64_t>(j)));

        if (options.observer)
            options.observer(StepRecord{t, t_prev, joint, &clean, joint ? &cloud : nullptr, &next});
        for (std::size_t j = 0; j < k; ++j) bundle.targets[j].image = std::move(next[j]);
        next.assign(k, Image());
    }

    SampleResult result;
    result.images.reserve(k);
    for (const TargetView& tv : bundle.targets) result.images.push_back(tv.image);
    result.cloud = generator.generate(bundle, result.images, 0);
    return result;
}

} // namespace

SampleResult joint_sample(ViewBundle bundle, Denoiser& denoiser, Generator& generator,
                          const DiffusionSchedule& schedule, std::uint64_t seed,
                          const SampleOptions& options) {
    schedule.validate();
    bundle.validate();
    return run_loop(std::move(bundle), denoiser, generator, schedule, schedule.sampling_steps,
                    schedule.joint_window, seed, options);
}

SampleResult refine_images(ViewBundle bundle, double strength, Denoiser& denoiser,
                           Generator& generator, const DiffusionSchedule& schedule,
                           std::uint64_t seed, const SampleOptions& options) {
    if (!(strength > 0.0 && strength <= 1.0))
        throw ValidationError("refine_images: strength must lie in (0, 1]");
    schedule.validate();
    bundle.validate();

    const int t_start = static_cast<int>(std::lround(strength * schedule.num_timesteps));
    std::vector<int> steps;
    for (int s : schedule.sampling_steps)
        if (s <= t_start) steps.push_back(s);

    if (!steps.empty()) {
        const std::uint64_t noise_seed = mix_seed(seed, 0x5eedull);
        for (std::size_t j = 0; j < bundle.targets.size(); ++j)
            bundle.targets[j].image = add_noise(bundle.targets[j].image, steps.front(), schedule,
                                                mix_seed(noise_seed, j));
    }
    return run_loop(std::move(bundle), denoiser, generator, schedule, steps,
                    schedule.refine_joint_window, mix_seed(seed, 0x7e7eull), options);
}

} // namespace gsav
