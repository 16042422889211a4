// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

#include <gsav/diffusion.hpp>
#include <gsav/oracle.hpp>
#include <gsav/parallel.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace gsav {
namespace {

Image test_image(std::uint64_t seed, int w = 16, int h = 12, int c = 3) {
    Image img(w, h, c);
    Rng rng(seed);
    for (float& v : img.data()) v = float(rng.uniform());
    return img;
}

TEST(Schedule, DefaultsAndEndpoints) {
    const DiffusionSchedule s = make_schedule();
    EXPECT_EQ(s.num_timesteps, 1000);
    EXPECT_EQ(s.sampling_steps.size(), 50u);
    EXPECT_EQ(s.sampling_steps.front(), 1000);
    EXPECT_EQ(s.sampling_steps.back(), 20);
    EXPECT_EQ(s.joint_window, (TimeWindow{500, 900}));
    EXPECT_EQ(s.refine_joint_window, (TimeWindow{350, 500}));
    EXPECT_EQ(s.eta, 0.0);
    EXPECT_EQ(s.alpha_bar(0), 1.0);
    EXPECT_NEAR(s.alpha_bar(1), 1.0 - 0.00085, 1e-12);
    EXPECT_LE(s.alpha_bar(1000), 1e-2);
    EXPECT_NEAR(s.betas.back(), 0.012, 1e-12);
}

TEST(Schedule, FullStepsAndMonotone) {
    const DiffusionSchedule s = make_schedule(1000, 0.001, 0.2, 1000);
    std::vector<int> want(1000);
    std::iota(want.rbegin(), want.rend(), 1);
    EXPECT_EQ(s.sampling_steps, want);
    for (int t = 1; t <= 1000; ++t) EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
}

TEST(Schedule, RejectsInvalidBounds) {
    EXPECT_THROW(make_schedule(1000, 0.0, 0.01, 50), ValidationError);
    EXPECT_THROW(make_schedule(1000, 0.02, 0.01, 50), ValidationError);
    EXPECT_THROW(make_schedule(1000, 0.001, 1.0, 50), ValidationError);
    EXPECT_THROW(make_schedule(1000, 0.001, 0.01, 0), ValidationError);
    EXPECT_THROW(make_schedule(10, 0.001, 0.01, 11), ValidationError);
    DiffusionSchedule s = make_schedule();
    s.joint_window = {500, 1200};
    EXPECT_THROW(s.validate(), ValidationError);
}

TEST(TimeWindowTest, HalfOpen) {
    const TimeWindow w{500, 900};
    EXPECT_FALSE(w.contains(500));
    EXPECT_TRUE(w.contains(501));
    EXPECT_TRUE(w.contains(900));
    EXPECT_FALSE(w.contains(901));
}

TEST(AddNoise, ZeroNoiseLimitAndDeterminism) {
    const DiffusionSchedule s = make_schedule();
    const Image x0 = test_image(1);
    EXPECT_EQ(add_noise(x0, 0, s, 5), x0);
    EXPECT_EQ(add_noise(x0, 700, s, 5), add_noise(x0, 700, s, 5));
    EXPECT_NE(add_noise(x0, 700, s, 5), add_noise(x0, 700, s, 6));
    EXPECT_THROW(add_noise(x0, 1001, s, 5), ValidationError);
}

TEST(AddNoise, ResidualVariance) {
    const DiffusionSchedule s = make_schedule();
    const Image x0 = test_image(2, 100, 100, 1);
    for (int t : {50, 400, 999}) {
        const Image xt = add_noise(x0, t, s, 9);
        const double sa = std::sqrt(s.alpha_bar(t));
        double sum = 0, sq = 0;
        for (std::size_t i = 0; i < x0.size(); ++i) {
            const double r = xt.data()[i] - sa * x0.data()[i];
            sum += r;
            sq += r * r;
        }
        const double n = double(x0.size());
        const double var = sq / n - (sum / n) * (sum / n);
        EXPECT_NEAR(var, 1.0 - s.alpha_bar(t), 0.05 * (1.0 - s.alpha_bar(t))) << "t=" << t;
    }
}

TEST(ReverseStep, TerminalStepReturnsPrediction) {
    const DiffusionSchedule s = make_schedule();
    const Image x0 = test_image(3);
    const Image xt = add_noise(test_image(4), 600, s, 1);
    EXPECT_EQ(reverse_step(xt, x0, 600, 0, s, 7), x0);
    EXPECT_THROW(reverse_step(xt, x0, 600, 600, s, 7), ValidationError);
}

TEST(ReverseStep, SigmaZeroWithoutEta) {
    const DiffusionSchedule s = make_schedule();
    for (std::size_t k = 0; k + 1 < s.sampling_steps.size(); ++k)
        EXPECT_EQ(reverse_sigma(s, s.sampling_steps[k], s.sampling_steps[k + 1]), 0.0);
    DiffusionSchedule noisy = s;
    noisy.eta = 1.0;
    EXPECT_GT(reverse_sigma(noisy, 500, 480), 0.0);
    EXPECT_EQ(reverse_sigma(noisy, 20, 0), 0.0);
}

TEST(ReverseStep, PerfectDenoiserRecoversSignal) {
    const DiffusionSchedule s = make_schedule();
    const Image x0 = test_image(5);
    Image x = add_noise(x0, s.num_timesteps, s, 3);
    for (std::size_t k = 0; k < s.sampling_steps.size(); ++k) {
        const int t = s.sampling_steps[k];
        const int t_prev = k + 1 < s.sampling_steps.size() ? s.sampling_steps[k + 1] : 0;
        x = reverse_step(x, x0, t, t_prev, s, k);
    }
    EXPECT_LE(max_abs_diff(x, x0), 1e-5);
}

struct Loop : ::testing::Test {
    oracle::SyntheticScene scene = oracle::make_scene(oracle::SceneDescriptor{.count = 20}, 21);
    ViewBundle bundle = oracle::make_bundle(scene, 4);
    DiffusionSchedule schedule = make_schedule();
    std::vector<Image> truth() const {
        std::vector<Image> out;
        for (const TargetView& t : bundle.targets)
            out.push_back(oracle::oracle_render_like(scene.cloud, t.camera, t.image));
        return out;
    }
};

TEST_F(Loop, BundleShape) {
    EXPECT_EQ(bundle.targets.size(), 4u);
    EXPECT_EQ(bundle.inputs.size(), 1u);
    EXPECT_NO_THROW(bundle.validate());
    EXPECT_EQ(bundle.targets[0].ray_map.channels, 96);
    ViewBundle bad = bundle;
    bad.targets[2].ray_map.width = 10;
    try {
        bad.validate();
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("target view 2"), std::string::npos);
    }
}

TEST_F(Loop, OracleClosedLoop) {
    oracle::OracleDenoiser den(scene.cloud);
    oracle::OracleGenerator gen(scene.cloud);
    int joint_steps = 0;
    SampleOptions opts;
    opts.observer = [&](const StepRecord& r) {
        EXPECT_EQ(r.joint, schedule.joint_window.contains(r.t));
        if (!r.joint) return;
        ++joint_steps;
        // Clean predictions are renders of the one shared cloud.
        for (std::size_t j = 0; j < bundle.targets.size(); ++j)
            EXPECT_EQ((*r.clean)[j], render_like(*r.cloud, bundle.targets[j].camera, bundle.targets[j].image));
    };
    const SampleResult r = joint_sample(bundle, den, gen, schedule, 7, opts);
    EXPECT_EQ(joint_steps, 20);
    EXPECT_EQ(r.cloud, scene.cloud);
    const auto gt = truth();
    ASSERT_EQ(r.images.size(), gt.size());
    for (std::size_t j = 0; j < gt.size(); ++j) {
        EXPECT_TRUE(r.images[j].same_shape(bundle.targets[j].image));
        EXPECT_LE(max_abs_diff(r.images[j], gt[j]), 1e-4);
    }
}

TEST_F(Loop, IdempotentDenoiserGivesExactFinalImage) {
    oracle::OracleDenoiser den(scene.cloud);
    oracle::OracleGenerator gen(scene.cloud);
    schedule.joint_window = {0, 0};
    const SampleResult r = joint_sample(bundle, den, gen, schedule, 1);
    const auto gt = truth();
    for (std::size_t j = 0; j < gt.size(); ++j) EXPECT_EQ(r.images[j], gt[j]);
}

/// Per-view plain sampling must match the multi-view run when the
/// generator is never invoked.
TEST_F(Loop, EmptyWindowMatchesPerViewSampling) {
    oracle::OracleDenoiser den(scene.cloud);
    oracle::OracleGenerator gen(scene.cloud);
    schedule.joint_window = {0, 0};
    const SampleResult multi = joint_sample(bundle, den, gen, schedule, 3);
    const auto gt = truth();
    for (std::size_t j = 0; j < gt.size(); ++j) {
        Image x = bundle.targets[j].image;
        const std::uint64_t seed = 3;
        for (std::size_t k = 0; k < schedule.sampling_steps.size(); ++k) {
            const int t = schedule.sampling_steps[k];
            const int t_prev = k + 1 < schedule.sampling_steps.size() ? schedule.sampling_steps[k + 1] : 0;
            x = reverse_step(x, gt[j], t, t_prev, schedule, mix_seed(mix_seed(seed, t), j));
        }
        EXPECT_EQ(x, multi.images[j]);
    }
}

TEST_F(Loop, DeterministicWithStochasticSteps) {
    oracle::OracleDenoiser den(scene.cloud, 0.05, 11);
    oracle::OracleGenerator gen(scene.cloud);
    schedule.eta = 0.5;
    std::optional<SampleResult> first;
    for (int threads : {1, 4}) {
        parallel::ScopedThreads scope(threads);
        SampleResult r = joint_sample(bundle, den, gen, schedule, 99);
        if (!first) {
            first = std::move(r);
            continue;
        }
        EXPECT_EQ(first->images, r.images);
    }
}

TEST_F(Loop, NoisyOracleAtZeroMagnitudeIsClean) {
    oracle::OracleDenoiser clean(scene.cloud);
    oracle::OracleDenoiser noisy(scene.cloud, 0.0, 5);
    EXPECT_EQ(clean.predict_clean(bundle, 800), noisy.predict_clean(bundle, 800));
    oracle::OracleDenoiser loud(scene.cloud, 0.1, 5);
    EXPECT_NE(clean.predict_clean(bundle, 800), loud.predict_clean(bundle, 800));
}

TEST_F(Loop, RefineMeetsOracleBound) {
    oracle::OracleDenoiser den(scene.cloud);
    oracle::OracleGenerator gen(scene.cloud);
    ViewBundle coarse = bundle;
    for (TargetView& t : coarse.targets) {
        Image img = oracle::oracle_render_like(scene.cloud, t.camera, t.image);
        for (float& v : img.data()) v = std::clamp(v + 0.1f, 0.f, 1.f);
        t.image = img;
    }
    std::vector<int> seen;
    SampleOptions opts;
    opts.observer = [&](const StepRecord& r) {
        seen.push_back(r.t);
        EXPECT_EQ(r.joint, schedule.refine_joint_window.contains(r.t));
    };
    const SampleResult r = refine_images(coarse, 0.5, den, gen, schedule, 2, opts);
    ASSERT_FALSE(seen.empty());
    EXPECT_EQ(seen.front(), 500);
    EXPECT_EQ(r.cloud, scene.cloud);
    const auto gt = truth();
    for (std::size_t j = 0; j < gt.size(); ++j) EXPECT_LE(max_abs_diff(r.images[j], gt[j]), 1e-4);
}

TEST_F(Loop, RefineBelowFirstStepIsIdentity) {
    oracle::OracleDenoiser den(scene.cloud);
    oracle::OracleGenerator gen(scene.cloud);
    ViewBundle coarse = bundle;
    for (TargetView& t : coarse.targets) t.image = test_image(17, t.image.width(), t.image.height(), 3);
    const SampleResult r = refine_images(coarse, 0.005, den, gen, schedule, 2);
    for (std::size_t j = 0; j < coarse.targets.size(); ++j) EXPECT_EQ(r.images[j], coarse.targets[j].image);
    EXPECT_THROW(refine_images(coarse, 0.0, den, gen, schedule, 2), ValidationError);
    EXPECT_THROW(refine_images(coarse, 1.5, den, gen, schedule, 2), ValidationError);
}

/// Returns one image of the wrong shape for view 1.
class BrokenDenoiser : public Denoiser {
  public:
    std::vector<Image> predict_clean(const ViewBundle& b, int) override {
        std::vector<Image> out;
        for (const TargetView& t : b.targets) out.emplace_back(t.image.width(), t.image.height(), t.image.channels());
        out[1] = Image(3, 3, 3);
        return out;
    }
};

TEST_F(Loop, ShapeMismatchNamesTheView) {
    BrokenDenoiser den;
    oracle::OracleGenerator gen(scene.cloud);
    try {
        joint_sample(bundle, den, gen, schedule, 0);
        FAIL();
    } catch (const InvariantError& e) {
        EXPECT_NE(std::string(e.what()).find("target view 1"), std::string::npos) << e.what();
    }
}

TEST(RenderLike, ChannelConversion) {
    const auto scene = oracle::make_scene(oracle::SceneDescriptor{.count = 5}, 1);
    const Image rgba = render(scene.cloud, scene.cameras[0], 64, 64);
    const Image a = render_like(scene.cloud, scene.cameras[0], Image(64, 64, 1));
    const Image rgb = render_like(scene.cloud, scene.cameras[0], Image(64, 64, 3));
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            EXPECT_EQ(a.at(x, y, 0), rgba.at(x, y, 3));
            EXPECT_EQ(rgb.at(x, y, 2), rgba.at(x, y, 2));
        }
}

} // namespace
} // namespace gsav
