// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include "fuzz.hpp"
#include "test_util.hpp"

#include <gsav/io.hpp>

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <png.h>

namespace gsav {
namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kProps = {"x",      "y",      "z",       "nx",      "ny",     "nz",
                                         "f_dc_0", "f_dc_1", "f_dc_2",  "opacity", "scale_0", "scale_1",
                                         "scale_2", "rot_0", "rot_1",   "rot_2",   "rot_3"};

/// Binary PLY with the given header lines for properties and raw rows.
std::vector<std::uint8_t> make_ply(const std::vector<std::string>& property_lines,
                                   const std::vector<std::vector<float>>& rows,
                                   const std::string& format = "binary_little_endian") {
    std::string h = "ply\nformat " + format + " 1.0\nelement vertex " + std::to_string(rows.size()) + "\n";
    for (const auto& p : property_lines) h += p + "\n";
    h += "end_header\n";
    std::vector<std::uint8_t> out(h.begin(), h.end());
    for (const auto& r : rows) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(r.data());
        out.insert(out.end(), p, p + r.size() * 4);
    }
    return out;
}

std::vector<std::string> float_props(const std::vector<std::string>& names) {
    std::vector<std::string> lines;
    for (const auto& n : names) lines.push_back("property float " + n);
    return lines;
}

std::vector<float> identity_row() {
    //        x  y  z  nx ny nz dc0 dc1 dc2 op s0 s1 s2 r0 r1 r2 r3
    return {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0};
}

std::string error_of(const std::vector<std::uint8_t>& bytes) {
    try {
        io::parse_ply(bytes);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

TEST(Ply, ActivationExamples) {
    const SplatCloud c = io::parse_ply(make_ply(float_props(kProps), {identity_row()}));
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].opacity(), 0.5f);
    EXPECT_EQ(c[0].color(), Vec3f(0.5f, 0.5f, 0.5f));
    EXPECT_EQ(c[0].scale(), Vec3f(1.f, 1.f, 1.f));
    EXPECT_EQ(io::decode_opacity(0.f), 0.5f);
    EXPECT_EQ(io::decode_color(0.f), 0.5f);
    EXPECT_NEAR(io::kShC0, 0.28209479177387814, 0);
}

TEST(Ply, PropertiesInAnyOrder) {
    std::vector<std::string> names = kProps;
    std::reverse(names.begin(), names.end());
    std::vector<float> row = identity_row();
    row[0] = 1.5f;  // x
    row[13] = 2.f;  // rot_0
    std::reverse(row.begin(), row.end());
    const SplatCloud c = io::parse_ply(make_ply(float_props(names), {row}));
    EXPECT_EQ(c[0].position().x(), 1.5f);
    EXPECT_EQ(c[0].rotation(), Vec4f(1.f, 0.f, 0.f, 0.f));
}

TEST(Ply, RejectsMalformedInput) {
    const auto row = identity_row();
    EXPECT_NE(error_of(make_ply(float_props(kProps), {row}, "ascii")).find("ASCII"), std::string::npos);
    auto missing = kProps;
    missing.erase(missing.begin() + 9);
    auto short_row = row;
    short_row.erase(short_row.begin() + 9);
    EXPECT_NE(error_of(make_ply(float_props(missing), {short_row})).find("missing property 'opacity'"),
              std::string::npos);
    auto extra = kProps;
    extra.push_back("f_rest_0");
    auto long_row = row;
    long_row.push_back(0);
    EXPECT_NE(error_of(make_ply(float_props(extra), {long_row})).find("f_rest_0"), std::string::npos);
    auto lines = float_props(kProps);
    lines[4] = "property double ny";
    EXPECT_NE(error_of(make_ply(lines, {row})).find("type"), std::string::npos);
    auto bytes = make_ply(float_props(kProps), {row});
    bytes.pop_back();
    EXPECT_NE(error_of(bytes).find("payload"), std::string::npos);
    EXPECT_FALSE(error_of({'p', 'l', 'x', '\n'}).empty());
}

TEST(Ply, RejectsNonPositiveDecodedScale) {
    auto row = identity_row();
    row[10] = -200.f; // exp underflows to 0
    EXPECT_NE(error_of(make_ply(float_props(kProps), {row})).find("scale"), std::string::npos);
}

TEST(Ply, FileErrorsNameThePath) {
    try {
        io::read_ply("/nonexistent/dir/cloud.ply");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/cloud.ply"), std::string::npos);
    }
}

TEST(Ply, EncodersInvertDecoders) {
    Rng rng(1);
    for (int i = 0; i < 5000; ++i) {
        const float o = io::decode_opacity(float(rng.uniform(-16, 16)));
        EXPECT_EQ(io::decode_opacity(io::encode_opacity(o)), o);
        const float s = io::decode_scale(float(rng.uniform(-12, 3)));
        EXPECT_EQ(io::decode_scale(io::encode_scale(s)), s);
        const float c = io::decode_color(float(rng.uniform(-3, 3)));
        EXPECT_EQ(io::decode_color(io::encode_color(c)), c);
    }
    EXPECT_EQ(io::decode_opacity(io::encode_opacity(0.f)), io::decode_opacity(-16.f));
    EXPECT_EQ(io::encode_opacity(1.f), io::encode_opacity(1.f));
    EXPECT_LE(io::encode_opacity(1.f), io::kOpacityLogitLimit);
}

TEST(Ply, NormalsPreservedAndFileRoundTrip) {
    Rng rng(2);
    std::vector<std::vector<float>> rows;
    for (int i = 0; i < 20; ++i) {
        auto r = identity_row();
        for (int k = 0; k < 6; ++k) r[k] = float(rng.normal());
        r[9] = float(rng.uniform(-5, 5));
        rows.push_back(r);
    }
    const SplatCloud c = io::parse_ply(make_ply(float_props(kProps), rows), PartLabel::Head);
    EXPECT_EQ(c.part(), PartLabel::Head);
    EXPECT_EQ(c.normals()[7], Vec3f(rows[7][3], rows[7][4], rows[7][5]));
    const fs::path dir = testing::scratch_dir("ply");
    io::write_ply(c, dir / "c.ply");
    EXPECT_EQ(io::read_ply(dir / "c.ply", PartLabel::Head), c);
}

// ---------------------------------------------------------------------------

TEST(CameraJson, IdentityRoundTripAndCanonicalForm) {
    const std::vector<Camera> cams = {Camera(CameraParams{500, 500, 256, 256, 512, 512, Mat4d::Identity()})};
    const std::string text = io::camera_json_string(cams);
    EXPECT_EQ(io::parse_camera_json(text), cams);
    EXPECT_EQ(io::camera_json_string(io::parse_camera_json(text)), text);
    EXPECT_EQ(text.substr(0, 11), "[\n  {\"cx\": ");
}

TEST(CameraJson, Rejections) {
    const std::string ok =
        R"([{"fx":1,"fy":1,"cx":0,"cy":0,"width":4,"height":4,"world_to_camera":[1,0,0,0,0,1,0,0,0,0,1,0,0,0,0,1]}])";
    EXPECT_EQ(io::parse_camera_json(ok).size(), 1u);
    std::string skew = ok;
    skew.replace(skew.find("[1,0,0"), 6, "[1,0.01,0");
    EXPECT_THROW(io::parse_camera_json(skew), ValidationError);
    std::string missing = ok;
    missing.erase(missing.find("\"fy\":1,"), 7);
    try {
        io::parse_camera_json(missing);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("fy"), std::string::npos);
    }
    EXPECT_THROW(io::parse_camera_json("{}"), ValidationError);
    EXPECT_THROW(io::parse_camera_json("[1,"), ValidationError);
    std::string frac = ok;
    frac.replace(frac.find("\"width\":4"), 9, "\"width\":4.5");
    EXPECT_THROW(io::parse_camera_json(frac), ValidationError);
}

// ---------------------------------------------------------------------------

TEST(Gsfr, HeaderArithmetic) {
    const io::RawRaster r{1, 1, 1, {0.25f}};
    const auto bytes = io::encode_raw(r);
    ASSERT_EQ(bytes.size(), 24u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "GSFR");
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(bytes[5], 0);
    float v;
    std::memcpy(&v, bytes.data() + 20, 4);
    EXPECT_EQ(v, 0.25f);
    EXPECT_EQ(io::decode_raw(bytes), r);
}

TEST(Gsfr, RejectsBadHeaders) {
    auto bytes = io::encode_raw({2, 1, 1, {1.f, 2.f}});
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(io::decode_raw(bad), ValidationError);
    bad = bytes;
    bad[4] = 2;
    EXPECT_THROW(io::decode_raw(bad), ValidationError);
    bad = bytes;
    bad.pop_back();
    EXPECT_THROW(io::decode_raw(bad), ValidationError);
    EXPECT_THROW(io::encode_raw({2, 2, 1, {1.f}}), ValidationError);
}

TEST(Gsfr, RayMapWithNinetySixChannels) {
    const Camera cam = testing::simple_camera(8, 6, 8);
    const RayMap m = build_ray_map(cam, std::nullopt, 8, 6, EmbeddingKind::Sinusoidal);
    const auto raster = io::to_raster(m);
    EXPECT_EQ(raster.channels, 96u);
    EXPECT_EQ(io::decode_raw(io::encode_raw(raster)), raster);
    EXPECT_THROW(io::to_image(raster), ValidationError);
}

TEST(Gsfr, ImageConversion) {
    Image img(3, 2, 4);
    img.at(2, 1, 3) = 0.75f;
    const fs::path dir = testing::scratch_dir("gsfr");
    io::write_raw(io::to_raster(img), dir / "i.gsfr");
    EXPECT_EQ(io::to_image(io::read_raw(dir / "i.gsfr")), img);
}

// ---------------------------------------------------------------------------

TEST(Png, QuantizationRoundsToNearest) {
    EXPECT_EQ(io::quantize_u8(0.f), 0);
    EXPECT_EQ(io::quantize_u8(1.f), 255);
    EXPECT_EQ(io::quantize_u8(-2.f), 0);
    EXPECT_EQ(io::quantize_u8(7.f), 255);
    EXPECT_EQ(io::quantize_u8(0.4f / 255.f), 0);
    EXPECT_EQ(io::quantize_u8(0.6f / 255.f), 1);
    EXPECT_EQ(io::quantize_u8(128.49f / 255.f), 128);
    EXPECT_EQ(io::quantize_u8(254.51f / 255.f), 255);
}

TEST(Png, WritesRgba8) {
    Image img(4, 3, 3);
    img.at(1, 2, 0) = 1.f;
    const fs::path path = testing::scratch_dir("png") / "x.png";
    io::write_png(img, path);
    png_image im{};
    im.version = PNG_IMAGE_VERSION;
    ASSERT_TRUE(png_image_begin_read_from_file(&im, path.c_str()));
    EXPECT_EQ(im.width, 4u);
    EXPECT_EQ(im.height, 3u);
    im.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(im));
    ASSERT_TRUE(png_image_finish_read(&im, nullptr, px.data(), 0, nullptr));
    EXPECT_EQ(px[(2 * 4 + 1) * 4 + 0], 255);
    EXPECT_EQ(px[(2 * 4 + 1) * 4 + 3], 255);
    EXPECT_EQ(px[0], 0);
}

// ---------------------------------------------------------------------------

TEST(Sidecars, JointsAndBox) {
    const Joints2D j = io::parse_joints_json(R"({"neck":[10,20],"left_ear":[1.5,2],"nose":[0,0]})");
    EXPECT_EQ(*j[Joint::Neck], Vec2d(10, 20));
    EXPECT_EQ(*j[Joint::LeftEar], Vec2d(1.5, 2));
    EXPECT_FALSE(j[Joint::Pelvis]);
    EXPECT_THROW(io::parse_joints_json(R"({"neck":[1]})"), ValidationError);
    EXPECT_EQ(io::parse_box_json("[1,2,3,4]"), (CropBox{1, 2, 3, 4}));
    EXPECT_THROW(io::parse_box_json("[3,2,1,4]"), ValidationError);
}

TEST(Sidecars, SceneAndSimulationConfig) {
    io::SceneFile s;
    s.seed = 9;
    s.descriptor.count = 12;
    s.descriptor.opacity_min = 0.3;
    const io::SceneFile back = io::parse_scene_json(io::scene_json_string(s));
    EXPECT_EQ(back.seed, 9u);
    EXPECT_EQ(back.descriptor.count, 12);
    EXPECT_EQ(back.descriptor.opacity_min, 0.3);
    EXPECT_THROW(io::parse_scene_json(R"({"colour":1})"), ValidationError);

    const io::SimulationConfig d = io::parse_simulation_json("{}");
    EXPECT_EQ(d.joint_window, kDefaultJointWindow);
    EXPECT_EQ(d.refine_window, kDefaultRefineJointWindow);
    EXPECT_EQ(d.strength, 0.5);
    const io::SimulationConfig c =
        io::parse_simulation_json(R"({"steps":10,"joint_window":[100,400],"eta":0.5,"denoiser":"noisy-oracle"})");
    EXPECT_EQ(c.schedule().sampling_steps.size(), 10u);
    EXPECT_EQ(c.schedule().joint_window, (TimeWindow{100, 400}));
    EXPECT_EQ(c.schedule().eta, 0.5);
    EXPECT_THROW(io::parse_simulation_json(R"({"stepz":10})"), ValidationError);
}

TEST(Sidecars, DecisionLogRoundTrip) {
    Decision a;
    a.origin = {PartLabel::Upper, 7};
    a.kept = false;
    a.rule = DropRule::Salience;
    a.coverage_own = 4;
    a.coverage_by_part = {4, 4, 3, std::nullopt};
    a.salience_own = 0.1234567890123;
    a.salience_other = 5.5;
    Decision b;
    b.origin = {PartLabel::Head, 0};
    const std::string text = io::decision_log_jsonl({a, b});
    const auto back = io::parse_decision_log(text);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].origin, a.origin);
    EXPECT_EQ(back[0].rule, a.rule);
    EXPECT_EQ(back[0].coverage_by_part, a.coverage_by_part);
    EXPECT_EQ(back[0].salience_own, a.salience_own);
    EXPECT_EQ(back[0].salience_other, a.salience_other);
    EXPECT_FALSE(back[1].salience_other);
    EXPECT_EQ(io::decision_log_jsonl(back), text);
}

TEST(Fuzz, RoundTrips) {
    Rng rng(2024);
    for (int i = 0; i < 500; ++i) {
        ASSERT_EQ(fuzz::check_ply(fuzz::random_ply(rng)), "") << "instance " << i;
        ASSERT_EQ(fuzz::check_cameras({fuzz::random_camera(rng), fuzz::random_camera(rng)}), "");
        ASSERT_EQ(fuzz::check_raster(fuzz::random_raster(rng)), "");
    }
}

} // namespace
} // namespace gsav
