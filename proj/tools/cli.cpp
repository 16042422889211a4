// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <gsav/composition.hpp>
#include <gsav/cropping.hpp>
#include <gsav/diffusion.hpp>
#include <gsav/io.hpp>
#include <gsav/oracle.hpp>
#include <gsav/parallel.hpp>
#include <gsav/random.hpp>
#include <gsav/raymap.hpp>
#include <gsav/renderer.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

namespace gsav::cli {

namespace fs = std::filesystem;

namespace {

/// Largest raster any command will allocate.
constexpr long long kMaxPixels = 1LL << 26;

std::optional<CropBox> parse_crop(const std::string& text) {
    if (text.empty()) return std::nullopt;
    std::array<double, 4> v{};
    std::istringstream in(text);
    for (int k = 0; k < 4; ++k) {
        std::string tok;
        if (!std::getline(in, tok, ',')) throw ValidationError("--crop expects x1,y1,x2,y2");
        try {
            std::size_t used = 0;
            v[k] = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ValidationError("--crop: '" + tok + "' is not a number");
        }
    }
    std::string rest;
    if (std::getline(in, rest)) throw ValidationError("--crop expects exactly four values");
    CropBox box{v[0], v[1], v[2], v[3]};
    box.validate();
    return box;
}

TimeWindow parse_window(const std::string& text, const char* flag) {
    const auto colon = text.find(':');
    try {
        if (colon == std::string::npos) throw std::invalid_argument(text);
        std::size_t a = 0, b = 0;
        const std::string lo = text.substr(0, colon), hi = text.substr(colon + 1);
        TimeWindow w{std::stoi(lo, &a), std::stoi(hi, &b)};
        if (a != lo.size() || b != hi.size()) throw std::invalid_argument(text);
        return w;
    } catch (const std::exception&) {
        throw ValidationError(std::string(flag) + " expects lo:hi integers, got '" + text + "'");
    }
}

void check_raster(int w, int h) {
    if (w < 1 || h < 1) throw ValidationError("--width and --height must be >= 1");
    if (static_cast<long long>(w) * h > kMaxPixels)
        throw GuardError("requested raster of " + std::to_string(static_cast<long long>(w) * h) +
                         " pixels exceeds the limit of " + std::to_string(kMaxPixels));
}

Camera pick_camera(const fs::path& path, int index) {
    const auto cams = io::read_camera_json(path);
    if (index < 0 || static_cast<std::size_t>(index) >= cams.size())
        throw ValidationError(path.string() + ": --view-index " + std::to_string(index) +
                              " out of range (" + std::to_string(cams.size()) + " cameras)");
    return cams[static_cast<std::size_t>(index)];
}

void write_image(const Image& img, const fs::path& out) {
    const std::string ext = out.extension().string();
    if (ext == ".png")
        io::write_png(img, out);
    else if (ext == ".gsfr")
        io::write_raw(io::to_raster(img), out);
    else
        throw ValidationError("--out must end in .png or .gsfr");
}

// ---------------------------------------------------------------------------

struct RenderArgs {
    std::string splats, camera, crop, out;
    int view_index = 0, width = 0, height = 0;
};

void cmd_render(const RenderArgs& a) {
    check_raster(a.width, a.height);
    const SplatCloud cloud = io::read_ply(a.splats);
    Camera cam = pick_camera(a.camera, a.view_index);
    if (const auto box = parse_crop(a.crop)) cam = crop_camera(cam, *box, a.width, a.height);
    write_image(render(cloud, cam, a.width, a.height), a.out);
}

struct RaymapArgs {
    std::string camera, crop, mode = "plucker", out;
    int view_index = 0, octaves = kDefaultOctaves, width = 0, height = 0;
};

void cmd_raymap(const RaymapArgs& a) {
    check_raster(a.width, a.height);
    EmbeddingKind kind;
    if (a.mode == "plucker")
        kind = EmbeddingKind::Plucker;
    else if (a.mode == "sinusoidal")
        kind = EmbeddingKind::Sinusoidal;
    else
        throw ValidationError("--mode must be plucker or sinusoidal");
    if (a.octaves < 1) throw ValidationError("--octaves must be >= 1");
    if (fs::path(a.out).extension() != ".gsfr") throw ValidationError("--out must end in .gsfr");
    const Camera cam = pick_camera(a.camera, a.view_index);
    const RayMap map = build_ray_map(cam, parse_crop(a.crop), a.width, a.height, kind, a.octaves);
    io::write_raw(io::to_raster(map), a.out);
}

struct PartFiles {
    std::string full, upper, lower, head, cameras;
};

PartViews load_parts(const PartFiles& f) {
    const auto cams = io::read_camera_json(f.cameras);
    if (cams.size() != 16)
        throw ValidationError(f.cameras + ": expected 16 cameras (4 per part), found " +
                              std::to_string(cams.size()));
    PartViews parts;
    const std::array<const std::string*, 4> files = {&f.full, &f.upper, &f.lower, &f.head};
    for (PartLabel p : kAllParts) {
        const auto k = static_cast<std::size_t>(p);
        parts.push_back({io::read_ply(*files[k], p),
                         std::vector<Camera>(cams.begin() + 4 * k, cams.begin() + 4 * k + 4)});
    }
    return parts;
}

struct ComposeArgs {
    PartFiles parts;
    std::string out, log, coverage = "center";
    int min_coverage = 3, head_min_coverage = 4, redundancy_coverage = 3;
    bool no_salience = false;
};

void cmd_compose(const ComposeArgs& a, std::ostream& out) {
    CompositionConfig cfg;
    cfg.min_coverage_body = a.min_coverage;
    cfg.min_coverage_head = a.head_min_coverage;
    cfg.redundancy_coverage = a.redundancy_coverage;
    cfg.salience_rule = !a.no_salience;
    if (a.coverage == "center")
        cfg.coverage_mode = CoverageMode::Center;
    else if (a.coverage == "footprint")
        cfg.coverage_mode = CoverageMode::Footprint;
    else
        throw ValidationError("--coverage must be center or footprint");
    const PartViews parts = load_parts(a.parts);
    const CompositionResult r = compose(parts, cfg);
    io::write_ply(r.cloud, a.out);
    if (!a.log.empty()) io::write_text(a.log, io::decision_log_jsonl(r.log));
    out << "kept " << r.cloud.size() << " of " << r.log.size() << " splats\n";
}

struct ReplayArgs {
    PartFiles parts;
    std::string log, out;
};

void cmd_replay(const ReplayArgs& a) {
    const PartViews parts = load_parts(a.parts);
    const auto log = io::parse_decision_log(io::read_text(a.log));
    io::write_ply(replay_decisions(parts, log).cloud, a.out);
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string scene, config, out;
    std::string denoiser, generator, joint_window, refine_window;
    int steps = kDefaultSamplingSteps;
    double strength = kDefaultRefineStrength, eta = 0.0, noise_magnitude = 0.05;
    std::uint64_t seed = 0;
    bool refine = false, trace = false;
};

std::unique_ptr<Denoiser> make_denoiser(const io::SimulationConfig& c, const oracle::SyntheticScene& s) {
    if (c.denoiser == "oracle") return std::make_unique<oracle::OracleDenoiser>(s.cloud);
    if (c.denoiser == "noisy-oracle")
        return std::make_unique<oracle::OracleDenoiser>(s.cloud, c.noise_magnitude,
                                                        mix_seed(c.seed, 0xd1ull), c.timesteps);
    throw ValidationError("--denoiser must be oracle or noisy-oracle");
}

std::unique_ptr<Generator> make_generator(const io::SimulationConfig& c, const oracle::SyntheticScene& s) {
    if (c.generator == "oracle") return std::make_unique<oracle::OracleGenerator>(s.cloud);
    throw ValidationError("--generator must be oracle");
}

StepObserver tracer(const fs::path& dir, bool enabled) {
    if (!enabled) return {};
    fs::create_directories(dir);
    return [dir](const StepRecord& rec) {
        char name[64];
        for (std::size_t j = 0; j < rec.next->size(); ++j) {
            std::snprintf(name, sizeof(name), "t%04d_view%zu_x.gsfr", rec.t_prev, j);
            io::write_raw(io::to_raster((*rec.next)[j]), dir / name);
            std::snprintf(name, sizeof(name), "t%04d_view%zu_x0.gsfr", rec.t, j);
            io::write_raw(io::to_raster((*rec.clean)[j]), dir / name);
        }
    };
}

double write_views(const std::vector<Image>& images, const std::vector<Image>& truth,
                   const fs::path& dir, const std::string& prefix) {
    double dev = 0.0;
    for (std::size_t j = 0; j < images.size(); ++j) {
        const std::string stem = prefix + "view_" + std::to_string(j);
        io::write_raw(io::to_raster(images[j]), dir / (stem + ".gsfr"));
        io::write_png(images[j], dir / (stem + ".png"));
        dev = std::max(dev, max_abs_diff(images[j], truth[j]));
    }
    return dev;
}

void cmd_simulate(const SimulateArgs& a, const CLI::App& sub, std::ostream& out) {
    const io::SceneFile scene_file = io::read_scene_json(a.scene);
    io::SimulationConfig c;
    if (!a.config.empty()) c = io::read_simulation_json(a.config);
    if (sub.count("--denoiser")) c.denoiser = a.denoiser;
    if (sub.count("--generator")) c.generator = a.generator;
    if (sub.count("--steps")) c.steps = a.steps;
    if (sub.count("--joint-window")) c.joint_window = parse_window(a.joint_window, "--joint-window");
    if (sub.count("--refine")) c.refine = a.refine;
    if (sub.count("--strength")) c.strength = a.strength;
    if (sub.count("--refine-window")) c.refine_window = parse_window(a.refine_window, "--refine-window");
    if (sub.count("--eta")) c.eta = a.eta;
    if (sub.count("--noise-magnitude")) c.noise_magnitude = a.noise_magnitude;
    if (sub.count("--seed")) c.seed = a.seed;
    if (sub.count("--trace")) c.trace = a.trace;

    const DiffusionSchedule schedule = c.schedule();
    const oracle::SyntheticScene scene = oracle::make_scene(scene_file.descriptor, scene_file.seed);
    check_raster(scene.descriptor.width, scene.descriptor.height);
    auto denoiser = make_denoiser(c, scene);
    auto generator = make_generator(c, scene);

    const fs::path dir = a.out;
    fs::create_directories(dir);
    ViewBundle bundle = oracle::make_bundle(scene, mix_seed(c.seed, 0xb0ull));
    std::vector<Image> truth;
    for (const TargetView& t : bundle.targets)
        truth.push_back(oracle::oracle_render_like(scene.cloud, t.camera, t.image));

    SampleOptions opts;
    opts.observer = tracer(dir / "trace", c.trace);
    const SampleResult sampled = joint_sample(bundle, *denoiser, *generator, schedule, c.seed, opts);
    nlohmann::json metrics;
    metrics["views"] = sampled.images.size();
    metrics["max_deviation"] = write_views(sampled.images, truth, dir, "");
    metrics["cloud_matches_ground_truth"] = sampled.cloud == scene.cloud;
    io::write_ply(sampled.cloud, dir / "cloud.ply");
    io::write_camera_json(scene.cameras, dir / "cameras.json");

    if (c.refine) {
        ViewBundle rb = bundle;
        for (std::size_t j = 0; j < rb.targets.size(); ++j) rb.targets[j].image = sampled.images[j];
        SampleOptions ropts;
        ropts.observer = tracer(dir / "trace_refine", c.trace);
        const SampleResult refined = refine_images(rb, c.strength, *denoiser, *generator, schedule,
                                                   mix_seed(c.seed, 0x4ef1ull), ropts);
        metrics["refine_max_deviation"] = write_views(refined.images, truth, dir, "refined_");
        metrics["refine_cloud_matches_ground_truth"] = refined.cloud == scene.cloud;
        io::write_ply(refined.cloud, dir / "refined_cloud.ply");
    }
    metrics["config"] = {{"steps", c.steps},
                         {"joint_window", {c.joint_window.lo, c.joint_window.hi}},
                         {"refine", c.refine},
                         {"strength", c.strength},
                         {"refine_window", {c.refine_window.lo, c.refine_window.hi}},
                         {"eta", c.eta},
                         {"seed", c.seed},
                         {"denoiser", c.denoiser},
                         {"generator", c.generator}};
    io::write_text(dir / "metrics.json", metrics.dump(2) + "\n");
    out << "max deviation " << metrics["max_deviation"].get<double>() << "\n";
}

// ---------------------------------------------------------------------------

struct SceneArgs {
    std::string scene, out;
};

void cmd_make_scene(const SceneArgs& a) {
    const io::SceneFile f = io::read_scene_json(a.scene);
    const oracle::SyntheticScene s = oracle::make_scene(f.descriptor, f.seed);
    const fs::path dir = a.out;
    fs::create_directories(dir);
    io::write_ply(s.cloud, dir / "scene.ply");
    io::write_camera_json(s.cameras, dir / "cameras.json");
}

struct PartsArgs {
    std::uint64_t seed = 0;
    int splats = 60;
    std::string out;
};

void cmd_make_parts(const PartsArgs& a) {
    oracle::PartSceneDescriptor d;
    d.splats_per_part = a.splats;
    const oracle::PartScene s = oracle::make_part_scene(d, a.seed);
    const fs::path dir = a.out;
    fs::create_directories(dir);
    std::vector<Camera> cams;
    for (const PartInput& p : s.parts) {
        io::write_ply(p.cloud, dir / (std::string(part_name(p.cloud.part())) + ".ply"));
        cams.insert(cams.end(), p.views.begin(), p.views.end());
    }
    io::write_camera_json(cams, dir / "cameras.json");
    io::write_camera_json(s.global_cameras, dir / "global_cameras.json");
}

void add_part_files(CLI::App* sub, PartFiles& f) {
    sub->add_option("--full", f.full, "Full-body splat PLY")->required();
    sub->add_option("--upper", f.upper, "Upper-body splat PLY")->required();
    sub->add_option("--lower", f.lower, "Lower-body splat PLY")->required();
    sub->add_option("--head", f.head, "Head splat PLY")->required();
    sub->add_option("--cameras", f.cameras,
                    "16 cameras, 4 per part in order full, upper, lower, head")
        ->required();
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    parallel::apply_thread_env();

    CLI::App app{"Gaussian-splat avatar toolkit: ray maps, rendering, composition, sampling", "gsav"};
    app.require_subcommand(1);

    RenderArgs ra;
    auto* render_cmd = app.add_subcommand("render", "Render a splat cloud to PNG or GSFR");
    render_cmd->add_option("--splats", ra.splats, "Input PLY")->required();
    render_cmd->add_option("--camera", ra.camera, "Camera JSON")->required();
    render_cmd->add_option("--view-index", ra.view_index, "Camera index in the JSON array");
    render_cmd->add_option("--crop", ra.crop, "Crop box x1,y1,x2,y2 in global pixels");
    render_cmd->add_option("--width", ra.width, "Output width")->required();
    render_cmd->add_option("--height", ra.height, "Output height")->required();
    render_cmd->add_option("--out", ra.out, "Output .png or .gsfr")->required();

    RaymapArgs ya;
    auto* raymap_cmd = app.add_subcommand("raymap", "Build a camera ray map (GSFR)");
    raymap_cmd->add_option("--camera", ya.camera, "Camera JSON")->required();
    raymap_cmd->add_option("--view-index", ya.view_index, "Camera index in the JSON array");
    raymap_cmd->add_option("--crop", ya.crop, "Crop box x1,y1,x2,y2 in global pixels");
    raymap_cmd->add_option("--mode", ya.mode, "plucker or sinusoidal")->required();
    raymap_cmd->add_option("--octaves", ya.octaves, "Sinusoidal octaves")->capture_default_str();
    raymap_cmd->add_option("--width", ya.width, "Output width")->required();
    raymap_cmd->add_option("--height", ya.height, "Output height")->required();
    raymap_cmd->add_option("--out", ya.out, "Output .gsfr")->required();

    ComposeArgs ca;
    auto* compose_cmd = app.add_subcommand("compose", "Visibility-aware merge of part clouds");
    add_part_files(compose_cmd, ca.parts);
    compose_cmd->add_option("--min-coverage", ca.min_coverage, "Own-view coverage for body parts")
        ->capture_default_str();
    compose_cmd->add_option("--head-min-coverage", ca.head_min_coverage, "Own-view coverage for the head")
        ->capture_default_str();
    compose_cmd->add_option("--redundancy-coverage", ca.redundancy_coverage,
                            "Views of a more detailed part that make a splat redundant")
        ->capture_default_str();
    compose_cmd->add_flag("--no-salience", ca.no_salience, "Disable the same-detail salience rule");
    compose_cmd->add_option("--coverage", ca.coverage, "center or footprint")->capture_default_str();
    compose_cmd->add_option("--out", ca.out, "Output PLY")->required();
    compose_cmd->add_option("--log", ca.log, "Decision log (JSON lines)");

    ReplayArgs pa;
    auto* replay_cmd = app.add_subcommand("replay", "Rebuild a composed cloud from a decision log");
    add_part_files(replay_cmd, pa.parts);
    replay_cmd->add_option("--log", pa.log, "Decision log (JSON lines)")->required();
    replay_cmd->add_option("--out", pa.out, "Output PLY")->required();

    SimulateArgs sa;
    auto* sim_cmd = app.add_subcommand("simulate", "Joint diffusion sampling with oracle plug-ins");
    sim_cmd->add_option("--scene", sa.scene, "Scene descriptor JSON")->required();
    sim_cmd->add_option("--config", sa.config, "Simulation config JSON; flags override it");
    sim_cmd->add_option("--denoiser", sa.denoiser, "oracle or noisy-oracle");
    sim_cmd->add_option("--generator", sa.generator, "oracle");
    sim_cmd->add_option("--steps", sa.steps, "Sampling steps")->capture_default_str();
    sim_cmd->add_option("--joint-window", sa.joint_window, "Joint window lo:hi (default 500:900)");
    sim_cmd->add_flag("--refine", sa.refine, "Run image-to-image refinement afterwards");
    sim_cmd->add_option("--strength", sa.strength, "Refinement strength")->capture_default_str();
    sim_cmd->add_option("--refine-window", sa.refine_window, "Refinement joint window (default 350:500)");
    sim_cmd->add_option("--eta", sa.eta, "Reverse-step stochasticity")->capture_default_str();
    sim_cmd->add_option("--noise-magnitude", sa.noise_magnitude, "noisy-oracle amplitude")
        ->capture_default_str();
    sim_cmd->add_option("--seed", sa.seed, "Seed")->capture_default_str();
    sim_cmd->add_flag("--trace", sa.trace, "Dump per-step rasters under <out>/trace");
    sim_cmd->add_option("--out", sa.out, "Output directory")->required();

    SceneArgs sc;
    auto* scene_cmd = app.add_subcommand("make-scene", "Write a synthetic scene (PLY + cameras)");
    scene_cmd->add_option("--scene", sc.scene, "Scene descriptor JSON")->required();
    scene_cmd->add_option("--out", sc.out, "Output directory")->required();

    PartsArgs pp;
    auto* parts_cmd = app.add_subcommand("make-parts", "Write a synthetic four-part composition scene");
    parts_cmd->add_option("--seed", pp.seed, "Seed")->capture_default_str();
    parts_cmd->add_option("--splats", pp.splats, "Splats per part")->capture_default_str();
    parts_cmd->add_option("--out", pp.out, "Output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kInputError;
    }

    try {
        if (*render_cmd)
            cmd_render(ra);
        else if (*raymap_cmd)
            cmd_raymap(ya);
        else if (*compose_cmd)
            cmd_compose(ca, out);
        else if (*replay_cmd)
            cmd_replay(pa);
        else if (*sim_cmd)
            cmd_simulate(sa, *sim_cmd, out);
        else if (*scene_cmd)
            cmd_make_scene(sc);
        else if (*parts_cmd)
            cmd_make_parts(pp);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const GuardError& e) {
        err << "error: " << e.what() << "\n";
        return kGuardError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
    return kOk;
}

} // namespace gsav::cli
