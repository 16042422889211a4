// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include <gsav/io.hpp>

#include <json.hpp>

#include <set>
#include <sstream>

namespace gsav::io {

using nlohmann::json;

namespace {

json parse(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string(what) + ": " + e.what());
    }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const char* what) {
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, _] : obj.items())
        if (!allowed.contains(key))
            throw ValidationError(std::string(what) + ": unknown key '" + key + "'");
}

double get_number(const json& obj, const char* key, const char* what) {
    const json& v = obj.at(key);
    if (!v.is_number())
        throw ValidationError(std::string(what) + ": '" + key + "' must be a number");
    return v.get<double>();
}

int get_int(const json& obj, const char* key, const char* what) {
    const json& v = obj.at(key);
    if (!v.is_number_integer())
        throw ValidationError(std::string(what) + ": '" + key + "' must be an integer");
    return v.get<int>();
}

std::uint64_t get_u64(const json& obj, const char* key, const char* what) {
    const json& v = obj.at(key);
    if (!v.is_number_unsigned())
        throw ValidationError(std::string(what) + ": '" + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::pair<double, double> get_pair(const json& obj, const char* key, const char* what) {
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ValidationError(std::string(what) + ": '" + key + "' must be [lo, hi]");
    return {v[0].get<double>(), v[1].get<double>()};
}

TimeWindow get_window(const json& obj, const char* key, const char* what) {
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
        throw ValidationError(std::string(what) + ": '" + key + "' must be [lo, hi] integers");
    return {v[0].get<int>(), v[1].get<int>()};
}

} // namespace

// ---------------------------------------------------------------------------

Joints2D parse_joints_json(const std::string& text) {
    const json doc = parse(text, "joints JSON");
    if (!doc.is_object()) throw ValidationError("joints JSON: top level must be an object");
    Joints2D joints;
    for (Joint j : kAllJoints) {
        const std::string name(joint_name(j));
        if (!doc.contains(name)) continue;
        const json& v = doc.at(name);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ValidationError("joints JSON: '" + name + "' must be [x, y]");
        joints[j] = Vec2d(v[0].get<double>(), v[1].get<double>());
    }
    return joints;
}

Joints2D read_joints_json(const fs::path& path) { return parse_joints_json(read_text(path)); }

CropBox parse_box_json(const std::string& text) {
    const json doc = parse(text, "box JSON");
    if (!doc.is_array() || doc.size() != 4)
        throw ValidationError("box JSON: expected [x_tl, y_tl, x_br, y_br]");
    for (const json& v : doc)
        if (!v.is_number()) throw ValidationError("box JSON: coordinates must be numbers");
    CropBox b{doc[0].get<double>(), doc[1].get<double>(), doc[2].get<double>(),
              doc[3].get<double>()};
    b.validate();
    return b;
}

// ---------------------------------------------------------------------------

SceneFile parse_scene_json(const std::string& text) {
    constexpr const char* what = "scene JSON";
    const json doc = parse(text, what);
    if (!doc.is_object()) throw ValidationError("scene JSON: top level must be an object");
    reject_unknown(doc,
                   {"seed", "count", "extent", "opacity_range", "scale_range", "width", "height",
                    "focal_factor"},
                   what);
    SceneFile s;
    auto& d = s.descriptor;
    if (doc.contains("seed")) s.seed = get_u64(doc, "seed", what);
    if (doc.contains("count")) d.count = get_int(doc, "count", what);
    if (doc.contains("extent")) d.extent = get_number(doc, "extent", what);
    if (doc.contains("opacity_range"))
        std::tie(d.opacity_min, d.opacity_max) = get_pair(doc, "opacity_range", what);
    if (doc.contains("scale_range"))
        std::tie(d.scale_min, d.scale_max) = get_pair(doc, "scale_range", what);
    if (doc.contains("width")) d.width = get_int(doc, "width", what);
    if (doc.contains("height")) d.height = get_int(doc, "height", what);
    if (doc.contains("focal_factor")) d.focal_factor = get_number(doc, "focal_factor", what);
    d.validate();
    return s;
}

SceneFile read_scene_json(const fs::path& path) {
    try {
        return parse_scene_json(read_text(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::string scene_json_string(const SceneFile& s) {
    const auto& d = s.descriptor;
    json doc = {{"seed", s.seed},
                {"count", d.count},
                {"extent", d.extent},
                {"opacity_range", {d.opacity_min, d.opacity_max}},
                {"scale_range", {d.scale_min, d.scale_max}},
                {"width", d.width},
                {"height", d.height},
                {"focal_factor", d.focal_factor}};
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

DiffusionSchedule SimulationConfig::schedule() const {
    DiffusionSchedule s = make_schedule(timesteps, beta_start, beta_end, steps);
    s.joint_window = joint_window;
    s.refine_joint_window = refine_window;
    s.eta = eta;
    s.validate();
    return s;
}

SimulationConfig parse_simulation_json(const std::string& text) {
    constexpr const char* what = "simulation JSON";
    const json doc = parse(text, what);
    if (!doc.is_object()) throw ValidationError("simulation JSON: top level must be an object");
    reject_unknown(doc,
                   {"timesteps", "beta_start", "beta_end", "steps", "joint_window", "refine",
                    "strength", "refine_window", "eta", "seed", "denoiser", "generator",
                    "noise_magnitude", "trace"},
                   what);
    SimulationConfig c;
    if (doc.contains("timesteps")) c.timesteps = get_int(doc, "timesteps", what);
    if (doc.contains("beta_start")) c.beta_start = get_number(doc, "beta_start", what);
    if (doc.contains("beta_end")) c.beta_end = get_number(doc, "beta_end", what);
    if (doc.contains("steps")) c.steps = get_int(doc, "steps", what);
    if (doc.contains("joint_window")) c.joint_window = get_window(doc, "joint_window", what);
    if (doc.contains("refine")) {
        if (!doc.at("refine").is_boolean()) throw ValidationError("simulation JSON: 'refine' must be a boolean");
        c.refine = doc.at("refine").get<bool>();
    }
    if (doc.contains("strength")) c.strength = get_number(doc, "strength", what);
    if (doc.contains("refine_window")) c.refine_window = get_window(doc, "refine_window", what);
    if (doc.contains("eta")) c.eta = get_number(doc, "eta", what);
    if (doc.contains("seed")) c.seed = get_u64(doc, "seed", what);
    for (const char* key : {"denoiser", "generator"}) {
        if (!doc.contains(key)) continue;
        if (!doc.at(key).is_string())
            throw ValidationError(std::string("simulation JSON: '") + key + "' must be a string");
        (std::string(key) == "denoiser" ? c.denoiser : c.generator) = doc.at(key).get<std::string>();
    }
    if (doc.contains("noise_magnitude")) c.noise_magnitude = get_number(doc, "noise_magnitude", what);
    if (doc.contains("trace")) {
        if (!doc.at("trace").is_boolean()) throw ValidationError("simulation JSON: 'trace' must be a boolean");
        c.trace = doc.at("trace").get<bool>();
    }
    return c;
}

SimulationConfig read_simulation_json(const fs::path& path) {
    try {
        return parse_simulation_json(read_text(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

std::string decision_log_jsonl(const std::vector<Decision>& log) {
    std::string out;
    for (const Decision& d : log) {
        json by_part = json::object();
        for (PartLabel p : kAllParts)
            if (const auto& c = d.coverage_by_part[static_cast<std::size_t>(p)])
                by_part[std::string(part_name(p))] = *c;
        json row = {{"part", std::string(part_name(d.origin.part))},
                    {"source_index", d.origin.source_index},
                    {"kept", d.kept},
                    {"rule", std::string(rule_name(d.rule))},
                    {"coverage_own", d.coverage_own},
                    {"coverage_by_part", by_part},
                    {"salience_own", d.salience_own},
                    {"salience_other", d.salience_other ? json(*d.salience_other) : json(nullptr)}};
        out += row.dump();
        out += '\n';
    }
    return out;
}

std::vector<Decision> parse_decision_log(const std::string& text) {
    std::vector<Decision> log;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string what = "decision log line " + std::to_string(lineno);
        const json row = parse(line, what.c_str());
        try {
            Decision d;
            d.origin.part = parse_part(row.at("part").get<std::string>());
            d.origin.source_index = row.at("source_index").get<std::uint32_t>();
            d.kept = row.at("kept").get<bool>();
            d.rule = parse_rule(row.at("rule").get<std::string>());
            d.coverage_own = row.at("coverage_own").get<int>();
            for (const auto& [key, val] : row.at("coverage_by_part").items())
                d.coverage_by_part[static_cast<std::size_t>(parse_part(key))] = val.get<int>();
            d.salience_own = row.at("salience_own").get<double>();
            if (!row.at("salience_other").is_null())
                d.salience_other = row.at("salience_other").get<double>();
            log.push_back(d);
        } catch (const json::exception& e) {
            throw ValidationError(what + ": " + e.what());
        }
    }
    return log;
}

} // namespace gsav::io
