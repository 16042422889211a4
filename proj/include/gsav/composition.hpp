// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gsav/core.hpp>
#include <gsav/renderer.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gsav {

inline constexpr int kCanonicalViewCount = 4;

struct CompositionConfig {
    int min_coverage_body = 3;    // splat must be seen by more than 2 own views
    int min_coverage_head = 4;
    int redundancy_coverage = 3;  // views of a more detailed part that make a splat redundant
    double salience_epsilon = 1e-8;
    bool salience_rule = true;
    /// Allow a subset of the four parts; rules involving absent parts are
    /// skipped.
    bool allow_subset = false;
    CoverageMode coverage_mode = CoverageMode::Center;
    SalienceReduction salience_reduction = SalienceReduction::SumOfAbs;
    RenderConfig render;

    /// Thresholds must lie in [1, 4]. Throws ValidationError.
    void validate() const;
};

/// One part's reconstruction and its four canonical views (front, left,
/// back, right).
struct PartInput {
    SplatCloud cloud;
    std::vector<Camera> views;
};

/// Any subset of parts, in any storage order; each part at most once.
using PartViews = std::vector<PartInput>;

enum class DropRule : std::uint8_t { None = 0, Reliability = 1, Redundancy = 2, Salience = 3 };

std::string_view rule_name(DropRule r);
DropRule parse_rule(std::string_view name);

/// Identifies a splat across the input parts.
struct SplatOrigin {
    PartLabel part = PartLabel::Full;
    std::uint32_t source_index = 0;

    friend bool operator==(const SplatOrigin&, const SplatOrigin&) = default;
    friend auto operator<=>(const SplatOrigin&, const SplatOrigin&) = default;
};

struct Decision {
    SplatOrigin origin;
    bool kept = true;
    DropRule rule = DropRule::None;
    int coverage_own = 0;
    /// Coverage of the splat by each present part's views, indexed by
    /// PartLabel; nullopt for absent parts.
    std::array<std::optional<int>, 4> coverage_by_part{};
    double salience_own = 0.0;
    /// Largest salience under the views of an equal-detail part; nullopt
    /// when no such part is present or the rule is disabled.
    std::optional<double> salience_other;
};

struct CompositionResult {
    /// Survivors in part order Full, Upper, Lower, Head, ascending
    /// source_index within each part. Labeled Full, source_index 0..M-1.
    SplatCloud cloud;
    std::vector<SplatOrigin> origins;
    /// One entry per input splat, same ordering convention as `cloud`.
    std::vector<Decision> log;
};

/// Visibility-aware merge. Per splat, first firing rule wins:
///  1. reliability: own-view coverage below the part's threshold;
///  2. redundancy: some more detailed part's views cover it at least
///     redundancy_coverage times;
///  3. salience: an equal-detail part's views see it with higher salience
///     than its own views (and above salience_epsilon).
CompositionResult compose(const PartViews& parts, const CompositionConfig& cfg = {});

/// Ablation baseline: every splat of every part, no filtering.
CompositionResult direct_union(const PartViews& parts);

/// Rebuilds the composed cloud from the inputs and a decision log.
CompositionResult replay_decisions(const PartViews& parts, const std::vector<Decision>& log);

} // namespace gsav
