// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include <gsav/composition.hpp>

#include <algorithm>
#include <numeric>
#include <string>

namespace gsav {

void CompositionConfig::validate() const {
    for (int v : {min_coverage_body, min_coverage_head, redundancy_coverage})
        if (v < 1 || v > kCanonicalViewCount)
            throw ValidationError("composition: coverage thresholds must lie in [1, 4]");
    if (!(salience_epsilon >= 0.0)) throw ValidationError("composition: salience_epsilon < 0");
}

std::string_view rule_name(DropRule r) {
    switch (r) {
    case DropRule::None:
        return "none";
    case DropRule::Reliability:
        return "reliability";
    case DropRule::Redundancy:
        return "redundancy";
    case DropRule::Salience:
        return "salience";
    }
    return "none";
}

DropRule parse_rule(std::string_view name) {
    for (DropRule r : {DropRule::None, DropRule::Reliability, DropRule::Redundancy,
                       DropRule::Salience})
        if (rule_name(r) == name) return r;
    throw ValidationError("unknown composition rule '" + std::string(name) + "'");
}

namespace {

using PartTable = std::array<const PartInput*, 4>;

PartTable index_parts(const PartViews& parts, bool allow_subset) {
    PartTable table{};
    for (const PartInput& p : parts) {
        auto& slot = table[static_cast<std::size_t>(p.cloud.part())];
        if (slot)
            throw ValidationError("composition: part '" + std::string(part_name(p.cloud.part())) +
                                  "' supplied twice");
        if (p.views.size() != kCanonicalViewCount)
            throw ValidationError("composition: part '" + std::string(part_name(p.cloud.part())) +
                                  "' needs exactly 4 canonical views");
        slot = &p;
    }
    if (!allow_subset)
        for (PartLabel p : kAllParts)
            if (!table[static_cast<std::size_t>(p)])
                throw ValidationError("composition: missing part '" + std::string(part_name(p)) +
                                      "' (subset mode not enabled)");
    return table;
}

/// Storage positions of a cloud ordered by source_index.
std::vector<std::size_t> by_source_index(const SplatCloud& cloud) {
    std::vector<std::size_t> order(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) order[cloud.source_index()[i]] = i;
    return order;
}

CompositionResult assemble(const PartTable& table, std::vector<Decision> log) {
    CompositionResult out;
    std::vector<Splat> splats;
    std::vector<Vec3f> normals;
    bool any_normals = false;
    for (const PartInput* p : table)
        if (p && p->cloud.has_normals()) any_normals = true;

    std::array<std::vector<std::size_t>, 4> positions;
    for (std::size_t k = 0; k < table.size(); ++k)
        if (table[k]) positions[k] = by_source_index(table[k]->cloud);

    for (const Decision& d : log) {
        if (!d.kept) continue;
        const PartInput* p = table[static_cast<std::size_t>(d.origin.part)];
        const std::size_t pos = positions[static_cast<std::size_t>(d.origin.part)][d.origin.source_index];
        splats.push_back(p->cloud[pos]);
        if (any_normals)
            normals.push_back(p->cloud.has_normals() ? p->cloud.normals()[pos] : Vec3f::Zero());
        out.origins.push_back(d.origin);
    }
    std::vector<std::uint32_t> ids(splats.size());
    std::iota(ids.begin(), ids.end(), 0u);
    out.cloud = SplatCloud(PartLabel::Full, std::move(splats), std::move(ids), std::move(normals));
    out.log = std::move(log);
    return out;
}

} // namespace

CompositionResult compose(const PartViews& parts, const CompositionConfig& cfg) {
    cfg.validate();
    const PartTable table = index_parts(parts, cfg.allow_subset);

    std::vector<Decision> log;
    for (PartLabel p : kAllParts) {
        const PartInput* own = table[static_cast<std::size_t>(p)];
        if (!own) continue;
        const SplatCloud& cloud = own->cloud;
        const std::size_t n = cloud.size();

        // Coverage of every splat under every present part's views.
        std::array<std::vector<int>, 4> coverage;
        for (PartLabel q : kAllParts) {
            const PartInput* other = table[static_cast<std::size_t>(q)];
            if (!other) continue;
            auto& cov = coverage[static_cast<std::size_t>(q)];
            cov.resize(n);
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
                cov[i] = view_coverage(cloud[i], other->views, cfg.coverage_mode, cfg.render);
        }

        // Salience of this cloud under its own views and under each
        // equal-detail part's views; clouds are never mixed.
        std::vector<double> sal_own(n, 0.0);
        std::vector<std::optional<double>> sal_other(n);
        std::vector<PartLabel> peers;
        for (PartLabel q : kAllParts)
            if (q != p && detail_level(q) == detail_level(p) && table[static_cast<std::size_t>(q)])
                peers.push_back(q);
        if (cfg.salience_rule && !peers.empty()) {
            sal_own = splat_salience(cloud, own->views, cfg.render, cfg.salience_reduction);
            for (PartLabel q : peers) {
                const auto s = splat_salience(cloud, table[static_cast<std::size_t>(q)]->views,
                                              cfg.render, cfg.salience_reduction);
                for (std::size_t i = 0; i < n; ++i)
                    sal_other[i] = std::max(sal_other[i].value_or(s[i]), s[i]);
            }
        }

        const int min_cov = p == PartLabel::Head ? cfg.min_coverage_head : cfg.min_coverage_body;
        for (std::size_t pos : by_source_index(cloud)) {
            Decision d;
            d.origin = {p, cloud.source_index()[pos]};
            for (PartLabel q : kAllParts)
                if (table[static_cast<std::size_t>(q)])
                    d.coverage_by_part[static_cast<std::size_t>(q)] =
                        coverage[static_cast<std::size_t>(q)][pos];
            d.coverage_own = coverage[static_cast<std::size_t>(p)][pos];
            d.salience_own = sal_own[pos];
            d.salience_other = sal_other[pos];

            if (d.coverage_own < min_cov) {
                d.rule = DropRule::Reliability;
            } else {
                for (PartLabel q : kAllParts) {
                    if (detail_level(q) <= detail_level(p) || !table[static_cast<std::size_t>(q)])
                        continue;
                    if (coverage[static_cast<std::size_t>(q)][pos] >= cfg.redundancy_coverage) {
                        d.rule = DropRule::Redundancy;
                        break;
                    }
                }
                if (d.rule == DropRule::None && d.salience_other &&
                    *d.salience_other > d.salience_own && *d.salience_other > cfg.salience_epsilon)
                    d.rule = DropRule::Salience;
            }
            d.kept = d.rule == DropRule::None;
            log.push_back(d);
        }
    }
    return assemble(table, std::move(log));
}

CompositionResult direct_union(const PartViews& parts) {
    std::array<const PartInput*, 4> table{};
    for (const PartInput& p : parts) {
        auto& slot = table[static_cast<std::size_t>(p.cloud.part())];
        if (slot)
            throw ValidationError("direct_union: part '" + std::string(part_name(p.cloud.part())) +
                                  "' supplied twice");
        slot = &p;
    }
    std::vector<Decision> log;
    for (PartLabel p : kAllParts) {
        const PartInput* own = table[static_cast<std::size_t>(p)];
        if (!own) continue;
        for (std::size_t pos : by_source_index(own->cloud)) {
            Decision d;
            d.origin = {p, own->cloud.source_index()[pos]};
            log.push_back(d);
        }
    }
    return assemble(table, std::move(log));
}

CompositionResult replay_decisions(const PartViews& parts, const std::vector<Decision>& log) {
    std::array<const PartInput*, 4> table{};
    for (const PartInput& p : parts) table[static_cast<std::size_t>(p.cloud.part())] = &p;
    std::vector<Decision> ordered = log;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const Decision& a, const Decision& b) { return a.origin < b.origin; });
    for (std::size_t k = 0; k < ordered.size(); ++k) {
        const Decision& d = ordered[k];
        if (k > 0 && ordered[k - 1].origin == d.origin)
            throw ValidationError("replay: log lists a splat twice");
        const PartInput* p = table[static_cast<std::size_t>(d.origin.part)];
        if (!p) throw ValidationError("replay: log references an absent part");
        if (d.origin.source_index >= p->cloud.size())
            throw ValidationError("replay: log references an unknown source_index");
        if (d.kept != (d.rule == DropRule::None))
            throw ValidationError("replay: log entry has inconsistent kept/rule fields");
    }
    return assemble(table, std::move(ordered));
}

} // namespace gsav
