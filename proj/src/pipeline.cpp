#include "kgdd/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include <spdlog/spdlog.h>

#include "kgdd/error.hpp"

namespace kgdd {

std::string_view to_string(MatchMode m) { return m == MatchMode::linkage ? "linkage" : "dedup"; }

void MatchConfig::validate() const {
    tree.validate();
    blocking.validate();
    if (!(accept_threshold >= 0.0 && accept_threshold <= 1.0)) {
        throw ConfigError("acceptThreshold must lie in [0,1]");
    }
    if (min_comparable_leaves < 1) throw ConfigError("minComparableLeaves must be >= 1");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

void check_properties(const MatchConfig& config, const std::set<std::string>& available) {
    for (const auto& p : config.tree.properties()) {
        if (!available.count(p)) throw ConfigError("comparator tree references unknown property '" + p + "'");
    }
}

RunResult run_space(const CandidateSpace& space, const MatchConfig& config, const RunOptions& options,
                    const char* label) {
    const auto started = Clock::now();
    RunResult result;
    RunReport& report = result.report;

    const auto leaves = config.tree.leaves();
    const auto labels = config.tree.leaf_labels();
    const double floor = std::min(options.record_floor.value_or(config.accept_threshold),
                                  config.accept_threshold);

    spdlog::info("{}: stage clean begin ({} entities, {} leaves)", label, space.size(), leaves.size());
    auto t = Clock::now();
    // cleaned[leaf][entity]
    std::vector<std::vector<std::vector<PropertyValue>>> cleaned(leaves.size());
    for (std::size_t l = 0; l < leaves.size(); ++l) {
        cleaned[l].reserve(space.size());
        for (const Entity* e : space.entities) {
            cleaned[l].push_back(clean_values(e->values(leaves[l]->property), leaves[l]->cleaners));
        }
    }
    report.stage_timings.push_back({"clean", seconds_since(t)});
    spdlog::info("{}: stage clean end ({:.3f}s)", label, report.stage_timings.back().seconds);

    const std::size_t estimate = options.progress ? estimate_pairs(space, config.blocking) : 0;
    spdlog::info("{}: stage block+compare begin (strategy {})", label, to_string(config.blocking.strategy));
    t = Clock::now();
    std::vector<std::optional<double>> scores(leaves.size());
    report.blocking = generate_pairs(space, config.blocking, [&](std::size_t i, std::size_t j) {
        ++report.candidate_count;
        int comparable = 0;
        for (std::size_t l = 0; l < leaves.size(); ++l) {
            const auto& a = cleaned[l][i];
            const auto& b = cleaned[l][j];
            if (!a.empty() && !b.empty()) ++comparable;
            scores[l] = score_leaf(*leaves[l], a, b);
        }
        if (options.progress && estimate > 0 && report.candidate_count % 4096 == 0) {
            options.progress(std::min(1.0, static_cast<double>(report.candidate_count) /
                                               static_cast<double>(estimate)));
        }
        if (comparable < config.min_comparable_leaves) return;
        const auto sim = combine(config.tree, scores);
        if (!sim) return;
        ++report.scored_count;
        if (*sim >= config.accept_threshold) ++report.accepted_count;
        if (*sim < floor) return;
        SameAsAssertion a{canonical_pair(space.entities[i]->id, space.entities[j]->id), *sim, {},
                          Verdict::unlabeled, DecidedBy::threshold};
        for (std::size_t l = 0; l < leaves.size(); ++l) {
            if (scores[l]) a.per_property[labels[l]] = *scores[l];
        }
        result.assertions.push_back(std::move(a));
    });
    report.stage_timings.push_back({"block+compare", seconds_since(t)});
    spdlog::info("{}: stage block+compare end ({:.3f}s): {} candidates, {} scored, {} accepted", label,
                 report.stage_timings.back().seconds, report.candidate_count, report.scored_count,
                 report.accepted_count);
    if (report.blocking.unkeyed > 0) {
        report.warnings.push_back(std::to_string(report.blocking.unkeyed) +
                                  " entities produced no blocking key");
        spdlog::info("{}: {} entities produced no blocking key", label, report.blocking.unkeyed);
    }
    if (report.blocking.skipped_same_id > 0) {
        report.warnings.push_back(std::to_string(report.blocking.skipped_same_id) +
                                  " linkage pairs named the same id on both sides and were skipped");
    }

    t = Clock::now();
    std::sort(result.assertions.begin(), result.assertions.end(),
              [](const SameAsAssertion& a, const SameAsAssertion& b) { return a.pair < b.pair; });
    report.stage_timings.push_back({"assemble", seconds_since(t)});
    if (options.progress) options.progress(1.0);
    report.wall_time_seconds = seconds_since(started);
    spdlog::info("{}: done in {:.3f}s", label, report.wall_time_seconds);
    return result;
}

}  // namespace

RunResult run_dedup(const Dataset& dataset, const MatchConfig& config, const RunOptions& options) {
    config.validate();
    if (dataset.entities.empty()) {
        RunResult r;
        r.report.warnings.push_back("dataset '" + dataset.id + "' is empty");
        spdlog::warn("dedup: dataset '{}' is empty", dataset.id);
        return r;
    }
    check_properties(config, dataset.property_names());
    return run_space(CandidateSpace::of(dataset.entities), config, options, "dedup");
}

RunResult run_linkage(const Dataset& a, const Dataset& b, const MatchConfig& config,
                      const RunOptions& options) {
    config.validate();
    if (a.entities.empty() || b.entities.empty()) {
        RunResult r;
        r.report.warnings.push_back("linkage input is empty");
        spdlog::warn("linkage: input is empty");
        return r;
    }
    auto names = a.property_names();
    names.merge(b.property_names());
    check_properties(config, names);
    return run_space(CandidateSpace::linkage(a.entities, b.entities), config, options, "linkage");
}

std::vector<CanonicalPair> accepted_pairs(const std::vector<SameAsAssertion>& assertions,
                                          double threshold) {
    std::vector<CanonicalPair> out;
    for (const auto& a : assertions) {
        if (a.sim >= threshold) out.push_back(a.pair);
    }
    return out;
}

}  // namespace kgdd
