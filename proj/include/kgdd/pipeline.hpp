#pragma once

// clean -> block -> compare -> threshold, producing scored isSameAs
// assertions for one dataset (deduplication) or two (linkage).

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kgdd/blocking.hpp"
#include "kgdd/compare.hpp"
#include "kgdd/core.hpp"
#include "kgdd/ingest.hpp"

namespace kgdd {

enum class MatchMode { dedup, linkage };

std::string_view to_string(MatchMode m);

struct MatchConfig {
    ComparatorTree tree;
    BlockingSpec blocking;
    double accept_threshold = 0.9;
    // Pairs with fewer comparable leaves are rejected whatever their score.
    int min_comparable_leaves = 2;
    MatchMode mode = MatchMode::dedup;

    // Throws ConfigError.
    void validate() const;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct RunReport {
    std::size_t candidate_count = 0;  // pairs produced by blocking and evaluated
    std::size_t scored_count = 0;     // pairs with a score and enough evidence
    std::size_t accepted_count = 0;   // scored pairs at or above the threshold
    double wall_time_seconds = 0.0;
    std::vector<StageTiming> stage_timings;
    std::vector<std::string> warnings;
    BlockingStats blocking;
};

struct RunOptions {
    // Also keep scored pairs down to this similarity (for threshold sweeps).
    // Defaults to the acceptance threshold.
    std::optional<double> record_floor;
    // Called with the completed fraction of the estimated pair count.
    std::function<void(double)> progress;
};

struct RunResult {
    // Sorted by canonical pair; verdict unlabeled, decided by threshold.
    std::vector<SameAsAssertion> assertions;
    RunReport report;
};

/// Throws ConfigError when the tree names a property that no entity has.
RunResult run_dedup(const Dataset& dataset, const MatchConfig& config,
                    const RunOptions& options = {});

/// Only pairs across the two datasets are scored. A pair that names the same
/// id on both sides is skipped (reflexive) and counted in the warnings.
RunResult run_linkage(const Dataset& a, const Dataset& b, const MatchConfig& config,
                      const RunOptions& options = {});

/// The assertions at or above `threshold`, as canonical pairs.
std::vector<CanonicalPair> accepted_pairs(const std::vector<SameAsAssertion>& assertions,
                                          double threshold);

}  // namespace kgdd
