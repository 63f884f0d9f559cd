#pragma once

// Gold-standard labeling, precision/recall/F1 scoring, threshold sweeps,
// genetic configuration learning and per-property feature reports.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgdd/core.hpp"
#include "kgdd/ingest.hpp"
#include "kgdd/pipeline.hpp"

namespace kgdd {

struct LabelRecord {
    CanonicalPair pair;
    Verdict verdict = Verdict::same;
    std::string labeler;
    std::int64_t timestamp = 0;

    friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

/// Append-only label store. At most one current verdict per pair; later
/// labels supersede earlier ones and the full history is kept.
class GoldStandard {
public:
    GoldStandard() = default;

    // A copy with `record` appended. Throws ValidationError for `unlabeled`.
    GoldStandard with(LabelRecord record) const;

    std::optional<Verdict> verdict(const CanonicalPair& pair) const;
    const std::map<CanonicalPair, Verdict>& current() const noexcept { return current_; }
    const std::vector<LabelRecord>& history() const noexcept { return history_; }
    std::size_t version() const noexcept { return history_.size(); }
    std::size_t size() const noexcept { return current_.size(); }
    bool empty() const noexcept { return current_.empty(); }
    std::size_t count(Verdict v) const;

    friend bool operator==(const GoldStandard&, const GoldStandard&) = default;

private:
    std::vector<LabelRecord> history_;
    std::map<CanonicalPair, Verdict> current_;
};

/// Canonicalizes (a, b) and records the verdict. Throws SelfPairError for
/// a == b and ValidationError for the `unlabeled` verdict.
GoldStandard submit_label(const GoldStandard& gold, const EntityId& a, const EntityId& b,
                          Verdict verdict, std::string labeler, std::int64_t timestamp = 0);

/// Unlabeled assertions by descending sim, ties by canonical pair, capped at
/// `limit`.
std::vector<SameAsAssertion> next_candidates_for_labeling(std::span<const SameAsAssertion> assertions,
                                                          const GoldStandard& gold,
                                                          std::size_t limit);

/// Pairs treated as duplicates after verification: assertions at or above
/// `threshold`, minus pairs labeled different or related, plus pairs
/// labeled same. Sorted.
std::vector<CanonicalPair> confirmed_pairs(std::span<const SameAsAssertion> assertions,
                                           const GoldStandard& gold, double threshold);

// Open world: pairs outside the gold standard are unjudged. Closed world:
// every pair not labeled same is a non-duplicate (fully labeled synthetic data).
enum class WorldAssumption { open, closed };

struct EvalReport {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::optional<std::size_t> tn;  // judged non-duplicates not accepted (open world only)
    std::size_t unjudged = 0;       // accepted pairs absent from the gold standard
    std::size_t related = 0;        // accepted pairs labeled related; excluded from tp/fp/fn
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Precision, recall and F1 from raw counts; 0 where a denominator is 0.
EvalReport make_report(std::size_t tp, std::size_t fp, std::size_t fn);

/// Throws ValidationError when the gold standard is empty.
EvalReport score(std::span<const CanonicalPair> accepted, const GoldStandard& gold,
                 WorldAssumption world = WorldAssumption::open);

/// One report per threshold over the same scored assertions. Thresholds
/// outside [0,1] throw ConfigError.
std::vector<std::pair<double, EvalReport>> threshold_sweep(std::span<const SameAsAssertion> scored,
                                                           const GoldStandard& gold,
                                                           std::span<const double> thresholds,
                                                           WorldAssumption world = WorldAssumption::open);

/// Allowed choices for one property in the learned configuration.
struct PropertyGenes {
    std::string property;
    std::vector<Comparator> comparators;
    std::vector<CleanerChain> chains;
    MissingPolicy missing = MissingPolicy::ignore;
};

struct SearchSpace {
    std::vector<PropertyGenes> properties;
    std::vector<CombineOp> root_ops = {CombineOp::conjunction, CombineOp::weighted_average,
                                       CombineOp::minimum, CombineOp::maximum};
    std::pair<double, double> weight_range{0.5, 3.0};
    std::pair<double, double> leaf_threshold_range{0.0, 1.0};
    std::pair<double, double> accept_threshold_range{0.5, 1.0};
    std::vector<int> min_comparable_leaves = {1, 2};
    // Blocking alternatives; empty means GAParams::blocking only.
    std::vector<BlockingSpec> blockings;
};

/// Comparators and cleaner chains suited to each property of the dataset.
SearchSpace default_search_space(const Dataset& dataset);

struct GAParams {
    std::size_t population_size = 30;
    std::size_t generations = 20;
    double mutation_rate = 0.1;
    double crossover_rate = 0.8;
    std::uint64_t seed = 42;
    std::size_t tournament = 3;
    std::size_t elite = 1;
    SearchSpace space;
    BlockingSpec blocking;
    WorldAssumption world = WorldAssumption::open;
    // Individuals placed in the initial population, in order. Each must be a
    // single leaf or one combinator over leaves drawn from the search space.
    std::vector<MatchConfig> seeds;

    // Throws ConfigError.
    void validate() const;
};

struct LearnResult {
    MatchConfig best;
    double best_fitness = 0.0;
    // Best fitness seen up to and including each generation; generation 0 is
    // the initial population.
    std::vector<double> fitness_trace;
};

/// Genetic search over configurations with F1 against the gold standard as
/// fitness. Requires at least one `same` and one `different` label unless the
/// world is closed. Reproducible from `params.seed`.
LearnResult learn_config(const Dataset& dataset, const GoldStandard& gold, const GAParams& params);

struct FeatureRow {
    std::string property;
    double fill_rate = 0.0;
    double distinctness = 0.0;
    bool discriminative = true;
    std::string comparator;
    double best_threshold = 0.0;
    EvalReport standalone;  // single-leaf config at best_threshold
};

/// One row per property, ordered by standalone F1 (descending), then name.
std::vector<FeatureRow> feature_report(const Dataset& dataset, const GoldStandard& gold,
                                       WorldAssumption world = WorldAssumption::open,
                                       const BlockingSpec& blocking = {});

}  // namespace kgdd
