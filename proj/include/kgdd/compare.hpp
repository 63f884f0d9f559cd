#pragma once

// Similarity metrics mapping a pair of values to [0,1], and comparator trees
// that combine per-property leaf scores with AND/OR/MIN/MAX/WAVG.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kgdd/core.hpp"
#include "kgdd/normalize.hpp"

namespace kgdd {

enum class Family { string, vector, pointset, temporal, topological };

std::string_view to_string(Family f);

class Comparator {
public:
    // Exact string equality.
    Comparator();

    // Known parameters: "q" (qgram), "scale" (geo-distance in meters,
    // temporal in seconds, numeric-absolute in units, bbox-overlap box
    // half-side in meters), "prefix-scale" (jaro-winkler, at most 0.25).
    // Throws ConfigError for unknown names or parameters.
    static Comparator make(std::string_view name, std::map<std::string, double> params = {});

    const std::string& name() const noexcept { return name_; }
    Family family() const noexcept { return family_; }
    const std::map<std::string, double>& params() const noexcept { return params_; }

    // Symmetric, in [0,1], 1 for equal values.
    double compare(const PropertyValue& a, const PropertyValue& b) const;

    friend bool operator==(const Comparator& a, const Comparator& b) {
        return a.name_ == b.name_ && a.params_ == b.params_;
    }

private:
    std::string name_;
    Family family_ = Family::string;
    std::map<std::string, double> params_;
    int q_ = 2;
    double scale_ = 1.0;
    double prefix_scale_ = 0.1;
};

std::vector<std::string> registered_comparators();

double compare_text(const Comparator& metric, std::string_view a, std::string_view b);
double compare_geo(GeoPoint a, GeoPoint b, double scale_meters);
double compare_temporal(std::int64_t a, std::int64_t b, double scale_seconds);
double haversine_meters(GeoPoint a, GeoPoint b);

namespace metrics {

// All string metrics work on Unicode code points.
std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b);
// Optimal string alignment distance (adjacent transpositions cost 1).
std::size_t osa_distance(std::u32string_view a, std::u32string_view b);
double levenshtein(std::string_view a, std::string_view b);
double damerau_levenshtein(std::string_view a, std::string_view b);
double jaro(std::string_view a, std::string_view b);
double jaro_winkler(std::string_view a, std::string_view b, double prefix_scale = 0.1);
double lcs_substring(std::string_view a, std::string_view b);
double lcs_subsequence(std::string_view a, std::string_view b);
double prefix(std::string_view a, std::string_view b);
double suffix(std::string_view a, std::string_view b);
double monge_elkan(std::string_view a, std::string_view b);
double jaccard(std::string_view a, std::string_view b);
double dice(std::string_view a, std::string_view b);
double overlap(std::string_view a, std::string_view b);
double cosine(std::string_view a, std::string_view b);
// Jaccard over the sets of q-grams; strings shorter than q are one gram.
double qgram(std::string_view a, std::string_view b, int q = 2);
double numeric_relative(double a, double b);
double numeric_absolute(double a, double b, double scale);

}  // namespace metrics

enum class MissingPolicy { ignore, pessimistic };
enum class CombineOp { conjunction, disjunction, minimum, maximum, weighted_average };

std::string_view to_string(MissingPolicy p);
std::string_view to_string(CombineOp op);  // AND, OR, MIN, MAX, WAVG
std::optional<CombineOp> parse_combine_op(std::string_view s);

struct Leaf {
    std::string property;
    CleanerChain cleaners;
    Comparator comparator;
    double weight = 1.0;
    double threshold = 0.0;
    MissingPolicy missing = MissingPolicy::ignore;

    friend bool operator==(const Leaf&, const Leaf&) = default;
};

struct ComparatorTree;

struct Branch {
    CombineOp op = CombineOp::weighted_average;
    std::vector<ComparatorTree> children;
    double weight = 1.0;
    double threshold = 0.0;

    friend bool operator==(const Branch&, const Branch&);
};

struct ComparatorTree {
    std::variant<Leaf, Branch> node;

    static ComparatorTree leaf(Leaf l) { return {std::move(l)}; }
    static ComparatorTree branch(CombineOp op, std::vector<ComparatorTree> children,
                                 double weight = 1.0, double threshold = 0.0);

    bool is_leaf() const noexcept { return std::holds_alternative<Leaf>(node); }
    double weight() const;
    double threshold() const;

    // Leaves in depth-first order; leaf scores are indexed the same way.
    std::vector<const Leaf*> leaves() const;
    // Per-leaf labels in depth-first order: the property name, suffixed with
    // "#2", "#3", ... when a property appears in several leaves.
    std::vector<std::string> leaf_labels() const;
    std::set<std::string> properties() const;

    // Throws ConfigError: weights must be > 0, thresholds in [0,1], branches
    // non-empty.
    void validate() const;

    friend bool operator==(const ComparatorTree&, const ComparatorTree&) = default;
};

inline bool operator==(const Branch& a, const Branch& b) {
    return a.op == b.op && a.children == b.children && a.weight == b.weight &&
           a.threshold == b.threshold;
}

struct TreeScore {
    std::optional<double> sim;  // absent when no leaf was comparable
    std::map<std::string, double> per_property;
    int comparable_leaves = 0;
};

/// Best score over the cross product of the (already cleaned) value lists.
/// With a missing side: nullopt under `ignore`, 0 under `pessimistic`.
std::optional<double> score_leaf(const Leaf& leaf, std::span<const PropertyValue> a,
                                 std::span<const PropertyValue> b);

/// Aggregates leaf scores given in depth-first order. Absent children are
/// excluded from their parent; a branch with no present child is absent.
std::optional<double> combine(const ComparatorTree& tree,
                              std::span<const std::optional<double>> leaf_scores);

/// Cleans both entities per leaf, scores the leaves and combines them.
TreeScore evaluate_tree(const ComparatorTree& tree, const Entity& a, const Entity& b);

}  // namespace kgdd
