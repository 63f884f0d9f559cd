#pragma once

// Conflict resolution inside an equivalence set: one fused entity per class,
// with a decision log and human overrides restricted to input values.

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "kgdd/core.hpp"

namespace kgdd {

enum class FusionFunction { filter, average, voting, latest, prefer_source, longest, union_values };

std::string_view to_string(FusionFunction f);  // "filter", ..., "prefer-source", "union"
std::optional<FusionFunction> parse_fusion_function(std::string_view s);

/// Whether the function can yield several values (filter, union).
bool is_multi_valued(FusionFunction f);

struct FusionRule {
    FusionFunction function = FusionFunction::union_values;
    // prefer-source: "sources" = comma-separated source labels, highest
    // priority first. filter: optional "threshold" overriding the policy's.
    std::map<std::string, std::string> params;

    friend bool operator==(const FusionRule&, const FusionRule&) = default;
};

struct FusionPolicy {
    std::map<std::string, FusionRule> per_property;
    std::set<std::string> unique;
    double quality_threshold = 0.5;
    // Applied to properties without a rule; unique properties without a rule
    // fall back to voting and are flagged for review when values disagree.
    FusionRule default_rule;

    FusionRule rule_for(const std::string& property) const;

    // Throws PolicyError: a unique property assigned a multi-valued
    // function, bad parameters, thresholds outside [0,1].
    void validate() const;
    // Also checks the rules against the data: average needs number or
    // geopoint values of a single kind.
    void validate(std::span<const Entity> entities) const;
};

struct FusionDecision {
    std::string property;
    std::vector<PropertyValue> inputs;
    std::string function;  // fusion function name, or "override"
    std::vector<PropertyValue> output;
    std::string rationale;
    DecidedBy decided_by = DecidedBy::threshold;  // human for overrides
    std::string actor;                            // operator of an override

    friend bool operator==(const FusionDecision&, const FusionDecision&) = default;
};

struct FusedEntity {
    EntityId id;
    std::string type;
    std::vector<EntityId> members;  // sorted
    PropertyMap properties;          // keys sorted
    std::vector<FusionDecision> decisions;
    // Properties that need human review (unique-value conflicts, missing
    // preferred source).
    std::set<std::string> unresolved;

    Entity as_entity() const;

    friend bool operator==(const FusedEntity&, const FusedEntity&) = default;
};

/// "urn:kgdd:fused:" followed by the sorted member ids joined with '+'.
EntityId fused_id(std::span<const EntityId> members);

/// Pure and order-independent. Values are grouped by kind and lexical form;
/// ties are broken by higher quality, newer ingestion time, then the
/// lexicographically smaller form. Averages sum in ascending order.
/// Throws ReferentialError for members missing from `entities`,
/// ValidationError for an empty class and PolicyError for rules that do not
/// fit the values.
FusedEntity fuse_class(const EquivalenceSet& cls, std::span<const Entity> entities,
                       const FusionPolicy& policy);

struct Override {
    std::string property;
    std::string chosen;  // lexical form of one of the inputs
    std::string actor;
};

/// Replaces a property's output with one of its original inputs and appends a
/// human decision. Throws ValidationError for unknown properties and values
/// that were not inputs.
FusedEntity resolve_overrides(const FusedEntity& fused, std::span<const Override> overrides);

namespace fusion {

// The individual functions over one property's input values. Each returns
// the output values and fills `rationale`.
std::vector<PropertyValue> filter(std::span<const PropertyValue> in, double threshold, std::string& rationale);
std::vector<PropertyValue> average(std::span<const PropertyValue> in, std::string& rationale);
std::vector<PropertyValue> voting(std::span<const PropertyValue> in, std::string& rationale);
std::vector<PropertyValue> latest(std::span<const PropertyValue> in, std::string& rationale);
std::vector<PropertyValue> longest(std::span<const PropertyValue> in, std::string& rationale);
std::vector<PropertyValue> union_values(std::span<const PropertyValue> in, std::string& rationale);
// Voting among the values of the best-ranked listed source present. Sets
// `fell_back` and votes over everything when no listed source is present.
std::vector<PropertyValue> prefer_source(std::span<const PropertyValue> in,
                                         std::span<const std::string> sources, bool& fell_back,
                                         std::string& rationale);

}  // namespace fusion

}  // namespace kgdd
