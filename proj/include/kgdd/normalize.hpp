#pragma once

// Cleaners canonicalize property values before comparison. A chain applies
// its steps left to right over the value list of one property; most cleaners
// act per value, alias-concat and alias-split act on the whole list.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgdd/core.hpp"

namespace kgdd {

struct CleanerStep {
    std::string name;
    std::map<std::string, std::string> params;

    friend bool operator==(const CleanerStep&, const CleanerStep&) = default;
};

class CleanerChain {
public:
    CleanerChain() = default;

    // Resolves every step against the registry. Unknown names and bad
    // parameters throw ConfigError here, never later at clean time.
    static CleanerChain build(std::vector<CleanerStep> steps);
    static CleanerChain build(std::initializer_list<std::string_view> names);

    const std::vector<CleanerStep>& steps() const noexcept { return steps_; }
    bool empty() const noexcept { return steps_.empty(); }

    std::vector<PropertyValue> apply(std::vector<PropertyValue> values) const;

    friend bool operator==(const CleanerChain& a, const CleanerChain& b) {
        return a.steps_ == b.steps_;
    }

private:
    using Fn = std::function<std::vector<PropertyValue>(std::vector<PropertyValue>)>;

    std::vector<CleanerStep> steps_;
    std::vector<Fn> fns_;
};

/// Cleans one value. Returns nullopt when the chain scrubs it. With a
/// list-level step (alias-split) that yields several values, the first one is
/// returned; use clean_values to keep them all.
std::optional<PropertyValue> clean(const PropertyValue& value, const CleanerChain& chain);

std::vector<PropertyValue> clean_values(std::span<const PropertyValue> values,
                                        const CleanerChain& chain);

/// Names of all built-in cleaners, sorted.
std::vector<std::string> registered_cleaners();

namespace cleaners {

// Individual string transforms, exposed for reuse by blocking key functions.
std::string strip_punctuation(std::string_view s);
std::string strip_accents(std::string_view s);
std::string digits_only(std::string_view s);
std::string phone_normalize(std::string_view s);
std::string ordinal_to_digit(std::string_view s);
std::string address_token_reorder(std::string_view s);
std::string expand_abbreviations(std::string_view s);
std::string token_sort(std::string_view s);
std::string strip_country_suffix(std::string_view s);
std::string url_normalize(std::string_view s);

}  // namespace cleaners

}  // namespace kgdd
