#pragma once

// Domain model: entities with multi-valued, typed, provenance-tagged
// properties, isSameAs assertions stored as canonical pairs, and the
// equivalence sets obtained by closing confirmed assertions.

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kgdd {

/// Identifier of an entity: an IRI or any opaque non-empty string.
class EntityId {
public:
    explicit EntityId(std::string value);

    const std::string& str() const noexcept { return value_; }

    friend auto operator<=>(const EntityId&, const EntityId&) = default;
    friend bool operator==(const EntityId&, const EntityId&) = default;

private:
    std::string value_;
};

enum class ValueKind { text, number, url, geopoint, timestamp };

std::string_view to_string(ValueKind kind);
std::optional<ValueKind> parse_value_kind(std::string_view name);

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct Provenance {
    std::string source;
    std::int64_t ingested = 0;  // seconds since the Unix epoch

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// A single property value. `raw` is the lexical form and is never empty;
/// absent values are represented by absence from the property list.
class PropertyValue {
public:
    static PropertyValue text(std::string raw, Provenance prov = {},
                              std::optional<double> quality = {});
    static PropertyValue url(std::string raw, Provenance prov = {},
                             std::optional<double> quality = {});
    static PropertyValue number(double value, Provenance prov = {},
                                std::optional<double> quality = {});
    // Throws ValidationError when `raw` is not a finite decimal number.
    static PropertyValue number(std::string_view raw, Provenance prov = {},
                                std::optional<double> quality = {});
    static PropertyValue geo(GeoPoint point, Provenance prov = {},
                             std::optional<double> quality = {});
    static PropertyValue timestamp(std::int64_t seconds, Provenance prov = {},
                                   std::optional<double> quality = {});
    // Accepts ISO-8601 UTC ("2020-01-31T12:00:00Z", date-only allowed) or
    // integer epoch seconds.
    static PropertyValue timestamp(std::string_view raw, Provenance prov = {},
                                   std::optional<double> quality = {});
    // Builds a value of `kind` from its lexical form ("lat,lon" for geopoints).
    static PropertyValue parse(ValueKind kind, std::string_view raw, Provenance prov = {},
                               std::optional<double> quality = {});

    ValueKind kind() const noexcept { return kind_; }
    const std::string& raw() const noexcept { return raw_; }
    double as_number() const noexcept { return number_; }
    GeoPoint as_geo() const noexcept { return geo_; }
    std::int64_t as_time() const noexcept { return time_; }
    bool is_numeric() const noexcept {
        return kind_ == ValueKind::number || kind_ == ValueKind::geopoint;
    }

    const Provenance& provenance() const noexcept { return provenance_; }
    std::optional<double> quality() const noexcept { return quality_; }
    double quality_or_default() const noexcept { return quality_.value_or(1.0); }

    // Same kind, provenance and quality with a new lexical form. Only valid
    // for text and url values.
    PropertyValue with_raw(std::string raw) const;
    PropertyValue with_provenance(Provenance prov) const;
    PropertyValue with_quality(std::optional<double> quality) const;

    friend bool operator==(const PropertyValue&, const PropertyValue&) = default;

private:
    PropertyValue() = default;

    ValueKind kind_ = ValueKind::text;
    std::string raw_;
    double number_ = 0.0;
    GeoPoint geo_{};
    std::int64_t time_ = 0;
    Provenance provenance_;
    std::optional<double> quality_;
};

std::string format_number(double value);
std::string format_timestamp(std::int64_t seconds);
std::optional<std::int64_t> parse_timestamp(std::string_view raw);

/// Property name -> ordered value list, kept in insertion order so that
/// merged aliases preserve source order. Equality ignores key order.
class PropertyMap {
public:
    using value_type = std::pair<std::string, std::vector<PropertyValue>>;
    using iterator = std::vector<value_type>::iterator;
    using const_iterator = std::vector<value_type>::const_iterator;

    PropertyMap() = default;
    PropertyMap(std::initializer_list<value_type> init);

    // Appends an empty list for a new key.
    std::vector<PropertyValue>& operator[](std::string_view key);

    iterator find(std::string_view key);
    const_iterator find(std::string_view key) const;
    bool contains(std::string_view key) const { return find(key) != end(); }
    std::size_t erase(std::string_view key);

    iterator begin() noexcept { return items_.begin(); }
    iterator end() noexcept { return items_.end(); }
    const_iterator begin() const noexcept { return items_.begin(); }
    const_iterator end() const noexcept { return items_.end(); }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }

    std::vector<std::string> keys() const;

    friend bool operator==(const PropertyMap& a, const PropertyMap& b);

private:
    std::vector<value_type> items_;
};

struct Entity {
    EntityId id;
    std::string type;
    PropertyMap properties;

    // Empty span when the property is absent.
    std::span<const PropertyValue> values(std::string_view property) const;
    bool has(std::string_view property) const { return !values(property).empty(); }
    // Throws ValidationError for an entity without properties or with an
    // empty property list.
    void validate() const;

    friend bool operator==(const Entity&, const Entity&) = default;
};

/// An unordered pair of distinct ids, stored smaller id first.
class CanonicalPair {
public:
    const EntityId& first() const noexcept { return first_; }
    const EntityId& second() const noexcept { return second_; }
    std::string key() const { return first_.str() + '\t' + second_.str(); }

    friend auto operator<=>(const CanonicalPair&, const CanonicalPair&) = default;
    friend bool operator==(const CanonicalPair&, const CanonicalPair&) = default;

private:
    friend CanonicalPair canonical_pair(const EntityId& a, const EntityId& b);
    CanonicalPair(EntityId a, EntityId b) : first_(std::move(a)), second_(std::move(b)) {}

    EntityId first_;
    EntityId second_;
};

// Throws SelfPairError when a == b: reflexive pairs are never materialized.
CanonicalPair canonical_pair(const EntityId& a, const EntityId& b);

enum class Verdict { unlabeled, same, different, related };
enum class DecidedBy { threshold, human };

std::string_view to_string(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view s);
std::string_view to_string(DecidedBy d);

struct SameAsAssertion {
    CanonicalPair pair;
    double sim = 0.0;
    std::map<std::string, double> per_property;
    Verdict verdict = Verdict::unlabeled;
    DecidedBy decided_by = DecidedBy::threshold;

    friend bool operator==(const SameAsAssertion&, const SameAsAssertion&) = default;
};

struct EquivalenceSet {
    std::vector<EntityId> members;  // sorted, non-empty

    bool contains(const EntityId& id) const;
    friend bool operator==(const EquivalenceSet&, const EquivalenceSet&) = default;
};

struct ConstraintViolation {
    EquivalenceSet set;
    std::string property;
    std::vector<std::string> values;  // distinct normalized values, sorted
};

/// Union-find closure of the confirmed pairs over `ids`. Every id ends up in
/// exactly one set; singletons are kept. Output is sorted by first member.
/// Throws ReferentialError when a pair names an id outside `ids`.
std::vector<EquivalenceSet> equivalence_classes(std::span<const EntityId> ids,
                                                std::span<const CanonicalPair> confirmed);

// Only assertions with verdict `same` merge sets; `related` is reporting-only.
std::vector<EquivalenceSet> equivalence_classes(std::span<const EntityId> ids,
                                                std::span<const SameAsAssertion> assertions);

}  // namespace kgdd

template <>
struct std::hash<kgdd::EntityId> {
    std::size_t operator()(const kgdd::EntityId& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};
