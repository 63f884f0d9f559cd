#include "kgdd/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "kgdd/error.hpp"
#include "kgdd/text.hpp"

namespace kgdd {

EntityId::EntityId(std::string value) : value_(std::move(value)) {
    if (value_.empty()) throw ValidationError("entity id must not be empty");
}

std::string_view to_string(ValueKind kind) {
    switch (kind) {
        case ValueKind::text: return "text";
        case ValueKind::number: return "number";
        case ValueKind::url: return "url";
        case ValueKind::geopoint: return "geopoint";
        case ValueKind::timestamp: return "timestamp";
    }
    return "text";
}

std::optional<ValueKind> parse_value_kind(std::string_view name) {
    if (name == "text") return ValueKind::text;
    if (name == "number") return ValueKind::number;
    if (name == "url") return ValueKind::url;
    if (name == "geopoint") return ValueKind::geopoint;
    if (name == "timestamp") return ValueKind::timestamp;
    return std::nullopt;
}

namespace {

void check_quality(std::optional<double> q) {
    if (q && !(*q >= 0.0 && *q <= 1.0)) throw ValidationError("quality must lie in [0,1]");
}

void check_raw(const std::string& raw) {
    if (raw.empty()) throw ValidationError("property value must not be empty");
}

std::optional<double> parse_double(std::string_view s) {
    const std::string t = text::trim(s);
    if (t.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = t.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
}

bool read_fixed(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc{} && ptr == s.data() + pos + len;
}

}  // namespace

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

std::string format_timestamp(std::int64_t seconds) {
    std::int64_t days = seconds / 86400;
    std::int64_t rem = seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    std::int64_t y = 0;
    unsigned m = 0;
    unsigned d = 0;
    civil_from_days(days, y, m, d);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
    return buf;
}

std::optional<std::int64_t> parse_timestamp(std::string_view raw) {
    const std::string s = text::trim(raw);
    if (s.empty()) return std::nullopt;
    if (s.find('-', 1) == std::string::npos) {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc{} && ptr == s.data() + s.size()) return v;
        return std::nullopt;
    }
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    if (!read_fixed(s, 0, 4, y) || s.size() < 10 || s[4] != '-' || !read_fixed(s, 5, 2, mo) ||
        s[7] != '-' || !read_fixed(s, 8, 2, d)) {
        return std::nullopt;
    }
    if (s.size() > 10) {
        if ((s[10] != 'T' && s[10] != ' ') || s.size() < 19 || !read_fixed(s, 11, 2, h) ||
            s[13] != ':' || !read_fixed(s, 14, 2, mi) || s[16] != ':' ||
            !read_fixed(s, 17, 2, se)) {
            return std::nullopt;
        }
        const std::string_view tail = std::string_view(s).substr(19);
        if (!tail.empty() && tail != "Z") return std::nullopt;
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || se > 60) return std::nullopt;
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
           h * 3600 + mi * 60 + se;
}

PropertyValue PropertyValue::text(std::string raw, Provenance prov, std::optional<double> quality) {
    check_raw(raw);
    check_quality(quality);
    PropertyValue v;
    v.kind_ = ValueKind::text;
    v.raw_ = std::move(raw);
    v.provenance_ = std::move(prov);
    v.quality_ = quality;
    return v;
}

PropertyValue PropertyValue::url(std::string raw, Provenance prov, std::optional<double> quality) {
    PropertyValue v = text(std::move(raw), std::move(prov), quality);
    v.kind_ = ValueKind::url;
    return v;
}

PropertyValue PropertyValue::number(double value, Provenance prov, std::optional<double> quality) {
    if (!std::isfinite(value)) throw ValidationError("number must be finite");
    check_quality(quality);
    PropertyValue v;
    v.kind_ = ValueKind::number;
    v.number_ = value;
    v.raw_ = format_number(value);
    v.provenance_ = std::move(prov);
    v.quality_ = quality;
    return v;
}

PropertyValue PropertyValue::number(std::string_view raw, Provenance prov,
                                    std::optional<double> quality) {
    const auto parsed = parse_double(raw);
    if (!parsed) throw ValidationError("not a number: '" + std::string(raw) + "'");
    PropertyValue v = number(*parsed, std::move(prov), quality);
    v.raw_ = text::trim(raw);
    return v;
}

PropertyValue PropertyValue::geo(GeoPoint point, Provenance prov, std::optional<double> quality) {
    if (!(point.lat >= -90.0 && point.lat <= 90.0) || !(point.lon >= -180.0 && point.lon <= 180.0)) {
        throw ValidationError("geopoint out of range: " + format_number(point.lat) + "," +
                              format_number(point.lon));
    }
    check_quality(quality);
    PropertyValue v;
    v.kind_ = ValueKind::geopoint;
    v.geo_ = point;
    v.raw_ = format_number(point.lat) + "," + format_number(point.lon);
    v.provenance_ = std::move(prov);
    v.quality_ = quality;
    return v;
}

PropertyValue PropertyValue::timestamp(std::int64_t seconds, Provenance prov,
                                       std::optional<double> quality) {
    check_quality(quality);
    PropertyValue v;
    v.kind_ = ValueKind::timestamp;
    v.time_ = seconds;
    v.raw_ = format_timestamp(seconds);
    v.provenance_ = std::move(prov);
    v.quality_ = quality;
    return v;
}

PropertyValue PropertyValue::timestamp(std::string_view raw, Provenance prov,
                                       std::optional<double> quality) {
    const auto t = parse_timestamp(raw);
    if (!t) throw ValidationError("not a timestamp: '" + std::string(raw) + "'");
    PropertyValue v = timestamp(*t, std::move(prov), quality);
    v.raw_ = text::trim(raw);
    return v;
}

PropertyValue PropertyValue::parse(ValueKind kind, std::string_view raw, Provenance prov,
                                   std::optional<double> quality) {
    switch (kind) {
        case ValueKind::text: return text(std::string(raw), std::move(prov), quality);
        case ValueKind::url: return url(std::string(raw), std::move(prov), quality);
        case ValueKind::number: return number(raw, std::move(prov), quality);
        case ValueKind::timestamp: return timestamp(raw, std::move(prov), quality);
        case ValueKind::geopoint: {
            const auto comma = raw.find(',');
            if (comma == std::string_view::npos) {
                throw ValidationError("geopoint needs 'lat,lon': '" + std::string(raw) + "'");
            }
            const auto lat = parse_double(raw.substr(0, comma));
            const auto lon = parse_double(raw.substr(comma + 1));
            if (!lat || !lon) {
                throw ValidationError("geopoint needs 'lat,lon': '" + std::string(raw) + "'");
            }
            return geo({*lat, *lon}, std::move(prov), quality);
        }
    }
    throw ValidationError("unknown value kind");
}

PropertyValue PropertyValue::with_raw(std::string raw) const {
    if (kind_ != ValueKind::text && kind_ != ValueKind::url) {
        throw ValidationError("with_raw is only defined for text and url values");
    }
    check_raw(raw);
    PropertyValue v = *this;
    v.raw_ = std::move(raw);
    return v;
}

PropertyValue PropertyValue::with_provenance(Provenance prov) const {
    PropertyValue v = *this;
    v.provenance_ = std::move(prov);
    return v;
}

PropertyValue PropertyValue::with_quality(std::optional<double> quality) const {
    check_quality(quality);
    PropertyValue v = *this;
    v.quality_ = quality;
    return v;
}

PropertyMap::PropertyMap(std::initializer_list<value_type> init) {
    for (const auto& [key, list] : init) {
        auto& slot = (*this)[key];
        slot.insert(slot.end(), list.begin(), list.end());
    }
}

std::vector<PropertyValue>& PropertyMap::operator[](std::string_view key) {
    const auto it = find(key);
    if (it != end()) return it->second;
    items_.emplace_back(std::string(key), std::vector<PropertyValue>{});
    return items_.back().second;
}

PropertyMap::iterator PropertyMap::find(std::string_view key) {
    return std::find_if(items_.begin(), items_.end(),
                        [key](const value_type& item) { return item.first == key; });
}

PropertyMap::const_iterator PropertyMap::find(std::string_view key) const {
    return std::find_if(items_.begin(), items_.end(),
                        [key](const value_type& item) { return item.first == key; });
}

std::size_t PropertyMap::erase(std::string_view key) {
    const auto it = find(key);
    if (it == end()) return 0;
    items_.erase(it);
    return 1;
}

std::vector<std::string> PropertyMap::keys() const {
    std::vector<std::string> out;
    out.reserve(items_.size());
    for (const auto& item : items_) out.push_back(item.first);
    return out;
}

bool operator==(const PropertyMap& a, const PropertyMap& b) {
    if (a.size() != b.size()) return false;
    for (const auto& [key, list] : a.items_) {
        const auto it = b.find(key);
        if (it == b.end() || it->second != list) return false;
    }
    return true;
}

std::span<const PropertyValue> Entity::values(std::string_view property) const {
    const auto it = properties.find(property);
    if (it == properties.end()) return {};
    return it->second;
}

void Entity::validate() const {
    if (properties.empty()) throw ValidationError("entity '" + id.str() + "' has no properties");
    for (const auto& [name, list] : properties) {
        if (name.empty()) throw ValidationError("entity '" + id.str() + "' has an unnamed property");
        if (list.empty()) {
            throw ValidationError("entity '" + id.str() + "' has an empty list for '" + name + "'");
        }
    }
}

CanonicalPair canonical_pair(const EntityId& a, const EntityId& b) {
    if (a == b) throw SelfPairError("self-pair (" + a.str() + ", " + b.str() + ")");
    return a < b ? CanonicalPair(a, b) : CanonicalPair(b, a);
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::unlabeled: return "unlabeled";
        case Verdict::same: return "same";
        case Verdict::different: return "different";
        case Verdict::related: return "related";
    }
    return "unlabeled";
}

std::optional<Verdict> parse_verdict(std::string_view s) {
    if (s == "unlabeled") return Verdict::unlabeled;
    if (s == "same") return Verdict::same;
    if (s == "different") return Verdict::different;
    if (s == "related") return Verdict::related;
    return std::nullopt;
}

std::string_view to_string(DecidedBy d) {
    return d == DecidedBy::human ? "human" : "threshold";
}

bool EquivalenceSet::contains(const EntityId& id) const {
    return std::binary_search(members.begin(), members.end(), id);
}

namespace {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

}  // namespace

std::vector<EquivalenceSet> equivalence_classes(std::span<const EntityId> ids,
                                                std::span<const CanonicalPair> confirmed) {
    std::vector<EntityId> sorted(ids.begin(), ids.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::unordered_map<EntityId, std::size_t> index;
    index.reserve(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) index.emplace(sorted[i], i);

    const auto lookup = [&](const EntityId& id) {
        const auto it = index.find(id);
        if (it == index.end()) {
            throw ReferentialError("assertion references unknown id '" + id.str() + "'");
        }
        return it->second;
    };

    UnionFind uf(sorted.size());
    for (const auto& pair : confirmed) uf.unite(lookup(pair.first()), lookup(pair.second()));

    // Members are visited in sorted order, so each set comes out sorted and the
    // sets come out ordered by their smallest member.
    std::vector<EquivalenceSet> out;
    std::vector<std::size_t> slot(sorted.size(), SIZE_MAX);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const std::size_t root = uf.find(i);
        if (slot[root] == SIZE_MAX) {
            slot[root] = out.size();
            out.emplace_back();
        }
        out[slot[root]].members.push_back(sorted[i]);
    }
    return out;
}

std::vector<EquivalenceSet> equivalence_classes(std::span<const EntityId> ids,
                                                std::span<const SameAsAssertion> assertions) {
    std::vector<CanonicalPair> confirmed;
    for (const auto& a : assertions) {
        if (a.verdict == Verdict::same) confirmed.push_back(a.pair);
    }
    return equivalence_classes(ids, std::span<const CanonicalPair>(confirmed));
}

}  // namespace kgdd
