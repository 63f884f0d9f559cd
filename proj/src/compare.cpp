#include "kgdd/compare.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>
#include <unordered_map>

#include "kgdd/error.hpp"
#include "kgdd/text.hpp"

namespace kgdd {

std::string_view to_string(Family f) {
    switch (f) {
        case Family::string: return "string";
        case Family::vector: return "vector";
        case Family::pointset: return "pointset";
        case Family::temporal: return "temporal";
        case Family::topological: return "topological";
    }
    return "string";
}

namespace metrics {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

std::size_t max_len(std::size_t a, std::size_t b) { return std::max(a, b); }

template <typename Counted>
Counted token_counts(std::string_view s) {
    Counted out;
    for (auto& t : text::tokens(s)) ++out[t];
    return out;
}

std::set<std::string> token_set(std::string_view s) {
    auto toks = text::tokens(s);
    return {toks.begin(), toks.end()};
}

std::size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::size_t n = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++n;
            ++ia;
            ++ib;
        }
    }
    return n;
}

}  // namespace

std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1);
    std::vector<std::size_t> cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::size_t osa_distance(std::u32string_view a, std::u32string_view b) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    std::vector<std::size_t> two(m + 1);
    std::vector<std::size_t> prev(m + 1);
    std::vector<std::size_t> cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost});
            if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) {
                cur[j] = std::min(cur[j], two[j - 2] + 1);
            }
        }
        std::swap(two, prev);
        std::swap(prev, cur);
    }
    return prev[m];
}

double levenshtein(std::string_view a, std::string_view b) {
    const auto ua = text::decode_utf8(a);
    const auto ub = text::decode_utf8(b);
    const std::size_t longest = max_len(ua.size(), ub.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein_distance(ua, ub)) / static_cast<double>(longest);
}

double damerau_levenshtein(std::string_view a, std::string_view b) {
    const auto ua = text::decode_utf8(a);
    const auto ub = text::decode_utf8(b);
    const std::size_t longest = max_len(ua.size(), ub.size());
    if (longest == 0) return 1.0;
    return clamp01(1.0 - static_cast<double>(osa_distance(ua, ub)) / static_cast<double>(longest));
}

double jaro(std::string_view a, std::string_view b) {
    // The greedy match scan is order dependent; fixing the argument order keeps
    // the metric symmetric.
    if (b < a) std::swap(a, b);
    const auto ua = text::decode_utf8(a);
    const auto ub = text::decode_utf8(b);
    if (ua.empty() && ub.empty()) return 1.0;
    if (ua.empty() || ub.empty()) return 0.0;
    const std::size_t window = max_len(ua.size(), ub.size()) / 2 > 0
                                   ? max_len(ua.size(), ub.size()) / 2 - 1
                                   : 0;
    std::vector<char> match_a(ua.size(), 0);
    std::vector<char> match_b(ub.size(), 0);
    std::size_t m = 0;
    for (std::size_t i = 0; i < ua.size(); ++i) {
        const std::size_t lo = i > window ? i - window : 0;
        const std::size_t hi = std::min(ub.size(), i + window + 1);
        for (std::size_t j = lo; j < hi; ++j) {
            if (!match_b[j] && ua[i] == ub[j]) {
                match_a[i] = match_b[j] = 1;
                ++m;
                break;
            }
        }
    }
    if (m == 0) return 0.0;
    std::size_t transpositions = 0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < ua.size(); ++i) {
        if (!match_a[i]) continue;
        while (!match_b[k]) ++k;
        if (ua[i] != ub[k]) ++transpositions;
        ++k;
    }
    const double md = static_cast<double>(m);
    const double t = static_cast<double>(transpositions) / 2.0;
    return (md / static_cast<double>(ua.size()) + md / static_cast<double>(ub.size()) +
            (md - t) / md) /
           3.0;
}

double jaro_winkler(std::string_view a, std::string_view b, double prefix_scale) {
    const double j = jaro(a, b);
    const auto ua = text::decode_utf8(a);
    const auto ub = text::decode_utf8(b);
    std::size_t l = 0;
    while (l < 4 && l < ua.size() && l < ub.size() && ua[l] == ub[l]) ++l;
    return clamp01(j + static_cast<double>(l) * prefix_scale * (1.0 - j));
}

double lcs_substring(std::string_view a, std::string_view b) {
    const auto ua = text::decode_utf8(a);
    const auto ub = text::decode_utf8(b);
    const std::size_t longest = max_len(ua.size(), ub.size());
    if (longest == 0) return 1.0;
    std::vector<std::size_t> prev(ub.size() + 1, 0);
    std::vector<std::size_t> cur(ub.size() + 1, 0);
    std::size_t best = 0;
    for (std::size_t i = 1; i <= ua.size(); ++i) {
        for (std::size_t j = 1; j <= ub.size(); ++j) {
            cur[j] = ua[i - 1] == ub[j - 1] ? prev[j - 1] + 1 : 0;
            best = std::max(best, cur[j]);
        }
        std::swap(prev, cur);
    }
    return static_cast<double>(best) / static_cast<double>(longest);
}

double lcs_subsequence(std::string_view a, std::string_view b) {
    const auto ua = text::decode_utf8(a);
    const auto ub = text::decode_utf8(b);
    const std::size_t longest = max_len(ua.size(), ub.size());
    if (longest == 0) return 1.0;
    std::vector<std::size_t> prev(ub.size() + 1, 0);
    std::vector<std::size_t> cur(ub.size() + 1, 0);
    for (std::size_t i = 1; i <= ua.size(); ++i) {
        for (std::size_t j = 1; j <= ub.size(); ++j) {
            cur[j] = ua[i - 1] == ub[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return static_cast<double>(prev[ub.size()]) / static_cast<double>(longest);
}

double prefix(std::string_view a, std::string_view b) {
    const auto ua = text::decode_utf8(a);
    const auto ub = text::decode_utf8(b);
    const std::size_t longest = max_len(ua.size(), ub.size());
    if (longest == 0) return 1.0;
    std::size_t n = 0;
    while (n < ua.size() && n < ub.size() && ua[n] == ub[n]) ++n;
    return static_cast<double>(n) / static_cast<double>(longest);
}

double suffix(std::string_view a, std::string_view b) {
    const auto ua = text::decode_utf8(a);
    const auto ub = text::decode_utf8(b);
    const std::size_t longest = max_len(ua.size(), ub.size());
    if (longest == 0) return 1.0;
    std::size_t n = 0;
    while (n < ua.size() && n < ub.size() && ua[ua.size() - 1 - n] == ub[ub.size() - 1 - n]) ++n;
    return static_cast<double>(n) / static_cast<double>(longest);
}

double monge_elkan(std::string_view a, std::string_view b) {
    const auto ta = text::tokens(a);
    const auto tb = text::tokens(b);
    if (ta.empty() && tb.empty()) return 1.0;
    if (ta.empty() || tb.empty()) return 0.0;
    const auto directed = [](const std::vector<std::string>& x, const std::vector<std::string>& y) {
        double sum = 0.0;
        for (const auto& s : x) {
            double best = 0.0;
            for (const auto& t : y) best = std::max(best, jaro_winkler(s, t));
            sum += best;
        }
        return sum / static_cast<double>(x.size());
    };
    // Mean of both directions; the one-sided form is not symmetric.
    const double ab = directed(ta, tb);
    const double ba = directed(tb, ta);
    return clamp01(a <= b ? (ab + ba) / 2.0 : (ba + ab) / 2.0);
}

double jaccard(std::string_view a, std::string_view b) {
    const auto sa = token_set(a);
    const auto sb = token_set(b);
    const std::size_t inter = intersection_size(sa, sb);
    const std::size_t uni = sa.size() + sb.size() - inter;
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double dice(std::string_view a, std::string_view b) {
    const auto sa = token_set(a);
    const auto sb = token_set(b);
    const std::size_t total = sa.size() + sb.size();
    if (total == 0) return 1.0;
    return 2.0 * static_cast<double>(intersection_size(sa, sb)) / static_cast<double>(total);
}

double overlap(std::string_view a, std::string_view b) {
    const auto sa = token_set(a);
    const auto sb = token_set(b);
    if (sa.empty() && sb.empty()) return 1.0;
    if (sa.empty() || sb.empty()) return 0.0;
    // Divide by the larger set so that 1 still means equal token sets.
    return static_cast<double>(intersection_size(sa, sb)) /
           static_cast<double>(std::max(sa.size(), sb.size()));
}

double cosine(std::string_view a, std::string_view b) {
    const auto ca = token_counts<std::map<std::string, double>>(a);
    const auto cb = token_counts<std::map<std::string, double>>(b);
    if (ca.empty() && cb.empty()) return 1.0;
    if (ca.empty() || cb.empty()) return 0.0;
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [t, c] : ca) {
        na += c * c;
        const auto it = cb.find(t);
        if (it != cb.end()) dot += c * it->second;
    }
    for (const auto& [t, c] : cb) nb += c * c;
    return clamp01(dot / std::sqrt(na * nb));
}

double qgram(std::string_view a, std::string_view b, int q) {
    const auto grams = [q](std::string_view s) {
        const auto u = text::decode_utf8(s);
        std::set<std::u32string> out;
        const auto uq = static_cast<std::size_t>(q);
        if (u.size() <= uq) {
            if (!u.empty()) out.insert(u);
            return out;
        }
        for (std::size_t i = 0; i + uq <= u.size(); ++i) out.insert(u.substr(i, uq));
        return out;
    };
    const auto ga = grams(a);
    const auto gb = grams(b);
    if (ga.empty() && gb.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& g : ga) inter += gb.count(g);
    return static_cast<double>(inter) / static_cast<double>(ga.size() + gb.size() - inter);
}

double numeric_relative(double a, double b) {
    if (a == b) return 1.0;
    const double denom = std::max(std::abs(a), std::abs(b));
    return clamp01(1.0 - std::abs(a - b) / denom);
}

double numeric_absolute(double a, double b, double scale) {
    return clamp01(1.0 - std::abs(a - b) / scale);
}

}  // namespace metrics

double haversine_meters(GeoPoint a, GeoPoint b) {
    constexpr double earth_radius = 6371008.8;
    constexpr double rad = std::numbers::pi / 180.0;
    const double dlat = (b.lat - a.lat) * rad;
    const double dlon = (b.lon - a.lon) * rad;
    const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) *
                         std::sin(dlon / 2);
    return 2.0 * earth_radius * std::asin(std::min(1.0, std::sqrt(h)));
}

double compare_geo(GeoPoint a, GeoPoint b, double scale_meters) {
    if (a == b) return 1.0;
    // Ordering the arguments keeps floating-point evaluation symmetric.
    const bool swap = std::pair(b.lat, b.lon) < std::pair(a.lat, a.lon);
    const double d = swap ? haversine_meters(b, a) : haversine_meters(a, b);
    return std::max(0.0, 1.0 - d / scale_meters);
}

double compare_temporal(std::int64_t a, std::int64_t b, double scale_seconds) {
    const double diff = std::abs(static_cast<double>(a) - static_cast<double>(b));
    return std::max(0.0, 1.0 - diff / scale_seconds);
}

namespace {

enum class Metric {
    exact,
    levenshtein,
    damerau,
    jaro,
    jaro_winkler,
    lcs_substring,
    lcs_subsequence,
    prefix,
    suffix,
    monge_elkan,
    jaccard,
    dice,
    overlap,
    cosine,
    qgram,
    trigram,
    numeric_relative,
    numeric_absolute,
    geo_distance,
    temporal,
    bbox_overlap,
};

struct MetricInfo {
    Metric metric;
    Family family;
    std::vector<std::string> params;
};

const std::map<std::string, MetricInfo, std::less<>>& catalog() {
    static const std::map<std::string, MetricInfo, std::less<>> c = {
        {"exact", {Metric::exact, Family::string, {}}},
        {"levenshtein", {Metric::levenshtein, Family::string, {}}},
        {"damerau-levenshtein", {Metric::damerau, Family::string, {}}},
        {"jaro", {Metric::jaro, Family::string, {}}},
        {"jaro-winkler", {Metric::jaro_winkler, Family::string, {"prefix-scale"}}},
        {"lcs-substring", {Metric::lcs_substring, Family::string, {}}},
        {"lcs-subsequence", {Metric::lcs_subsequence, Family::string, {}}},
        {"prefix", {Metric::prefix, Family::string, {}}},
        {"suffix", {Metric::suffix, Family::string, {}}},
        {"monge-elkan", {Metric::monge_elkan, Family::string, {}}},
        {"jaccard", {Metric::jaccard, Family::vector, {}}},
        {"dice", {Metric::dice, Family::vector, {}}},
        {"overlap", {Metric::overlap, Family::vector, {}}},
        {"cosine", {Metric::cosine, Family::vector, {}}},
        {"qgram", {Metric::qgram, Family::vector, {"q"}}},
        {"trigram", {Metric::trigram, Family::vector, {}}},
        {"numeric-relative", {Metric::numeric_relative, Family::pointset, {}}},
        {"numeric-absolute", {Metric::numeric_absolute, Family::pointset, {"scale"}}},
        {"geo-distance", {Metric::geo_distance, Family::pointset, {"scale"}}},
        {"temporal", {Metric::temporal, Family::temporal, {"scale"}}},
        {"bbox-overlap", {Metric::bbox_overlap, Family::topological, {"scale"}}},
    };
    return c;
}

std::optional<double> to_number(std::string_view s) {
    const std::string t = text::trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::optional<GeoPoint> to_geo(std::string_view raw) {
    const auto comma = raw.find(',');
    if (comma == std::string_view::npos) return std::nullopt;
    const auto lat = to_number(raw.substr(0, comma));
    const auto lon = to_number(raw.substr(comma + 1));
    if (!lat || !lon) return std::nullopt;
    return GeoPoint{*lat, *lon};
}

std::optional<GeoPoint> to_geo(const PropertyValue& v) {
    if (v.kind() == ValueKind::geopoint) return v.as_geo();
    return to_geo(v.raw());
}

struct Box {
    double lat0, lon0, lat1, lon1;
};

// A box is either four numbers "lat0,lon0,lat1,lon1" or a point expanded to
// a square of the given half side.
std::optional<Box> to_box(std::string_view raw, std::optional<GeoPoint> point, double half_side_m) {
    if (!point) {
        std::vector<double> parts;
        std::string_view rest = raw;
        for (;;) {
            const auto pos = rest.find(',');
            const auto n = to_number(rest.substr(0, pos));
            if (!n) break;
            parts.push_back(*n);
            if (pos == std::string_view::npos) break;
            rest.remove_prefix(pos + 1);
        }
        if (parts.size() == 4) {
            return Box{std::min(parts[0], parts[2]), std::min(parts[1], parts[3]),
                       std::max(parts[0], parts[2]), std::max(parts[1], parts[3])};
        }
    }
    const auto p = point ? point : to_geo(raw);
    if (!p) return std::nullopt;
    constexpr double meters_per_degree = 111320.0;
    const double dlat = half_side_m / meters_per_degree;
    const double dlon =
        half_side_m / (meters_per_degree * std::max(1e-6, std::cos(p->lat * std::numbers::pi / 180)));
    return Box{p->lat - dlat, p->lon - dlon, p->lat + dlat, p->lon + dlon};
}

double box_jaccard(const Box& a, const Box& b) {
    const auto area = [](const Box& x) { return (x.lat1 - x.lat0) * (x.lon1 - x.lon0); };
    const double ih = std::min(a.lat1, b.lat1) - std::max(a.lat0, b.lat0);
    const double iw = std::min(a.lon1, b.lon1) - std::max(a.lon0, b.lon0);
    const double inter = ih > 0 && iw > 0 ? ih * iw : 0.0;
    const double uni = area(a) + area(b) - inter;
    if (uni <= 0.0) return a.lat0 == b.lat0 && a.lon0 == b.lon0 && a.lat1 == b.lat1 && a.lon1 == b.lon1;
    return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace

Comparator::Comparator() : name_("exact") {}

Comparator Comparator::make(std::string_view name, std::map<std::string, double> params) {
    const auto it = catalog().find(name);
    if (it == catalog().end()) throw ConfigError("unknown comparator '" + std::string(name) + "'");
    const MetricInfo& info = it->second;
    for (const auto& [key, value] : params) {
        if (std::find(info.params.begin(), info.params.end(), key) == info.params.end()) {
            throw ConfigError("comparator '" + std::string(name) + "' has no parameter '" + key +
                              "'");
        }
        if (!std::isfinite(value)) throw ConfigError("parameter '" + key + "' must be finite");
    }
    Comparator c;
    c.name_ = std::string(name);
    c.family_ = info.family;
    c.params_ = std::move(params);
    const auto get = [&](const std::string& key, double fallback) {
        const auto p = c.params_.find(key);
        return p == c.params_.end() ? fallback : p->second;
    };
    switch (info.metric) {
        case Metric::qgram: {
            const double q = get("q", 2);
            if (q < 1 || q > 16 || q != std::floor(q)) throw ConfigError("qgram: q must be 1..16");
            c.q_ = static_cast<int>(q);
            break;
        }
        case Metric::trigram: c.q_ = 3; break;
        case Metric::jaro_winkler:
            c.prefix_scale_ = get("prefix-scale", 0.1);
            if (c.prefix_scale_ < 0 || c.prefix_scale_ > 0.25) {
                throw ConfigError("jaro-winkler: prefix-scale must lie in [0,0.25]");
            }
            break;
        case Metric::geo_distance: c.scale_ = get("scale", 1000.0); break;
        case Metric::temporal: c.scale_ = get("scale", 86400.0); break;
        case Metric::numeric_absolute: c.scale_ = get("scale", 1.0); break;
        case Metric::bbox_overlap: c.scale_ = get("scale", 100.0); break;
        default: break;
    }
    if (c.scale_ <= 0) throw ConfigError(std::string(name) + ": scale must be positive");
    return c;
}

std::vector<std::string> registered_comparators() {
    std::vector<std::string> names;
    for (const auto& [name, info] : catalog()) names.push_back(name);
    return names;
}

double compare_text(const Comparator& metric, std::string_view a, std::string_view b) {
    const auto it = catalog().find(metric.name());
    const Metric m = it == catalog().end() ? Metric::exact : it->second.metric;
    const auto numeric_or_exact = [&](auto&& f) {
        const auto x = to_number(a);
        const auto y = to_number(b);
        if (x && y) return f(*x, *y);
        return a == b ? 1.0 : 0.0;
    };
    const auto param = [&](const char* key, double fallback) {
        const auto p = metric.params().find(key);
        return p == metric.params().end() ? fallback : p->second;
    };
    switch (m) {
        case Metric::exact: return a == b ? 1.0 : 0.0;
        case Metric::levenshtein: return metrics::levenshtein(a, b);
        case Metric::damerau: return metrics::damerau_levenshtein(a, b);
        case Metric::jaro: return metrics::jaro(a, b);
        case Metric::jaro_winkler: return metrics::jaro_winkler(a, b, param("prefix-scale", 0.1));
        case Metric::lcs_substring: return metrics::lcs_substring(a, b);
        case Metric::lcs_subsequence: return metrics::lcs_subsequence(a, b);
        case Metric::prefix: return metrics::prefix(a, b);
        case Metric::suffix: return metrics::suffix(a, b);
        case Metric::monge_elkan: return metrics::monge_elkan(a, b);
        case Metric::jaccard: return metrics::jaccard(a, b);
        case Metric::dice: return metrics::dice(a, b);
        case Metric::overlap: return metrics::overlap(a, b);
        case Metric::cosine: return metrics::cosine(a, b);
        case Metric::qgram: return metrics::qgram(a, b, static_cast<int>(param("q", 2)));
        case Metric::trigram: return metrics::qgram(a, b, 3);
        case Metric::numeric_relative: return numeric_or_exact(metrics::numeric_relative);
        case Metric::numeric_absolute: {
            const double scale = param("scale", 1.0);
            return numeric_or_exact(
                [scale](double x, double y) { return metrics::numeric_absolute(x, y, scale); });
        }
        case Metric::geo_distance: {
            const auto pa = to_geo(a);
            const auto pb = to_geo(b);
            if (pa && pb) return compare_geo(*pa, *pb, param("scale", 1000.0));
            return a == b ? 1.0 : 0.0;
        }
        case Metric::temporal: {
            const auto ta = parse_timestamp(a);
            const auto tb = parse_timestamp(b);
            if (ta && tb) return compare_temporal(*ta, *tb, param("scale", 86400.0));
            return a == b ? 1.0 : 0.0;
        }
        case Metric::bbox_overlap: {
            const double s = param("scale", 100.0);
            const auto ba = to_box(a, std::nullopt, s);
            const auto bb = to_box(b, std::nullopt, s);
            if (ba && bb) return box_jaccard(*ba, *bb);
            return a == b ? 1.0 : 0.0;
        }
    }
    return 0.0;
}

double Comparator::compare(const PropertyValue& a, const PropertyValue& b) const {
    switch (family_) {
        case Family::string:
        case Family::vector: return compare_text(*this, a.raw(), b.raw());
        case Family::pointset:
            if (name_ == "geo-distance") {
                const auto pa = to_geo(a);
                const auto pb = to_geo(b);
                if (!pa || !pb) return 0.0;
                return compare_geo(*pa, *pb, scale_);
            }
            if (a.kind() == ValueKind::number && b.kind() == ValueKind::number) {
                return name_ == "numeric-relative"
                           ? metrics::numeric_relative(a.as_number(), b.as_number())
                           : metrics::numeric_absolute(a.as_number(), b.as_number(), scale_);
            }
            return compare_text(*this, a.raw(), b.raw());
        case Family::temporal:
            if (a.kind() == ValueKind::timestamp && b.kind() == ValueKind::timestamp) {
                return compare_temporal(a.as_time(), b.as_time(), scale_);
            }
            return compare_text(*this, a.raw(), b.raw());
        case Family::topological: {
            const auto point = [](const PropertyValue& v) {
                return v.kind() == ValueKind::geopoint ? std::optional(v.as_geo()) : std::nullopt;
            };
            const auto ba = to_box(a.raw(), point(a), scale_);
            const auto bb = to_box(b.raw(), point(b), scale_);
            if (!ba || !bb) return a.raw() == b.raw() ? 1.0 : 0.0;
            return box_jaccard(*ba, *bb);
        }
    }
    return 0.0;
}

std::string_view to_string(MissingPolicy p) {
    return p == MissingPolicy::pessimistic ? "pessimistic" : "ignore";
}

std::string_view to_string(CombineOp op) {
    switch (op) {
        case CombineOp::conjunction: return "AND";
        case CombineOp::disjunction: return "OR";
        case CombineOp::minimum: return "MIN";
        case CombineOp::maximum: return "MAX";
        case CombineOp::weighted_average: return "WAVG";
    }
    return "WAVG";
}

std::optional<CombineOp> parse_combine_op(std::string_view s) {
    if (s == "AND") return CombineOp::conjunction;
    if (s == "OR") return CombineOp::disjunction;
    if (s == "MIN") return CombineOp::minimum;
    if (s == "MAX") return CombineOp::maximum;
    if (s == "WAVG") return CombineOp::weighted_average;
    return std::nullopt;
}

ComparatorTree ComparatorTree::branch(CombineOp op, std::vector<ComparatorTree> children,
                                      double weight, double threshold) {
    return {Branch{op, std::move(children), weight, threshold}};
}

double ComparatorTree::weight() const {
    return std::visit([](const auto& n) { return n.weight; }, node);
}

double ComparatorTree::threshold() const {
    return std::visit([](const auto& n) { return n.threshold; }, node);
}

namespace {

void collect_leaves(const ComparatorTree& t, std::vector<const Leaf*>& out) {
    if (const auto* leaf = std::get_if<Leaf>(&t.node)) {
        out.push_back(leaf);
        return;
    }
    for (const auto& child : std::get<Branch>(t.node).children) collect_leaves(child, out);
}

}  // namespace

std::vector<const Leaf*> ComparatorTree::leaves() const {
    std::vector<const Leaf*> out;
    collect_leaves(*this, out);
    return out;
}

std::vector<std::string> ComparatorTree::leaf_labels() const {
    std::vector<std::string> out;
    std::map<std::string, int> seen;
    for (const Leaf* leaf : leaves()) {
        const int n = ++seen[leaf->property];
        out.push_back(n == 1 ? leaf->property : leaf->property + "#" + std::to_string(n));
    }
    return out;
}

std::set<std::string> ComparatorTree::properties() const {
    std::set<std::string> out;
    for (const Leaf* leaf : leaves()) out.insert(leaf->property);
    return out;
}

void ComparatorTree::validate() const {
    const double w = weight();
    const double t = threshold();
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("comparator weights must be > 0");
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("comparator thresholds must lie in [0,1]");
    if (const auto* leaf = std::get_if<Leaf>(&node)) {
        if (leaf->property.empty()) throw ConfigError("comparator leaf needs a property");
        return;
    }
    const auto& b = std::get<Branch>(node);
    if (b.children.empty()) {
        throw ConfigError(std::string(to_string(b.op)) + " combinator needs at least one child");
    }
    for (const auto& child : b.children) child.validate();
}

std::optional<double> score_leaf(const Leaf& leaf, std::span<const PropertyValue> a,
                                 std::span<const PropertyValue> b) {
    if (a.empty() || b.empty()) {
        if (leaf.missing == MissingPolicy::pessimistic) return 0.0;
        return std::nullopt;
    }
    double best = 0.0;
    for (const auto& x : a) {
        for (const auto& y : b) {
            best = std::max(best, leaf.comparator.compare(x, y));
            if (best >= 1.0) return 1.0;
        }
    }
    return best;
}

namespace {

std::optional<double> combine_at(const ComparatorTree& tree,
                                 std::span<const std::optional<double>> scores, std::size_t& next) {
    if (tree.is_leaf()) return scores[next++];
    const auto& b = std::get<Branch>(tree.node);
    std::vector<std::pair<double, const ComparatorTree*>> present;
    for (const auto& child : b.children) {
        const auto s = combine_at(child, scores, next);
        if (s) present.emplace_back(*s, &child);
    }
    if (present.empty()) return std::nullopt;

    const auto wavg = [&] {
        double num = 0.0;
        double den = 0.0;
        for (const auto& [s, c] : present) {
            num += c->weight() * s;
            den += c->weight();
        }
        return std::clamp(num / den, 0.0, 1.0);
    };
    switch (b.op) {
        case CombineOp::minimum: {
            double m = 1.0;
            for (const auto& [s, c] : present) m = std::min(m, s);
            return m;
        }
        case CombineOp::maximum:
        case CombineOp::disjunction: {
            double m = 0.0;
            for (const auto& [s, c] : present) m = std::max(m, s);
            return m;
        }
        case CombineOp::weighted_average: return wavg();
        case CombineOp::conjunction:
            for (const auto& [s, c] : present) {
                if (s < c->threshold()) return 0.0;
            }
            return wavg();
    }
    return std::nullopt;
}

}  // namespace

std::optional<double> combine(const ComparatorTree& tree,
                              std::span<const std::optional<double>> leaf_scores) {
    std::size_t next = 0;
    return combine_at(tree, leaf_scores, next);
}

TreeScore evaluate_tree(const ComparatorTree& tree, const Entity& a, const Entity& b) {
    const auto leaves = tree.leaves();
    const auto labels = tree.leaf_labels();
    std::vector<std::optional<double>> scores;
    TreeScore out;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        const Leaf& leaf = *leaves[i];
        const auto ca = clean_values(a.values(leaf.property), leaf.cleaners);
        const auto cb = clean_values(b.values(leaf.property), leaf.cleaners);
        scores.push_back(score_leaf(leaf, ca, cb));
        if (!ca.empty() && !cb.empty()) ++out.comparable_leaves;
        if (scores.back()) out.per_property[labels[i]] = *scores.back();
    }
    out.sim = combine(tree, scores);
    return out;
}

}  // namespace kgdd
