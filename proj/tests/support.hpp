#pragma once

// Builders, random generators and reference implementations shared by the
// unit tests and the acceptance suite. The reference implementations are
// written independently of the library code they check.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "kgdd/core.hpp"
#include "kgdd/evaluate.hpp"
#include "kgdd/ingest.hpp"
#include "kgdd/rng.hpp"
#include "kgdd/text.hpp"

namespace kgdd::testing {

inline EntityId id(const std::string& s) { return EntityId(s); }

inline Entity entity(const std::string& eid, PropertyMap props, std::string type = "Restaurant") {
    return Entity{EntityId(eid), std::move(type), std::move(props)};
}

inline PropertyValue txt(const std::string& raw) { return PropertyValue::text(raw); }

inline PropertyValue geo(double lat, double lon) { return PropertyValue::geo({lat, lon}); }

inline Dataset dataset(std::vector<Entity> entities, std::string did = "test") {
    return Dataset{std::move(did), std::move(entities), "test"};
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("kgdd-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Random strings over a small alphabet so that edits and overlaps are common.
// Includes multi-byte code points.
inline std::string random_string(Rng& rng, std::size_t max_len,
                                 const std::vector<std::string>& alphabet = {"a", "b", "c", "d", " ", "\xc3\xa4",
                                                                             "\xc3\x9f", "'"}) {
    const auto n = static_cast<std::size_t>(rng.below(max_len + 1));
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += rng.pick(alphabet);
    return s;
}

// Edit distance by the textbook full-matrix recurrence over code points.
inline std::size_t dp_edit_distance(const std::string& a, const std::string& b) {
    const auto x = text::decode_utf8(a);
    const auto y = text::decode_utf8(b);
    std::vector<std::vector<std::size_t>> d(x.size() + 1, std::vector<std::size_t>(y.size() + 1));
    for (std::size_t i = 0; i <= x.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= y.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= x.size(); ++i) {
        for (std::size_t j = 1; j <= y.size(); ++j) {
            const std::size_t sub = d[i - 1][j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
        }
    }
    return d[x.size()][y.size()];
}

inline double dp_levenshtein_similarity(const std::string& a, const std::string& b) {
    const std::size_t la = text::decode_utf8(a).size();
    const std::size_t lb = text::decode_utf8(b).size();
    const std::size_t m = std::max(la, lb);
    if (m == 0) return 1.0;
    return 1.0 - static_cast<double>(dp_edit_distance(a, b)) / static_cast<double>(m);
}

// Great-circle distance through the spherical law of cosines on unit vectors,
// a different formulation from the haversine used by the library.
inline double vector_great_circle_meters(GeoPoint a, GeoPoint b) {
    constexpr double r = 6371008.8;
    const double k = std::numbers::pi / 180.0;
    const double ax = std::cos(a.lat * k) * std::cos(a.lon * k), ay = std::cos(a.lat * k) * std::sin(a.lon * k),
                 az = std::sin(a.lat * k);
    const double bx = std::cos(b.lat * k) * std::cos(b.lon * k), by = std::cos(b.lat * k) * std::sin(b.lon * k),
                 bz = std::sin(b.lat * k);
    // atan2(|a x b|, a . b) stays accurate for small angles.
    const double cx = ay * bz - az * by, cy = az * bx - ax * bz, cz = ax * by - ay * bx;
    return r * std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), ax * bx + ay * by + az * bz);
}

// Transitive closure by repeated relaxation over a boolean adjacency matrix.
inline std::set<std::set<std::string>> brute_force_classes(const std::vector<std::string>& ids,
                                                           const std::vector<std::pair<std::string, std::string>>& edges) {
    const std::size_t n = ids.size();
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index[ids[i]] = i;
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) reach[i][i] = true;
    for (const auto& [a, b] : edges) {
        reach[index[a]][index[b]] = true;
        reach[index[b]][index[a]] = true;
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!reach[i][k]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (reach[k][j]) reach[i][j] = true;
            }
        }
    }
    std::set<std::set<std::string>> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::set<std::string> cls;
        for (std::size_t j = 0; j < n; ++j) {
            if (reach[i][j]) cls.insert(ids[j]);
        }
        out.insert(cls);
    }
    return out;
}

inline std::set<std::set<std::string>> as_sets(const std::vector<EquivalenceSet>& classes) {
    std::set<std::set<std::string>> out;
    for (const auto& c : classes) {
        std::set<std::string> s;
        for (const auto& m : c.members) s.insert(m.str());
        out.insert(s);
    }
    return out;
}

// Evaluation counts by plain set algebra over string keys.
struct OracleCounts {
    std::size_t tp = 0, fp = 0, fn = 0, unjudged = 0, related = 0;
};

inline OracleCounts oracle_counts(const std::set<std::string>& accepted, const std::set<std::string>& same,
                                  const std::set<std::string>& different, const std::set<std::string>& related,
                                  bool closed_world) {
    OracleCounts c;
    for (const auto& p : accepted) {
        if (same.count(p)) {
            ++c.tp;
        } else if (different.count(p)) {
            ++c.fp;
        } else if (related.count(p)) {
            ++c.related;
        } else if (closed_world) {
            ++c.fp;
        } else {
            ++c.unjudged;
        }
    }
    for (const auto& p : same) {
        if (!accepted.count(p)) ++c.fn;
    }
    return c;
}

// Reference fusion over a value multiset. Occurrences with the same kind and
// lexical form form one group; the group is represented by its best
// occurrence (quality, then ingestion time, then smaller source, then an
// explicit quality over a default one).
namespace fusion_oracle {

using Key = std::pair<std::string, int>;  // raw, kind

inline Key key_of(const PropertyValue& v) { return {v.raw(), static_cast<int>(v.kind())}; }

inline bool better(const PropertyValue& a, const PropertyValue& b) {
    if (a.quality_or_default() != b.quality_or_default()) return a.quality_or_default() > b.quality_or_default();
    if (a.provenance().ingested != b.provenance().ingested) return a.provenance().ingested > b.provenance().ingested;
    if (a.provenance().source != b.provenance().source) return a.provenance().source < b.provenance().source;
    return a.quality().has_value() && !b.quality().has_value();
}

inline std::map<Key, std::vector<PropertyValue>> multiset(const std::vector<PropertyValue>& in) {
    std::map<Key, std::vector<PropertyValue>> m;
    for (const auto& v : in) m[key_of(v)].push_back(v);
    return m;
}

inline PropertyValue representative(const std::vector<PropertyValue>& occurrences) {
    PropertyValue best = occurrences.front();
    for (const auto& v : occurrences) {
        if (better(v, best)) best = v;
    }
    return best;
}

inline std::vector<PropertyValue> union_values(const std::vector<PropertyValue>& in) {
    std::vector<PropertyValue> out;
    for (const auto& [k, occ] : multiset(in)) out.push_back(representative(occ));
    return out;
}

inline std::vector<PropertyValue> filter(const std::vector<PropertyValue>& in, double threshold) {
    std::vector<PropertyValue> kept;
    for (const auto& v : in) {
        if (v.quality_or_default() >= threshold) kept.push_back(v);
    }
    return union_values(kept);
}

inline std::vector<PropertyValue> voting(const std::vector<PropertyValue>& in) {
    if (in.empty()) return {};
    // Rank every group by (count, max quality, newest); keep the
    // lexicographically first group among the best.
    std::vector<std::tuple<std::size_t, double, std::int64_t, Key>> ranked;
    const auto m = multiset(in);
    for (const auto& [k, occ] : m) {
        double q = 0.0;
        std::int64_t t = occ.front().provenance().ingested;
        for (const auto& v : occ) {
            q = std::max(q, v.quality_or_default());
            t = std::max(t, v.provenance().ingested);
        }
        ranked.emplace_back(occ.size(), q, t, k);
    }
    auto best = ranked.front();
    for (const auto& r : ranked) {
        if (std::make_tuple(std::get<0>(r), std::get<1>(r), std::get<2>(r)) >
            std::make_tuple(std::get<0>(best), std::get<1>(best), std::get<2>(best))) {
            best = r;
        }
    }
    return {representative(m.at(std::get<3>(best)))};
}

inline std::vector<PropertyValue> latest(const std::vector<PropertyValue>& in) {
    if (in.empty()) return {};
    // Newest ingestion, then higher quality, then smaller lexical form; then
    // the best occurrence among what is left.
    std::int64_t t = in.front().provenance().ingested;
    for (const auto& v : in) t = std::max(t, v.provenance().ingested);
    double q = 0.0;
    for (const auto& v : in) {
        if (v.provenance().ingested == t) q = std::max(q, v.quality_or_default());
    }
    std::vector<PropertyValue> left;
    for (const auto& v : in) {
        if (v.provenance().ingested == t && v.quality_or_default() == q) left.push_back(v);
    }
    const Key smallest = key_of(*std::min_element(left.begin(), left.end(), [](const auto& a, const auto& b) {
        return key_of(a) < key_of(b);
    }));
    std::vector<PropertyValue> same_form;
    for (const auto& v : left) {
        if (key_of(v) == smallest) same_form.push_back(v);
    }
    return {representative(same_form)};
}

inline std::vector<PropertyValue> longest(const std::vector<PropertyValue>& in) {
    if (in.empty()) return {};
    std::size_t len = 0;
    for (const auto& v : in) len = std::max(len, text::decode_utf8(v.raw()).size());
    for (const auto& [k, occ] : multiset(in)) {
        if (text::decode_utf8(k.first).size() == len) return {representative(occ)};
    }
    return {};
}

// Mean of the sorted values.
inline double mean(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

}  // namespace fusion_oracle

}  // namespace kgdd::testing
