#include "kgdd/blocking.hpp"

#include <algorithm>
#include <unordered_map>

#include "kgdd/error.hpp"
#include "kgdd/text.hpp"

namespace kgdd {

std::string_view to_string(BlockingStrategy s) {
    switch (s) {
        case BlockingStrategy::naive: return "naive";
        case BlockingStrategy::standard: return "standard-blocking";
        case BlockingStrategy::sorted_neighborhood: return "sorted-neighborhood";
    }
    return "naive";
}

std::optional<BlockingStrategy> parse_blocking_strategy(std::string_view s) {
    if (s == "naive") return BlockingStrategy::naive;
    if (s == "standard-blocking" || s == "standard") return BlockingStrategy::standard;
    if (s == "sorted-neighborhood") return BlockingStrategy::sorted_neighborhood;
    return std::nullopt;
}

std::string_view to_string(KeyFunction::Kind k) {
    switch (k) {
        case KeyFunction::Kind::name_prefix: return "name-prefix";
        case KeyFunction::Kind::geohash: return "geohash";
        case KeyFunction::Kind::url_host: return "url-host";
        case KeyFunction::Kind::exact: return "exact";
    }
    return "exact";
}

std::optional<KeyFunction::Kind> parse_key_kind(std::string_view s) {
    if (s == "name-prefix") return KeyFunction::Kind::name_prefix;
    if (s == "geohash") return KeyFunction::Kind::geohash;
    if (s == "url-host") return KeyFunction::Kind::url_host;
    if (s == "exact") return KeyFunction::Kind::exact;
    return std::nullopt;
}

KeyFunction KeyFunction::name_prefix(std::string property, int k) {
    return {Kind::name_prefix, std::move(property), k};
}

KeyFunction KeyFunction::geohash(std::string property, int precision) {
    return {Kind::geohash, std::move(property), precision};
}

KeyFunction KeyFunction::url_host(std::string property) {
    return {Kind::url_host, std::move(property), 0};
}

KeyFunction KeyFunction::exact(std::string property) {
    return {Kind::exact, std::move(property), 0};
}

std::string geohash_encode(GeoPoint p, int precision) {
    static constexpr char alphabet[] = "0123456789bcdefghjkmnpqrstuvwxyz";
    double lat_lo = -90.0, lat_hi = 90.0, lon_lo = -180.0, lon_hi = 180.0;
    std::string out;
    bool even = true;
    int bit = 0;
    int ch = 0;
    while (static_cast<int>(out.size()) < precision) {
        if (even) {
            const double mid = (lon_lo + lon_hi) / 2;
            if (p.lon >= mid) {
                ch = (ch << 1) | 1;
                lon_lo = mid;
            } else {
                ch <<= 1;
                lon_hi = mid;
            }
        } else {
            const double mid = (lat_lo + lat_hi) / 2;
            if (p.lat >= mid) {
                ch = (ch << 1) | 1;
                lat_lo = mid;
            } else {
                ch <<= 1;
                lat_hi = mid;
            }
        }
        even = !even;
        if (++bit == 5) {
            out.push_back(alphabet[ch]);
            bit = 0;
            ch = 0;
        }
    }
    return out;
}

std::vector<std::string> KeyFunction::keys(const Entity& e) const {
    static const CleanerChain name_chain = CleanerChain::build(
        {"lowercase", "strip-accents", "strip-punctuation", "collapse-whitespace"});
    std::vector<std::string> out;
    for (const auto& v : e.values(property)) {
        switch (kind) {
            case Kind::name_prefix: {
                const auto cleaned = clean(v, name_chain);
                if (!cleaned) break;
                const auto cps = text::decode_utf8(cleaned->raw());
                out.push_back(text::encode_utf8(
                    std::u32string_view(cps).substr(0, static_cast<std::size_t>(length))));
                break;
            }
            case Kind::geohash:
                if (v.kind() == ValueKind::geopoint) out.push_back(geohash_encode(v.as_geo(), length));
                break;
            case Kind::url_host: {
                const std::string host = cleaners::url_normalize(v.raw());
                const auto cut = host.find_first_of("/?#");
                std::string h = host.substr(0, cut);
                if (!h.empty()) out.push_back(std::move(h));
                break;
            }
            case Kind::exact: out.push_back(v.raw()); break;
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    // Keys are namespaced by function so different functions never collide.
    for (auto& k : out) k = std::string(to_string(kind)) + ":" + property + ":" + k;
    return out;
}

void BlockingSpec::validate() const {
    if (strategy == BlockingStrategy::sorted_neighborhood && window < 2) {
        throw ConfigError("sorted-neighborhood window must be >= 2");
    }
    if (strategy != BlockingStrategy::naive && keys.empty()) {
        throw ConfigError(std::string(to_string(strategy)) + " needs at least one key function");
    }
    for (const auto& k : keys) {
        if (k.property.empty()) throw ConfigError("key function needs a property");
        if (k.kind == KeyFunction::Kind::name_prefix && (k.length < 1 || k.length > 64)) {
            throw ConfigError("name-prefix length must be 1..64");
        }
        if (k.kind == KeyFunction::Kind::geohash && (k.length < 1 || k.length > 12)) {
            throw ConfigError("geohash precision must be 1..12");
        }
    }
}

CandidateSpace CandidateSpace::of(std::span<const Entity> entities) {
    CandidateSpace s;
    s.entities.reserve(entities.size());
    for (const auto& e : entities) s.entities.push_back(&e);
    return s;
}

CandidateSpace CandidateSpace::linkage(std::span<const Entity> a, std::span<const Entity> b) {
    CandidateSpace s;
    for (const auto& e : a) {
        s.entities.push_back(&e);
        s.sides.push_back(0);
    }
    for (const auto& e : b) {
        s.entities.push_back(&e);
        s.sides.push_back(1);
    }
    return s;
}

namespace {

// Orders (i, j) canonically and filters same-side or same-id pairs.
class Emitter {
public:
    Emitter(const CandidateSpace& space, const PairSink& sink, BlockingStats& stats)
        : space_(space), sink_(sink), stats_(stats) {}

    void operator()(std::size_t i, std::size_t j) {
        if (space_.cross_only() && space_.sides[i] == space_.sides[j]) return;
        const EntityId& a = space_.entities[i]->id;
        const EntityId& b = space_.entities[j]->id;
        if (a == b) {
            ++stats_.skipped_same_id;
            return;
        }
        ++stats_.pairs;
        if (b < a) {
            sink_(j, i);
        } else {
            sink_(i, j);
        }
    }

private:
    const CandidateSpace& space_;
    const PairSink& sink_;
    BlockingStats& stats_;
};

std::vector<std::vector<std::string>> all_keys(const CandidateSpace& space,
                                               std::span<const KeyFunction> keys) {
    std::vector<std::vector<std::string>> out(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        for (const auto& kf : keys) {
            auto k = kf.keys(*space.entities[i]);
            out[i].insert(out[i].end(), k.begin(), k.end());
        }
        std::sort(out[i].begin(), out[i].end());
        out[i].erase(std::unique(out[i].begin(), out[i].end()), out[i].end());
    }
    return out;
}

// Smallest key shared by two sorted key lists.
const std::string* first_common(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            return &*ia;
        }
    }
    return nullptr;
}

const std::string unkeyed_key = "\x01unkeyed";

}  // namespace

BlockingStats naive_pairs(const CandidateSpace& space, const PairSink& sink) {
    BlockingStats stats;
    Emitter emit(space, sink, stats);
    const std::size_t n = space.size();
    if (space.cross_only()) {
        for (std::size_t i = 0; i < n; ++i) {
            if (space.sides[i] != 0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (space.sides[j] == 1) emit(i, j);
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) emit(i, j);
        }
    }
    stats.blocks = n > 0 ? 1 : 0;
    stats.largest_block = n;
    return stats;
}

BlockingStats standard_blocking(const CandidateSpace& space, std::span<const KeyFunction> keys,
                                bool unkeyed_block, const PairSink& sink) {
    BlockingStats stats;
    Emitter emit(space, sink, stats);
    auto entity_keys = all_keys(space, keys);

    std::unordered_map<std::string, std::vector<std::size_t>> blocks;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (entity_keys[i].empty()) {
            ++stats.unkeyed;
            if (!unkeyed_block) continue;
            entity_keys[i].push_back(unkeyed_key);
        }
        for (const auto& k : entity_keys[i]) blocks[k].push_back(i);
    }
    std::vector<const std::string*> order;
    order.reserve(blocks.size());
    for (const auto& [k, members] : blocks) order.push_back(&k);
    std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return *a < *b; });

    stats.blocks = blocks.size();
    for (const std::string* key : order) {
        const auto& members = blocks[*key];
        stats.largest_block = std::max(stats.largest_block, members.size());
        for (std::size_t x = 0; x < members.size(); ++x) {
            for (std::size_t y = x + 1; y < members.size(); ++y) {
                const std::size_t i = members[x];
                const std::size_t j = members[y];
                // A pair sharing several keys is emitted only in the block of
                // its smallest shared key.
                const std::string* shared = first_common(entity_keys[i], entity_keys[j]);
                if (shared != nullptr && *shared != *key) continue;
                emit(i, j);
            }
        }
    }
    return stats;
}

BlockingStats sorted_neighborhood(const CandidateSpace& space, std::span<const KeyFunction> keys,
                                  std::size_t window, const PairSink& sink) {
    if (window < 2) throw ConfigError("sorted-neighborhood window must be >= 2");
    BlockingStats stats;
    Emitter emit(space, sink, stats);
    const auto entity_keys = all_keys(space, keys);
    std::vector<std::size_t> order(space.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // Entities without a key sort first under the empty key; ties break by id.
    const auto sort_key = [&](std::size_t i) -> const std::string& {
        static const std::string none;
        return entity_keys[i].empty() ? none : entity_keys[i].front();
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ka = sort_key(a);
        const auto& kb = sort_key(b);
        if (ka != kb) return ka < kb;
        return space.entities[a]->id < space.entities[b]->id;
    });
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (entity_keys[order[i]].empty()) ++stats.unkeyed;
        for (std::size_t j = i + 1; j < order.size() && j < i + window; ++j) emit(order[i], order[j]);
    }
    stats.blocks = 1;
    stats.largest_block = std::min(window, order.size());
    return stats;
}

BlockingStats generate_pairs(const CandidateSpace& space, const BlockingSpec& spec,
                             const PairSink& sink) {
    spec.validate();
    switch (spec.strategy) {
        case BlockingStrategy::naive: return naive_pairs(space, sink);
        case BlockingStrategy::standard:
            return standard_blocking(space, spec.keys, spec.unkeyed_block, sink);
        case BlockingStrategy::sorted_neighborhood:
            return sorted_neighborhood(space, spec.keys, spec.window, sink);
    }
    return {};
}

std::size_t estimate_pairs(const CandidateSpace& space, const BlockingSpec& spec) {
    const std::size_t n = space.size();
    std::size_t a = 0;
    for (auto s : space.sides) a += s == 0;
    switch (spec.strategy) {
        case BlockingStrategy::naive:
            return space.cross_only() ? a * (n - a) : n * (n > 0 ? n - 1 : 0) / 2;
        case BlockingStrategy::sorted_neighborhood: {
            const std::size_t w = spec.window - 1;
            std::size_t total = 0;
            for (std::size_t i = 0; i < n; ++i) total += std::min(w, n - 1 - i);
            return total;
        }
        case BlockingStrategy::standard: {
            const auto keys = all_keys(space, spec.keys);
            std::unordered_map<std::string, std::size_t> sizes;
            for (std::size_t i = 0; i < n; ++i) {
                if (keys[i].empty() && spec.unkeyed_block) ++sizes[unkeyed_key];
                for (const auto& k : keys[i]) ++sizes[k];
            }
            std::size_t total = 0;
            for (const auto& [k, m] : sizes) total += m * (m > 0 ? m - 1 : 0) / 2;
            return total;
        }
    }
    return 0;
}

}  // namespace kgdd
