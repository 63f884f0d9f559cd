#include "kgdd/synthetic.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "kgdd/error.hpp"
#include "kgdd/rng.hpp"
#include "kgdd/text.hpp"

namespace kgdd {

namespace {

struct Town {
    const char* name;
    double lat;
    double lon;
    const char* postal;
    const char* area;
};

constexpr std::array<Town, 25> towns{{
    {"Innsbruck", 47.2692, 11.4041, "6020", "512"},
    {"Hall in Tirol", 47.2833, 11.5081, "6060", "5223"},
    {"Schwaz", 47.3500, 11.7000, "6130", "5242"},
    {"Wörgl", 47.4890, 12.0616, "6300", "5332"},
    {"Kufstein", 47.5833, 12.1667, "6330", "5372"},
    {"Kitzbühel", 47.4464, 12.3917, "6370", "5356"},
    {"St. Johann in Tirol", 47.5228, 12.4244, "6380", "5352"},
    {"Lienz", 46.8290, 12.7690, "9900", "4852"},
    {"Imst", 47.2450, 10.7397, "6460", "5412"},
    {"Landeck", 47.1397, 10.5664, "6500", "5442"},
    {"Telfs", 47.3069, 11.0722, "6410", "5262"},
    {"Seefeld in Tirol", 47.3297, 11.1881, "6100", "5212"},
    {"Mayrhofen", 47.1667, 11.8667, "6290", "5285"},
    {"Zell am Ziller", 47.2333, 11.8833, "6280", "5282"},
    {"Sölden", 46.9650, 11.0076, "6450", "5254"},
    {"Ischgl", 46.9697, 10.2889, "6561", "5444"},
    {"Serfaus", 47.0394, 10.6047, "6534", "5476"},
    {"Fiss", 47.0600, 10.6200, "6533", "5476"},
    {"St. Anton am Arlberg", 47.1297, 10.2683, "6580", "5446"},
    {"Reutte", 47.4833, 10.7167, "6600", "5672"},
    {"Ehrwald", 47.4000, 10.9167, "6632", "5673"},
    {"Achenkirch", 47.5167, 11.7000, "6215", "5246"},
    {"Neustift im Stubaital", 47.1100, 11.3100, "6167", "5226"},
    {"Obergurgl", 46.8700, 11.0270, "6456", "5256"},
    {"Alpbach", 47.3989, 11.9436, "6236", "5336"},
}};

constexpr std::array<const char*, 10> kinds{"Restaurant", "Gasthof", "Hotel",  "Café",  "Pizzeria",
                                            "Gasthaus",   "Alm",     "Stube", "Bistro", "Wirtshaus"};

constexpr std::array<const char*, 70> words{
    "Seespitz",    "Alpenrose",   "Edelweiss",      "Post",          "Krone",        "Adler",
    "Hirschen",    "Sonne",       "Stern",          "Lamm",          "Bären",        "Rose",
    "Traube",      "Tirolerhof",  "Bergblick",      "Hugo's",        "Zur Linde",    "Enzian",
    "Almrausch",   "Kaiserhof",   "Schwarzer Adler", "Goldener Hirsch", "Weisses Rössl", "Jägerhof",
    "Bergkristall", "Panorama",   "Alpenhof",       "Dorfkrug",      "Zum Löwen",    "Fischerstube",
    "Waldhof",     "Gamsbock",    "Steinbock",      "Murmeltier",    "Zirbe",        "Lärche",
    "Bergheim",    "Seehof",      "Innblick",       "Sonnhof",       "Mühle",        "Schlössl",
    "Plattenhof",  "Talblick",    "Anger",          "Kreuz",         "Mohren",       "Engel",
    "Hofer",       "Ortner's",    "Maria's",        "Sepp's",        "Toni's",       "Franzl",
    "Kirchenwirt", "Dorfwirt",    "Brückenwirt",    "Kramerwirt",    "Unterwirt",    "Oberwirt",
    "Pfandl",      "Stadl",       "Tenne",          "Schupfen",      "Kuhstall",     "Hütte",
    "Bergsee",     "Gletscherblick", "Arlberg",     "Wilder Kaiser"};

constexpr std::array<const char*, 18> streets{
    "Dorfstrasse",  "Hauptstrasse", "Kirchweg",   "Innstrasse", "Bahnhofstrasse", "Marktplatz",
    "Schulgasse",   "Bergweg",      "Sonnenweg",  "Alpenstrasse", "Museumstrasse", "Seestrasse",
    "Wiesenweg",    "Lindenweg",    "Bichlweg",   "Gartenweg",  "Maria-Theresien-Strasse", "Kreuzgasse"};

// Used in the "Strasse <name> <n>" form.
constexpr std::array<const char*, 6> plain_streets{"Herrenanger", "Lindenhof", "Postanger",
                                                   "Moosen",      "Kapellen",  "Oberdorf"};

constexpr std::array<const char*, 21> number_words{
    "Zero",    "One",     "Two",       "Three",    "Four",     "Five",    "Six",
    "Seven",   "Eight",   "Nine",      "Ten",      "Eleven",   "Twelve",  "Thirteen",
    "Fourteen", "Fifteen", "Sixteen",  "Seventeen", "Eighteen", "Nineteen", "Twenty"};

constexpr std::int64_t day = 86400;
constexpr std::int64_t base_epoch = 1546300800;  // 2019-01-01
constexpr std::int64_t dup_epoch = 1577836800;   // 2020-01-01

std::string slug(std::string_view s) {
    std::string out;
    for (char32_t c : text::decode_utf8(s)) {
        switch (c) {
            case U'ä': out += "ae"; continue;
            case U'ö': out += "oe"; continue;
            case U'ü': out += "ue"; continue;
            case U'ß': out += "ss"; continue;
            case U'é': out += 'e'; continue;
            case U'\'': case U'.': continue;
            default: break;
        }
        if (c < 128 && std::isalnum(static_cast<int>(c))) {
            out += static_cast<char>(std::tolower(static_cast<int>(c)));
        } else if (!out.empty() && out.back() != '-') {
            out += '-';
        }
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out;
}

std::string digits(Rng& rng, int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s += static_cast<char>('0' + rng.below(10));
    return s;
}

double quality(Rng& rng, double lo) {
    return static_cast<double>(static_cast<int>(rng.uniform(lo, 1.0) * 100.0)) / 100.0;
}

bool is_kind(const std::string& token) {
    return std::find_if(kinds.begin(), kinds.end(), [&](const char* k) { return token == k; }) != kinds.end();
}

// Spelling and naming variants: "Hugo's" / "Hugos", "Bar Hugo's" /
// "Hugo's Bar", "Gasthof Krone" / "Krone", or a single-character edit.
std::string typo(const std::string& name, Rng& rng) {
    const auto toks = text::tokens(name);
    const bool has_kind = toks.size() > 1 && is_kind(toks.front());
    switch (rng.below(4)) {
        case 0:
            if (name.find('\'') != std::string::npos) {
                std::string out = name;
                out.erase(out.find('\''), 1);
                return out;
            }
            break;
        case 1:
            if (has_kind) {
                std::vector<std::string> out(toks.begin() + 1, toks.end());
                out.push_back(toks.front());
                return text::join(out, " ");
            }
            break;
        case 2:
            if (has_kind) return text::join(std::vector<std::string>(toks.begin() + 1, toks.end()), " ");
            break;
        default: break;
    }
    auto u = text::decode_utf8(name);
    for (;;) {
        std::vector<std::size_t> letters;
        for (std::size_t i = 1; i < u.size(); ++i) {
            if (u[i] != U' ' && u[i] != U'\'') letters.push_back(i);
        }
        if (letters.empty()) return name + "s";
        const std::size_t i = rng.pick(letters);
        auto v = u;
        const char32_t random_letter = U'a' + static_cast<char32_t>(rng.below(26));
        switch (rng.below(4)) {
            case 0: v[i] = random_letter; break;
            case 1: v.erase(i, 1); break;
            case 2:
                if (i + 1 < v.size()) std::swap(v[i], v[i + 1]);
                break;
            default: v.insert(v.begin() + static_cast<std::ptrdiff_t>(i), random_letter); break;
        }
        if (v != u) return text::encode_utf8(v);
    }
}

std::string permute_address(const std::string& address, Rng& rng) {
    auto toks = text::tokens(address);
    std::vector<int> options{0};  // move the house number to the front
    int number = -1;
    if (!toks.empty() && std::all_of(toks.back().begin(), toks.back().end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        number = std::stoi(toks.back());
    }
    if (number >= 0 && number <= 20) options.push_back(1);  // spell the number
    if (!toks.empty() && toks.front() == "Strasse") options.push_back(2);  // abbreviate
    switch (rng.pick(options)) {
        case 1: toks.back() = number_words[static_cast<std::size_t>(number)]; break;
        case 2: toks.front() = "Str."; break;
        default:
            if (toks.size() > 1) std::rotate(toks.begin(), toks.end() - 1, toks.end());
            break;
    }
    return text::join(toks, " ");
}

enum Corruption { typo_error, address_error, country_error, geo_error, alias_error, conflict_error };

void rename_key(Entity& e, const std::string& from, const std::string& to) {
    const auto it = e.properties.find(from);
    if (it == e.properties.end()) return;
    auto values = std::move(it->second);
    e.properties.erase(from);
    e.properties[to] = std::move(values);
}

std::vector<PropertyValue> relabel(const std::vector<PropertyValue>& values, const Provenance& prov, double q) {
    std::vector<PropertyValue> out;
    for (const auto& v : values) out.push_back(v.with_provenance(prov).with_quality(q));
    return out;
}

}  // namespace

void SyntheticSpec::validate() const {
    if (duplicate_count > entity_count) throw ConfigError("duplicateCount must not exceed entityCount");
    for (double w : {error_mix.typo, error_mix.address_permutation, error_mix.country_suffix, error_mix.missing_geo,
                     error_mix.property_alias, error_mix.value_conflict}) {
        if (!(w >= 0.0)) throw ConfigError("errorMix weights must be >= 0");
    }
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t total = spec.entity_count + spec.duplicate_count;

    std::vector<std::size_t> slot(total);
    for (std::size_t i = 0; i < total; ++i) slot[i] = i + 1;
    for (std::size_t i = total; i > 1; --i) std::swap(slot[i - 1], slot[static_cast<std::size_t>(rng.below(i))]);
    const std::size_t width = std::max<std::size_t>(4, std::to_string(total).size());
    const auto make_id = [&](std::size_t k) {
        const auto n = std::to_string(slot[k]);
        return EntityId("r" + std::string(width - n.size(), '0') + n);
    };

    std::vector<Entity> entities;
    entities.reserve(total);
    for (std::size_t k = 0; k < spec.entity_count; ++k) {
        const Town& town = rng.pick(towns);
        const Provenance prov{"portal-a", base_epoch + static_cast<std::int64_t>(rng.below(365)) * day};
        // One quality per record: the CSV layout carries provenance per row.
        const double q = quality(rng, 0.7);
        const auto text_value = [&](std::string s) { return PropertyValue::text(std::move(s), prov, q); };
        Entity e{make_id(k), "Restaurant", {}};
        // Some restaurants share a building, and with it the address, the
        // hotel's url and nearly the same coordinates.
        if (k > 0 && rng.chance(0.06)) {
            const Entity& host = entities[static_cast<std::size_t>(rng.below(k))];
            auto host_toks = text::tokens(host.values("name").front().raw());
            if (host_toks.size() > 1 && is_kind(host_toks.front())) host_toks.erase(host_toks.begin());
            std::string kind = rng.pick(kinds);
            e.properties["name"] = {text_value(kind + " " + text::join(host_toks, " "))};
            for (const char* p : {"streetAddress", "addressLocality", "postalCode", "url"}) {
                const auto vs = host.values(p);
                if (!vs.empty()) e.properties[p] = {vs.front().with_provenance(prov).with_quality(q)};
            }
            if (const auto g = host.values("geo"); !g.empty()) {
                const GeoPoint p = g.front().as_geo();
                e.properties["geo"] = {PropertyValue::geo(
                    {p.lat + rng.uniform(-0.00005, 0.00005), p.lon + rng.uniform(-0.00005, 0.00005)}, prov, q)};
            }
            if (rng.chance(0.85)) {
                e.properties["telephone"] = {text_value("+43 " + std::string(town.area) + " " + digits(rng, 5))};
            }
            entities.push_back(std::move(e));
            continue;
        }
        const std::string word = rng.pick(words);
        const std::string name = rng.chance(0.15) ? word : std::string(rng.pick(kinds)) + " " + word;
        e.properties["name"] = {text_value(name)};
        const auto house = std::to_string(1 + rng.below(40));
        e.properties["streetAddress"] = {text_value(
            rng.chance(0.2) ? "Strasse " + std::string(rng.pick(plain_streets)) + " " + house
                            : std::string(rng.pick(streets)) + " " + house)};
        e.properties["addressLocality"] = {text_value(town.name)};
        e.properties["postalCode"] = {text_value(town.postal)};
        if (rng.chance(0.85)) {
            e.properties["telephone"] = {text_value("+43 " + std::string(town.area) + " " + digits(rng, 5))};
        }
        if (rng.chance(0.8)) {
            const std::string url = rng.chance(0.05) ? "http://www.tirol-gastro.at"
                                                     : "http://www." + slug(name) + "-" + slug(town.name) + ".at";
            e.properties["url"] = {PropertyValue::url(url, prov, q)};
        }
        if (rng.chance(0.97)) {
            const GeoPoint p{town.lat + rng.uniform(-0.008, 0.008), town.lon + rng.uniform(-0.012, 0.012)};
            e.properties["geo"] = {PropertyValue::geo(p, prov, q)};
        }
        entities.push_back(std::move(e));
    }

    // Originals of the planted duplicates, drawn without replacement.
    std::vector<std::size_t> originals(spec.entity_count);
    for (std::size_t i = 0; i < originals.size(); ++i) originals[i] = i;
    for (std::size_t i = 0; i < spec.duplicate_count; ++i) {
        std::swap(originals[i], originals[i + static_cast<std::size_t>(rng.below(originals.size() - i))]);
    }
    originals.resize(spec.duplicate_count);

    const std::array<double, 6> weights{spec.error_mix.typo,           spec.error_mix.address_permutation,
                                        spec.error_mix.country_suffix, spec.error_mix.missing_geo,
                                        spec.error_mix.property_alias, spec.error_mix.value_conflict};
    const auto draw_error = [&](const std::set<int>& taken) -> int {
        double sum = 0.0;
        for (int c = 0; c < 6; ++c) {
            if (!taken.count(c)) sum += weights[static_cast<std::size_t>(c)];
        }
        if (sum <= 0.0) return -1;
        double x = rng.uniform() * sum;
        for (int c = 0; c < 6; ++c) {
            if (taken.count(c)) continue;
            x -= weights[static_cast<std::size_t>(c)];
            if (x < 0.0) return c;
        }
        for (int c = 5; c >= 0; --c) {
            if (!taken.count(c) && weights[static_cast<std::size_t>(c)] > 0.0) return c;
        }
        return -1;
    };

    std::vector<CanonicalPair> planted;
    for (std::size_t d = 0; d < spec.duplicate_count; ++d) {
        const Entity& original = entities[originals[d]];
        const Provenance prov{"portal-b", dup_epoch + static_cast<std::int64_t>(rng.below(365)) * day};
        const double q = quality(rng, 0.4);
        Entity e{make_id(spec.entity_count + d), original.type, {}};
        for (const auto& [p, values] : original.properties) e.properties[p] = relabel(values, prov, q);

        // Formatting differences that cleaners undo.
        if (auto* url = &e.properties["url"]; !url->empty() && rng.chance(0.5)) {
            std::string raw = url->front().raw();
            raw.replace(0, std::string("http://www.").size(), "https://");
            url->front() = url->front().with_raw(raw + "/");
        } else if (url->empty()) {
            e.properties.erase("url");
        }
        if (auto* tel = &e.properties["telephone"]; !tel->empty() && rng.chance(0.5)) {
            tel->front() = tel->front().with_raw("00" + tel->front().raw().substr(1));
        } else if (tel->empty()) {
            e.properties.erase("telephone");
        }
        if (auto* geo = &e.properties["geo"]; !geo->empty()) {
            const GeoPoint p = geo->front().as_geo();
            geo->front() = PropertyValue::geo({p.lat + rng.uniform(-0.0002, 0.0002), p.lon + rng.uniform(-0.0002, 0.0002)},
                                              prov, geo->front().quality());
        } else {
            e.properties.erase("geo");
        }

        std::set<int> errors;
        const std::size_t n_errors = rng.chance(0.5) ? 2 : 1;
        for (std::size_t i = 0; i < n_errors; ++i) {
            const int c = draw_error(errors);
            if (c >= 0) errors.insert(c);
        }
        for (int c : errors) {
            switch (c) {
                case typo_error: {
                    auto& v = e.properties["name"].front();
                    v = v.with_raw(typo(v.raw(), rng));
                    break;
                }
                case address_error: {
                    auto& v = e.properties["streetAddress"].front();
                    v = v.with_raw(permute_address(v.raw(), rng));
                    break;
                }
                case country_error: {
                    auto& v = e.properties["addressLocality"].front();
                    v = v.with_raw(v.raw() + ", AT");
                    break;
                }
                case geo_error: e.properties.erase("geo"); break;
                case alias_error: break;  // applied last so the other errors find canonical keys
                case conflict_error: {
                    e.properties["telephone"] = {PropertyValue::text(
                        "+43 " + digits(rng, 4) + " " + digits(rng, 5), prov, q)};
                    break;
                }
            }
        }
        if (errors.count(alias_error)) {
            rename_key(e, "name", "title");
            rename_key(e, "telephone", "phone");
            rename_key(e, "addressLocality", "locality");
        }
        planted.push_back(canonical_pair(original.id, e.id));
        entities.push_back(std::move(e));
    }

    SyntheticData out;
    out.raw.id = "synthetic";
    out.raw.source_label = "synthetic";
    std::sort(entities.begin(), entities.end(), [](const Entity& a, const Entity& b) { return a.id < b.id; });
    out.raw.entities = std::move(entities);
    out.dataset = apply_mapping(out.raw, SchemaMapping::standard());
    std::sort(planted.begin(), planted.end());
    out.planted = planted;

    const std::set<CanonicalPair> positives(planted.begin(), planted.end());
    for (const auto& p : planted) out.gold = out.gold.with({p, Verdict::same, "generator", 0});
    const std::size_t all_pairs = total * (total - 1) / 2;
    const std::size_t wanted = std::min(std::max<std::size_t>(20, 4 * spec.duplicate_count),
                                        all_pairs - positives.size());
    std::set<CanonicalPair> negatives;
    const auto& ents = out.raw.entities;
    while (negatives.size() < wanted) {
        const auto i = static_cast<std::size_t>(rng.below(total));
        const auto j = static_cast<std::size_t>(rng.below(total));
        if (i == j) continue;
        const auto p = canonical_pair(ents[i].id, ents[j].id);
        if (!positives.count(p)) negatives.insert(p);
    }
    for (const auto& p : negatives) out.gold = out.gold.with({p, Verdict::different, "generator", 0});
    return out;
}

MatchConfig name_only_config(Comparator comparator, double accept_threshold) {
    MatchConfig c;
    c.tree = ComparatorTree::leaf(
        {"name",
         CleanerChain::build({"lowercase", "strip-accents", "strip-punctuation", "collapse-whitespace", "trim"}),
         std::move(comparator)});
    c.accept_threshold = accept_threshold;
    c.min_comparable_leaves = 1;
    return c;
}

MatchConfig name_geo_config() {
    MatchConfig c;
    const auto text_chain =
        CleanerChain::build({"lowercase", "strip-accents", "strip-punctuation", "collapse-whitespace", "trim"});
    c.tree = ComparatorTree::branch(
        CombineOp::conjunction,
        {ComparatorTree::leaf({"name", text_chain, Comparator::make("levenshtein"), 1.0, 0.85}),
         ComparatorTree::leaf({"geo", CleanerChain::build({"geo-sentinel-scrub"}),
                               Comparator::make("geo-distance", {{"scale", 1000.0}}), 1.0, 0.9})});
    c.accept_threshold = 0.85;
    c.min_comparable_leaves = 1;
    return c;
}

}  // namespace kgdd
