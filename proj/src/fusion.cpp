#include "kgdd/fusion.hpp"

#include <algorithm>
#include <unordered_map>

#include "kgdd/error.hpp"
#include "kgdd/text.hpp"

namespace kgdd {

std::string_view to_string(FusionFunction f) {
    switch (f) {
        case FusionFunction::filter: return "filter";
        case FusionFunction::average: return "average";
        case FusionFunction::voting: return "voting";
        case FusionFunction::latest: return "latest";
        case FusionFunction::prefer_source: return "prefer-source";
        case FusionFunction::longest: return "longest";
        case FusionFunction::union_values: return "union";
    }
    return "union";
}

std::optional<FusionFunction> parse_fusion_function(std::string_view s) {
    for (auto f : {FusionFunction::filter, FusionFunction::average, FusionFunction::voting,
                   FusionFunction::latest, FusionFunction::prefer_source, FusionFunction::longest,
                   FusionFunction::union_values}) {
        if (to_string(f) == s) return f;
    }
    return std::nullopt;
}

bool is_multi_valued(FusionFunction f) {
    return f == FusionFunction::filter || f == FusionFunction::union_values;
}

namespace {

std::vector<std::string> split_sources(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = std::min(s.find(',', start), s.size());
        auto part = text::trim(std::string_view(s).substr(start, comma - start));
        if (!part.empty()) out.push_back(std::move(part));
        start = comma + 1;
    }
    return out;
}

double parse_threshold(const std::string& raw) {
    try {
        std::size_t used = 0;
        const double t = std::stod(raw, &used);
        if (used == raw.size() && t >= 0.0 && t <= 1.0) return t;
    } catch (const std::exception&) {
    }
    throw PolicyError("filter threshold must be a number in [0,1], got '" + raw + "'");
}

// Total order used to pick one occurrence among values with the same kind and
// lexical form: higher quality, newer ingestion, smaller source label.
bool better_occurrence(const PropertyValue& a, const PropertyValue& b) {
    if (a.quality_or_default() != b.quality_or_default()) return a.quality_or_default() > b.quality_or_default();
    if (a.provenance().ingested != b.provenance().ingested) return a.provenance().ingested > b.provenance().ingested;
    if (a.provenance().source != b.provenance().source) return a.provenance().source < b.provenance().source;
    return a.quality().has_value() && !b.quality().has_value();
}

struct Group {
    const PropertyValue* best = nullptr;
    std::size_t count = 0;
    double max_quality = 0.0;
    std::int64_t newest = 0;
};

bool lexically_before(const PropertyValue& a, const PropertyValue& b) {
    if (a.raw() != b.raw()) return a.raw() < b.raw();
    return a.kind() < b.kind();
}

// Groups sorted by lexical form.
std::vector<Group> group(std::span<const PropertyValue> in) {
    std::vector<Group> groups;
    for (const auto& v : in) {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
            return g.best->kind() == v.kind() && g.best->raw() == v.raw();
        });
        if (it == groups.end()) {
            groups.push_back({&v, 1, v.quality_or_default(), v.provenance().ingested});
            continue;
        }
        ++it->count;
        it->max_quality = std::max(it->max_quality, v.quality_or_default());
        it->newest = std::max(it->newest, v.provenance().ingested);
        if (better_occurrence(v, *it->best)) it->best = &v;
    }
    std::sort(groups.begin(), groups.end(),
              [](const Group& a, const Group& b) { return lexically_before(*a.best, *b.best); });
    return groups;
}

std::vector<PropertyValue> representatives(const std::vector<Group>& groups) {
    std::vector<PropertyValue> out;
    out.reserve(groups.size());
    for (const auto& g : groups) out.push_back(*g.best);
    return out;
}

std::string plural(std::size_t n, const char* word) {
    return std::to_string(n) + " " + word + (n == 1 ? "" : "s");
}

}  // namespace

namespace fusion {

std::vector<PropertyValue> filter(std::span<const PropertyValue> in, double threshold, std::string& rationale) {
    std::vector<PropertyValue> kept;
    for (const auto& v : in) {
        if (v.quality_or_default() >= threshold) kept.push_back(v);
    }
    auto out = representatives(group(kept));
    rationale = "kept " + std::to_string(kept.size()) + " of " + plural(in.size(), "value") +
                " with quality >= " + format_number(threshold);
    return out;
}

std::vector<PropertyValue> average(std::span<const PropertyValue> in, std::string& rationale) {
    if (in.empty()) {
        rationale = "no values";
        return {};
    }
    const ValueKind kind = in.front().kind();
    for (const auto& v : in) {
        if (v.kind() != kind || !v.is_numeric()) {
            throw PolicyError("average needs number or geopoint values of one kind");
        }
    }
    const auto n = static_cast<double>(in.size());
    const auto mean = [n](std::vector<double> xs) {
        std::sort(xs.begin(), xs.end());
        double sum = 0.0;
        for (double x : xs) sum += x;
        return sum / n;
    };
    rationale = "mean of " + plural(in.size(), "value");
    if (kind == ValueKind::number) {
        std::vector<double> xs;
        for (const auto& v : in) xs.push_back(v.as_number());
        return {PropertyValue::number(mean(std::move(xs)))};
    }
    std::vector<double> lats, lons;
    for (const auto& v : in) {
        lats.push_back(v.as_geo().lat);
        lons.push_back(v.as_geo().lon);
    }
    return {PropertyValue::geo({mean(std::move(lats)), mean(std::move(lons))})};
}

std::vector<PropertyValue> voting(std::span<const PropertyValue> in, std::string& rationale) {
    const auto groups = group(in);
    if (groups.empty()) {
        rationale = "no values";
        return {};
    }
    const Group* win = &groups.front();
    for (const auto& g : groups) {
        if (g.count != win->count) {
            if (g.count > win->count) win = &g;
        } else if (g.max_quality != win->max_quality) {
            if (g.max_quality > win->max_quality) win = &g;
        } else if (g.newest > win->newest) {
            win = &g;
        }
    }
    rationale = plural(win->count, "vote") + " of " + std::to_string(in.size());
    return {*win->best};
}

std::vector<PropertyValue> latest(std::span<const PropertyValue> in, std::string& rationale) {
    if (in.empty()) {
        rationale = "no values";
        return {};
    }
    const PropertyValue* win = &in.front();
    for (const auto& v : in) {
        const auto& a = v.provenance();
        const auto& b = win->provenance();
        if (a.ingested != b.ingested) {
            if (a.ingested > b.ingested) win = &v;
        } else if (v.quality_or_default() != win->quality_or_default()) {
            if (v.quality_or_default() > win->quality_or_default()) win = &v;
        } else if (lexically_before(v, *win)) {
            win = &v;
        } else if (!lexically_before(*win, v) && better_occurrence(v, *win)) {
            win = &v;
        }
    }
    rationale = "ingested at " + format_timestamp(win->provenance().ingested);
    return {*win};
}

std::vector<PropertyValue> longest(std::span<const PropertyValue> in, std::string& rationale) {
    const auto groups = group(in);
    if (groups.empty()) {
        rationale = "no values";
        return {};
    }
    const Group* win = &groups.front();
    std::size_t best = text::decode_utf8(win->best->raw()).size();
    for (const auto& g : groups) {
        const auto len = text::decode_utf8(g.best->raw()).size();
        if (len > best) {
            best = len;
            win = &g;
        }
    }
    rationale = std::to_string(best) + " characters";
    return {*win->best};
}

std::vector<PropertyValue> union_values(std::span<const PropertyValue> in, std::string& rationale) {
    auto out = representatives(group(in));
    rationale = plural(out.size(), "distinct value") + " from " + std::to_string(in.size());
    return out;
}

std::vector<PropertyValue> prefer_source(std::span<const PropertyValue> in,
                                         std::span<const std::string> sources, bool& fell_back,
                                         std::string& rationale) {
    fell_back = false;
    for (const auto& s : sources) {
        std::vector<PropertyValue> from;
        for (const auto& v : in) {
            if (v.provenance().source == s) from.push_back(v);
        }
        if (from.empty()) continue;
        std::string why;
        auto out = voting(from, why);
        rationale = "source " + s + ", " + why;
        return out;
    }
    fell_back = !in.empty();
    std::string why;
    auto out = voting(in, why);
    rationale = "no preferred source present; voting " + why;
    return out;
}

}  // namespace fusion

FusionRule FusionPolicy::rule_for(const std::string& property) const {
    const auto it = per_property.find(property);
    return it == per_property.end() ? default_rule : it->second;
}

void FusionPolicy::validate() const {
    if (!(quality_threshold >= 0.0 && quality_threshold <= 1.0)) {
        throw PolicyError("qualityThreshold must lie in [0,1]");
    }
    const auto check = [](const std::string& property, const FusionRule& r) {
        for (const auto& [k, v] : r.params) {
            if (r.function == FusionFunction::filter && k == "threshold") {
                parse_threshold(v);
            } else if (!(r.function == FusionFunction::prefer_source && k == "sources")) {
                throw PolicyError("fusion function " + std::string(to_string(r.function)) +
                                  " for '" + property + "' has no parameter '" + k + "'");
            }
        }
        if (r.function == FusionFunction::prefer_source) {
            const auto it = r.params.find("sources");
            if (it == r.params.end() || split_sources(it->second).empty()) {
                throw PolicyError("prefer-source for '" + property + "' needs a 'sources' list");
            }
        }
    };
    check("(default)", default_rule);
    for (const auto& [p, r] : per_property) check(p, r);
    for (const auto& p : unique) {
        const auto it = per_property.find(p);
        if (it != per_property.end() && is_multi_valued(it->second.function)) {
            throw PolicyError("unique property '" + p + "' is assigned the multi-valued function " +
                              std::string(to_string(it->second.function)));
        }
    }
}

void FusionPolicy::validate(std::span<const Entity> entities) const {
    validate();
    std::map<std::string, ValueKind> seen;
    for (const auto& e : entities) {
        for (const auto& [p, values] : e.properties) {
            if (rule_for(p).function != FusionFunction::average) continue;
            for (const auto& v : values) {
                if (!v.is_numeric()) {
                    throw PolicyError("average over '" + p + "' meets a " + std::string(to_string(v.kind())) +
                                      " value");
                }
                const auto [it, fresh] = seen.emplace(p, v.kind());
                if (!fresh && it->second != v.kind()) {
                    throw PolicyError("average over '" + p + "' mixes numbers and geopoints");
                }
            }
        }
    }
}

EntityId fused_id(std::span<const EntityId> members) {
    std::vector<std::string> ids;
    for (const auto& m : members) ids.push_back(m.str());
    std::sort(ids.begin(), ids.end());
    return EntityId("urn:kgdd:fused:" + text::join(ids, "+"));
}

Entity FusedEntity::as_entity() const { return {id, type, properties}; }

FusedEntity fuse_class(const EquivalenceSet& cls, std::span<const Entity> entities,
                       const FusionPolicy& policy) {
    if (cls.members.empty()) throw ValidationError("cannot fuse an empty equivalence set");
    policy.validate();
    std::unordered_map<EntityId, const Entity*> by_id;
    for (const auto& e : entities) by_id.emplace(e.id, &e);

    std::vector<EntityId> members(cls.members.begin(), cls.members.end());
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    std::vector<const Entity*> ents;
    for (const auto& m : members) {
        const auto it = by_id.find(m);
        if (it == by_id.end()) throw ReferentialError("equivalence set member '" + m.str() + "' is not in the dataset");
        ents.push_back(it->second);
    }

    FusedEntity out{fused_id(members), {}, members, {}, {}, {}};

    std::map<std::string, std::size_t> types;
    for (const auto* e : ents) ++types[e->type];
    std::size_t votes = 0;
    for (const auto& [t, n] : types) {
        if (n > votes) {
            out.type = t;
            votes = n;
        }
    }

    std::set<std::string> props;
    for (const auto* e : ents) {
        for (const auto& [p, values] : e->properties) {
            if (!values.empty()) props.insert(p);
        }
    }
    for (const auto& p : props) {
        std::vector<PropertyValue> inputs;
        for (const auto* e : ents) {
            const auto vs = e->values(p);
            inputs.insert(inputs.end(), vs.begin(), vs.end());
        }
        const bool unique = policy.unique.count(p) > 0;
        FusionRule rule = policy.rule_for(p);
        bool flag = false;
        if (unique && !policy.per_property.count(p)) {
            rule = {FusionFunction::voting, {}};
            flag = group(inputs).size() > 1;
        }
        FusionDecision d;
        d.property = p;
        d.function = std::string(to_string(rule.function));
        switch (rule.function) {
            case FusionFunction::filter: {
                const auto it = rule.params.find("threshold");
                const double t = it == rule.params.end() ? policy.quality_threshold : parse_threshold(it->second);
                d.output = fusion::filter(inputs, t, d.rationale);
                break;
            }
            case FusionFunction::average: d.output = fusion::average(inputs, d.rationale); break;
            case FusionFunction::voting: d.output = fusion::voting(inputs, d.rationale); break;
            case FusionFunction::latest: d.output = fusion::latest(inputs, d.rationale); break;
            case FusionFunction::longest: d.output = fusion::longest(inputs, d.rationale); break;
            case FusionFunction::union_values: d.output = fusion::union_values(inputs, d.rationale); break;
            case FusionFunction::prefer_source: {
                const auto sources = split_sources(rule.params.at("sources"));
                bool fell_back = false;
                d.output = fusion::prefer_source(inputs, sources, fell_back, d.rationale);
                flag = flag || fell_back;
                break;
            }
        }
        if (flag) {
            out.unresolved.insert(p);
            d.rationale += "; needs review";
        }
        if (!d.output.empty()) out.properties[p] = d.output;
        d.inputs = std::move(inputs);
        out.decisions.push_back(std::move(d));
    }
    return out;
}

FusedEntity resolve_overrides(const FusedEntity& fused, std::span<const Override> overrides) {
    FusedEntity out = fused;
    for (const auto& o : overrides) {
        const auto it = std::find_if(out.decisions.begin(), out.decisions.end(), [&](const FusionDecision& d) {
            return d.property == o.property && d.decided_by == DecidedBy::threshold;
        });
        if (it == out.decisions.end()) {
            throw ValidationError("fused entity has no property '" + o.property + "' to override");
        }
        std::vector<PropertyValue> matching;
        for (const auto& v : it->inputs) {
            if (v.raw() == o.chosen) matching.push_back(v);
        }
        if (matching.empty()) {
            throw ValidationError("'" + o.chosen + "' is not an input value of '" + o.property + "'");
        }
        const auto chosen = representatives(group(matching)).front();
        FusionDecision d{o.property, it->inputs, "override", {chosen},
                         "chosen by " + (o.actor.empty() ? std::string("operator") : o.actor),
                         DecidedBy::human, o.actor};
        out.properties[o.property] = {chosen};
        out.unresolved.erase(o.property);
        out.decisions.push_back(std::move(d));
    }
    return out;
}

}  // namespace kgdd
