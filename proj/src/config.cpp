#include "kgdd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "kgdd/error.hpp"

namespace kgdd {

namespace {

// Typed access to one JSON object that remembers which keys were read, so
// that leftovers can be reported as unknown.
class Obj {
public:
    Obj(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError(path_ + " must be an object");
    }

    const Json* get(const std::string& key) {
        used_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const Json& require(const std::string& key) {
        const Json* v = get(key);
        if (!v) throw ConfigError(path_ + "." + key + " is required");
        return *v;
    }

    double number(const std::string& key, double fallback) {
        const Json* v = get(key);
        if (!v) return fallback;
        if (!v->is_number()) throw ConfigError(where(key) + " must be a number");
        return v->get<double>();
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        const Json* v = get(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) throw ConfigError(where(key) + " must be an integer");
        return v->get<std::int64_t>();
    }

    std::size_t count(const std::string& key, std::size_t fallback) {
        const auto n = integer(key, static_cast<std::int64_t>(fallback));
        if (n < 0) throw ConfigError(where(key) + " must not be negative");
        return static_cast<std::size_t>(n);
    }

    bool boolean(const std::string& key, bool fallback) {
        const Json* v = get(key);
        if (!v) return fallback;
        if (!v->is_boolean()) throw ConfigError(where(key) + " must be true or false");
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        const Json* v = get(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
        return v->get<std::string>();
    }

    std::string where(const std::string& key) const { return path_ + "." + key; }

    void done() const {
        for (const auto& [k, v] : j_.items()) {
            if (!used_.count(k)) throw ConfigError("unknown key " + path_ + "." + k);
        }
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> used_;
};

const Json& array_at(const Json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path + " must be an array");
    return j;
}

std::map<std::string, std::string> string_map(const Json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + " must be an object");
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : j.items()) {
        if (v.is_string()) {
            out[k] = v.get<std::string>();
        } else if (v.is_number()) {
            out[k] = format_number(v.get<double>());
        } else {
            throw ConfigError(path + "." + k + " must be a string");
        }
    }
    return out;
}

std::pair<double, double> range_from(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ConfigError(path + " must be a [low, high] pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

Json range_to(std::pair<double, double> r) { return Json::array({r.first, r.second}); }

MissingPolicy missing_from(const std::string& s, const std::string& path) {
    if (s == "ignore") return MissingPolicy::ignore;
    if (s == "pessimistic") return MissingPolicy::pessimistic;
    throw ConfigError(path + " must be 'ignore' or 'pessimistic'");
}

CombineOp op_from(const std::string& s, const std::string& path) {
    const auto op = parse_combine_op(s);
    if (!op) throw ConfigError(path + " must be one of AND, OR, MIN, MAX, WAVG");
    return *op;
}

FusionRule rule_from(const Json& j, const std::string& path) {
    const auto fn = [&](const std::string& name) {
        const auto f = parse_fusion_function(name);
        if (!f) throw ConfigError(path + ": unknown fusion function '" + name + "'");
        return *f;
    };
    if (j.is_string()) return {fn(j.get<std::string>()), {}};
    Obj o(j, path);
    FusionRule r{fn(o.string("function", "union")), {}};
    if (const Json* p = o.get("params")) r.params = string_map(*p, path + ".params");
    o.done();
    return r;
}

Json rule_to(const FusionRule& r) {
    if (r.params.empty()) return std::string(to_string(r.function));
    Json j = Json::object();
    j["function"] = std::string(to_string(r.function));
    j["params"] = r.params;
    return j;
}

ComparatorTree tree_at(const Json& j, const std::string& path) {
    Obj o(j, path);
    const double weight = o.number("weight", 1.0);
    const double threshold = o.number("threshold", 0.0);
    if (o.get("op")) {
        const auto op = op_from(o.string("op", ""), o.where("op"));
        std::vector<ComparatorTree> children;
        const Json& cs = array_at(o.require("children"), o.where("children"));
        for (std::size_t i = 0; i < cs.size(); ++i) {
            children.push_back(tree_at(cs[i], path + ".children[" + std::to_string(i) + "]"));
        }
        o.done();
        return ComparatorTree::branch(op, std::move(children), weight, threshold);
    }
    Leaf leaf;
    leaf.property = o.string("property", "");
    if (leaf.property.empty()) throw ConfigError(path + " needs either 'op' or 'property'");
    if (const Json* c = o.get("cleaners")) leaf.cleaners = chain_from_json(*c);
    if (const Json* c = o.get("comparator")) leaf.comparator = comparator_from_json(*c);
    leaf.weight = weight;
    leaf.threshold = threshold;
    leaf.missing = missing_from(o.string("missing", "ignore"), o.where("missing"));
    o.done();
    return ComparatorTree::leaf(std::move(leaf));
}

}  // namespace

Json to_json(const Comparator& c) {
    if (c.params().empty()) return c.name();
    Json j = Json::object();
    j["name"] = c.name();
    j["params"] = c.params();
    return j;
}

Comparator comparator_from_json(const Json& j) {
    if (j.is_string()) return Comparator::make(j.get<std::string>());
    Obj o(j, "comparator");
    const auto name = o.string("name", "");
    std::map<std::string, double> params;
    if (const Json* p = o.get("params")) {
        if (!p->is_object()) throw ConfigError("comparator.params must be an object");
        for (const auto& [k, v] : p->items()) {
            if (!v.is_number()) throw ConfigError("comparator parameter '" + k + "' must be a number");
            params[k] = v.get<double>();
        }
    }
    o.done();
    return Comparator::make(name, std::move(params));
}

Json to_json(const CleanerChain& chain) {
    Json j = Json::array();
    for (const auto& step : chain.steps()) {
        if (step.params.empty()) {
            j.push_back(step.name);
        } else {
            j.push_back(Json{{"name", step.name}, {"params", step.params}});
        }
    }
    return j;
}

CleanerChain chain_from_json(const Json& j) {
    const Json& a = array_at(j, "cleaners");
    std::vector<CleanerStep> steps;
    for (const auto& s : a) {
        if (s.is_string()) {
            steps.push_back({s.get<std::string>(), {}});
            continue;
        }
        Obj o(s, "cleaners[]");
        CleanerStep step{o.string("name", ""), {}};
        if (const Json* p = o.get("params")) step.params = string_map(*p, "cleaner params");
        o.done();
        steps.push_back(std::move(step));
    }
    return CleanerChain::build(std::move(steps));
}

Json to_json(const ComparatorTree& tree) {
    Json j = Json::object();
    if (tree.is_leaf()) {
        const auto& l = std::get<Leaf>(tree.node);
        j["property"] = l.property;
        j["cleaners"] = to_json(l.cleaners);
        j["comparator"] = to_json(l.comparator);
        j["weight"] = l.weight;
        j["threshold"] = l.threshold;
        j["missing"] = std::string(to_string(l.missing));
        return j;
    }
    const auto& b = std::get<Branch>(tree.node);
    j["op"] = std::string(to_string(b.op));
    j["weight"] = b.weight;
    j["threshold"] = b.threshold;
    j["children"] = Json::array();
    for (const auto& c : b.children) j["children"].push_back(to_json(c));
    return j;
}

ComparatorTree tree_from_json(const Json& j) { return tree_at(j, "tree"); }

Json to_json(const BlockingSpec& spec) {
    Json j = Json::object();
    j["strategy"] = std::string(to_string(spec.strategy));
    j["keys"] = Json::array();
    for (const auto& k : spec.keys) {
        j["keys"].push_back(Json{{"kind", std::string(to_string(k.kind))}, {"property", k.property}, {"length", k.length}});
    }
    j["window"] = spec.window;
    j["unkeyedBlock"] = spec.unkeyed_block;
    return j;
}

BlockingSpec blocking_from_json(const Json& j) {
    Obj o(j, "blocking");
    BlockingSpec spec;
    const auto strategy = o.string("strategy", "naive");
    const auto s = parse_blocking_strategy(strategy);
    if (!s) throw ConfigError("blocking.strategy: unknown strategy '" + strategy + "'");
    spec.strategy = *s;
    if (const Json* keys = o.get("keys")) {
        for (const auto& k : array_at(*keys, "blocking.keys")) {
            Obj ko(k, "blocking.keys[]");
            const auto kind_name = ko.string("kind", "");
            const auto kind = parse_key_kind(kind_name);
            if (!kind) throw ConfigError("blocking.keys[]: unknown key kind '" + kind_name + "'");
            KeyFunction f;
            switch (*kind) {
                case KeyFunction::Kind::name_prefix: f = KeyFunction::name_prefix(); break;
                case KeyFunction::Kind::geohash: f = KeyFunction::geohash(); break;
                case KeyFunction::Kind::url_host: f = KeyFunction::url_host(); break;
                case KeyFunction::Kind::exact: f = KeyFunction::exact(""); break;
            }
            f.property = ko.string("property", f.property);
            f.length = static_cast<int>(ko.integer("length", f.length));
            if (f.property.empty()) throw ConfigError("blocking.keys[].property is required");
            ko.done();
            spec.keys.push_back(std::move(f));
        }
    }
    spec.window = o.count("window", spec.window);
    spec.unkeyed_block = o.boolean("unkeyedBlock", spec.unkeyed_block);
    o.done();
    spec.validate();
    return spec;
}

Json to_json(const MatchConfig& config) {
    Json j = Json::object();
    j["mode"] = std::string(to_string(config.mode));
    j["acceptThreshold"] = config.accept_threshold;
    j["minComparableLeaves"] = config.min_comparable_leaves;
    j["blocking"] = to_json(config.blocking);
    j["tree"] = to_json(config.tree);
    return j;
}

MatchConfig match_from_json(const Json& j) {
    Obj o(j, "match");
    MatchConfig c;
    const auto mode = o.string("mode", "dedup");
    if (mode == "dedup") {
        c.mode = MatchMode::dedup;
    } else if (mode == "linkage") {
        c.mode = MatchMode::linkage;
    } else {
        throw ConfigError("match.mode must be 'dedup' or 'linkage'");
    }
    c.accept_threshold = o.number("acceptThreshold", c.accept_threshold);
    c.min_comparable_leaves = static_cast<int>(o.integer("minComparableLeaves", c.min_comparable_leaves));
    if (const Json* b = o.get("blocking")) c.blocking = blocking_from_json(*b);
    c.tree = tree_from_json(o.require("tree"));
    o.done();
    c.validate();
    return c;
}

Json to_json(const SchemaMapping& m) {
    Json j = Json::object();
    j["standard"] = false;
    j["aliases"] = Json::object();
    for (const auto& [k, v] : m.aliases) j["aliases"][k] = v;
    j["typeHints"] = Json::object();
    for (const auto& [k, v] : m.type_hints) j["typeHints"][k] = std::string(to_string(v));
    j["geoProperty"] = m.geo_property;
    j["geoSentinel"] = m.geo_sentinel;
    j["flatten"] = Json::array();
    for (const auto& f : m.flatten) j["flatten"].push_back(f);
    j["prefixes"] = Json::object();
    for (const auto& [k, v] : m.prefixes) j["prefixes"][k] = v;
    return j;
}

SchemaMapping mapping_from_json(const Json& j) {
    Obj o(j, "mapping");
    SchemaMapping m = o.boolean("standard", true) ? SchemaMapping::standard() : SchemaMapping{};
    if (const Json* a = o.get("aliases")) {
        for (const auto& [k, v] : string_map(*a, "mapping.aliases")) m.aliases[k] = v;
    }
    if (const Json* h = o.get("typeHints")) {
        for (const auto& [k, v] : string_map(*h, "mapping.typeHints")) {
            const auto hint = parse_type_hint(v);
            if (!hint) throw ConfigError("mapping.typeHints." + k + ": unknown type hint '" + v + "'");
            m.type_hints[k] = *hint;
        }
    }
    m.geo_property = o.string("geoProperty", m.geo_property);
    m.geo_sentinel = o.boolean("geoSentinel", m.geo_sentinel);
    if (const Json* f = o.get("flatten")) {
        m.flatten.clear();
        for (const auto& p : array_at(*f, "mapping.flatten")) {
            if (!p.is_string()) throw ConfigError("mapping.flatten entries must be strings");
            m.flatten.insert(p.get<std::string>());
        }
    }
    if (const Json* p = o.get("prefixes")) {
        for (const auto& [k, v] : string_map(*p, "mapping.prefixes")) m.prefixes[k] = v;
    }
    o.done();
    m.validate();
    return m;
}

Json to_json(const FusionPolicy& p) {
    Json j = Json::object();
    j["default"] = rule_to(p.default_rule);
    j["qualityThreshold"] = p.quality_threshold;
    j["unique"] = Json::array();
    for (const auto& u : p.unique) j["unique"].push_back(u);
    j["properties"] = Json::object();
    for (const auto& [k, r] : p.per_property) j["properties"][k] = rule_to(r);
    return j;
}

FusionPolicy fusion_from_json(const Json& j) {
    Obj o(j, "fusion");
    FusionPolicy p;
    if (const Json* d = o.get("default")) p.default_rule = rule_from(*d, "fusion.default");
    p.quality_threshold = o.number("qualityThreshold", p.quality_threshold);
    if (const Json* u = o.get("unique")) {
        for (const auto& x : array_at(*u, "fusion.unique")) {
            if (!x.is_string()) throw ConfigError("fusion.unique entries must be strings");
            p.unique.insert(x.get<std::string>());
        }
    }
    if (const Json* props = o.get("properties")) {
        if (!props->is_object()) throw ConfigError("fusion.properties must be an object");
        for (const auto& [k, v] : props->items()) p.per_property[k] = rule_from(v, "fusion.properties." + k);
    }
    o.done();
    p.validate();
    return p;
}

Json to_json(const SearchSpace& s) {
    Json j = Json::object();
    j["properties"] = Json::array();
    for (const auto& pg : s.properties) {
        Json p = Json::object();
        p["property"] = pg.property;
        p["comparators"] = Json::array();
        for (const auto& c : pg.comparators) p["comparators"].push_back(to_json(c));
        p["chains"] = Json::array();
        for (const auto& c : pg.chains) p["chains"].push_back(to_json(c));
        p["missing"] = std::string(to_string(pg.missing));
        j["properties"].push_back(std::move(p));
    }
    j["rootOps"] = Json::array();
    for (auto op : s.root_ops) j["rootOps"].push_back(std::string(to_string(op)));
    j["weightRange"] = range_to(s.weight_range);
    j["leafThresholdRange"] = range_to(s.leaf_threshold_range);
    j["acceptThresholdRange"] = range_to(s.accept_threshold_range);
    j["minComparableLeaves"] = s.min_comparable_leaves;
    j["blockings"] = Json::array();
    for (const auto& b : s.blockings) j["blockings"].push_back(to_json(b));
    return j;
}

SearchSpace search_space_from_json(const Json& j) {
    Obj o(j, "ga.searchSpace");
    SearchSpace s;
    for (const auto& pj : array_at(o.require("properties"), "ga.searchSpace.properties")) {
        Obj po(pj, "ga.searchSpace.properties[]");
        PropertyGenes g;
        g.property = po.string("property", "");
        if (g.property.empty()) throw ConfigError("ga.searchSpace.properties[].property is required");
        for (const auto& c : array_at(po.require("comparators"), "comparators")) {
            g.comparators.push_back(comparator_from_json(c));
        }
        if (const Json* chains = po.get("chains")) {
            for (const auto& c : array_at(*chains, "chains")) g.chains.push_back(chain_from_json(c));
        }
        if (g.chains.empty()) g.chains.emplace_back();
        g.missing = missing_from(po.string("missing", "ignore"), "missing");
        po.done();
        s.properties.push_back(std::move(g));
    }
    if (const Json* ops = o.get("rootOps")) {
        s.root_ops.clear();
        for (const auto& op : array_at(*ops, "rootOps")) {
            if (!op.is_string()) throw ConfigError("rootOps entries must be strings");
            s.root_ops.push_back(op_from(op.get<std::string>(), "rootOps[]"));
        }
    }
    if (const Json* r = o.get("weightRange")) s.weight_range = range_from(*r, "weightRange");
    if (const Json* r = o.get("leafThresholdRange")) s.leaf_threshold_range = range_from(*r, "leafThresholdRange");
    if (const Json* r = o.get("acceptThresholdRange")) {
        s.accept_threshold_range = range_from(*r, "acceptThresholdRange");
    }
    if (const Json* m = o.get("minComparableLeaves")) {
        s.min_comparable_leaves.clear();
        for (const auto& x : array_at(*m, "minComparableLeaves")) {
            if (!x.is_number_integer()) throw ConfigError("minComparableLeaves entries must be integers");
            s.min_comparable_leaves.push_back(x.get<int>());
        }
    }
    if (const Json* b = o.get("blockings")) {
        for (const auto& x : array_at(*b, "blockings")) s.blockings.push_back(blocking_from_json(x));
    }
    o.done();
    return s;
}

Json to_json(const RunConfig& c) {
    Json j = Json::object();
    j["mapping"] = to_json(c.mapping);
    j["match"] = to_json(c.match);
    j["fusion"] = to_json(c.fusion);
    j["evaluation"] = Json{{"closedWorld", c.world == WorldAssumption::closed}, {"sweep", c.sweep}};
    Json ga = Json::object();
    ga["populationSize"] = c.ga.population_size;
    ga["generations"] = c.ga.generations;
    ga["mutationRate"] = c.ga.mutation_rate;
    ga["crossoverRate"] = c.ga.crossover_rate;
    ga["seed"] = c.ga.seed;
    ga["tournament"] = c.ga.tournament;
    ga["elite"] = c.ga.elite;
    ga["seedWithMatch"] = c.ga_seed_with_match;
    if (!c.ga_default_space) ga["searchSpace"] = to_json(c.ga.space);
    j["ga"] = std::move(ga);
    return j;
}

RunConfig parse_run_config(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("run config is not valid JSON: ") + e.what());
    }
    Obj o(j, "config");
    RunConfig c;
    if (const Json* m = o.get("mapping")) c.mapping = mapping_from_json(*m);
    c.match = match_from_json(o.require("match"));
    if (const Json* f = o.get("fusion")) c.fusion = fusion_from_json(*f);
    if (const Json* e = o.get("evaluation")) {
        Obj eo(*e, "evaluation");
        c.world = eo.boolean("closedWorld", false) ? WorldAssumption::closed : WorldAssumption::open;
        if (const Json* s = eo.get("sweep")) {
            c.sweep.clear();
            for (const auto& t : array_at(*s, "evaluation.sweep")) {
                if (!t.is_number() || t.get<double>() < 0.0 || t.get<double>() > 1.0) {
                    throw ConfigError("evaluation.sweep thresholds must be numbers in [0,1]");
                }
                c.sweep.push_back(t.get<double>());
            }
        }
        eo.done();
    }
    c.ga.world = c.world;
    c.ga.blocking = c.match.blocking;
    if (const Json* g = o.get("ga")) {
        Obj go(*g, "ga");
        c.ga.population_size = go.count("populationSize", c.ga.population_size);
        c.ga.generations = go.count("generations", c.ga.generations);
        c.ga.mutation_rate = go.number("mutationRate", c.ga.mutation_rate);
        c.ga.crossover_rate = go.number("crossoverRate", c.ga.crossover_rate);
        c.ga.seed = static_cast<std::uint64_t>(go.integer("seed", static_cast<std::int64_t>(c.ga.seed)));
        c.ga.tournament = go.count("tournament", c.ga.tournament);
        c.ga.elite = go.count("elite", c.ga.elite);
        c.ga_seed_with_match = go.boolean("seedWithMatch", false);
        if (const Json* s = go.get("searchSpace")) {
            c.ga.space = search_space_from_json(*s);
            c.ga_default_space = false;
        }
        go.done();
    }
    o.done();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read run config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

}  // namespace kgdd
