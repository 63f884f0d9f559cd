#include "kgdd/formats.hpp"

#include <cstdio>
#include <istream>
#include <ostream>

#include "kgdd/error.hpp"

namespace kgdd {

Json to_json(const SameAsAssertion& a) {
    Json j = Json::object();
    j["idA"] = a.pair.first().str();
    j["idB"] = a.pair.second().str();
    j["sim"] = a.sim;
    j["perProperty"] = Json::object();
    for (const auto& [k, v] : a.per_property) j["perProperty"][k] = v;
    j["verdict"] = std::string(to_string(a.verdict));
    j["decidedBy"] = std::string(to_string(a.decided_by));
    return j;
}

SameAsAssertion assertion_from_json(const Json& j) {
    try {
        SameAsAssertion a{canonical_pair(EntityId(j.at("idA").get<std::string>()),
                                         EntityId(j.at("idB").get<std::string>())),
                          j.at("sim").get<double>(), {}, Verdict::unlabeled, DecidedBy::threshold};
        if (!(a.sim >= 0.0 && a.sim <= 1.0)) throw DataError("sim must lie in [0,1]");
        if (const auto it = j.find("perProperty"); it != j.end()) {
            for (const auto& [k, v] : it->items()) a.per_property[k] = v.get<double>();
        }
        if (const auto it = j.find("verdict"); it != j.end()) {
            const auto v = parse_verdict(it->get<std::string>());
            if (!v) throw DataError("unknown verdict '" + it->get<std::string>() + "'");
            a.verdict = *v;
        }
        if (const auto it = j.find("decidedBy"); it != j.end()) {
            a.decided_by = it->get<std::string>() == "human" ? DecidedBy::human : DecidedBy::threshold;
        }
        return a;
    } catch (const Json::exception& e) {
        throw DataError(std::string("malformed assertion: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("malformed assertion: ") + e.what());
    }
}

void write_results(std::span<const SameAsAssertion> assertions, std::ostream& out) {
    for (const auto& a : assertions) out << to_json(a).dump() << '\n';
}

std::vector<SameAsAssertion> read_results(std::istream& in) {
    std::vector<SameAsAssertion> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(assertion_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw RowError(n, std::string("malformed result record: ") + e.what());
        } catch (const DataError& e) {
            throw RowError(n, e.what());
        }
    }
    return out;
}

Json to_json(const RunReport& r) {
    Json j = Json::object();
    j["candidateCount"] = r.candidate_count;
    j["scoredCount"] = r.scored_count;
    j["acceptedCount"] = r.accepted_count;
    j["wallTimeSeconds"] = r.wall_time_seconds;
    j["stageTimings"] = Json::array();
    for (const auto& s : r.stage_timings) j["stageTimings"].push_back(Json{{"stage", s.stage}, {"seconds", s.seconds}});
    j["warnings"] = r.warnings;
    j["blocking"] = Json{{"pairs", r.blocking.pairs},
                         {"blocks", r.blocking.blocks},
                         {"largestBlock", r.blocking.largest_block},
                         {"unkeyed", r.blocking.unkeyed}};
    return j;
}

Json to_json(const EvalReport& r) {
    Json j = Json::object();
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["fn"] = r.fn;
    j["tn"] = r.tn ? Json(*r.tn) : Json(nullptr);
    j["unjudged"] = r.unjudged;
    j["related"] = r.related;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    return j;
}

Json to_json(const FeatureRow& row) {
    Json j = Json::object();
    j["property"] = row.property;
    j["fillRate"] = row.fill_rate;
    j["distinctness"] = row.distinctness;
    j["discriminative"] = row.discriminative;
    j["comparator"] = row.comparator;
    j["bestThreshold"] = row.best_threshold;
    j["standalone"] = to_json(row.standalone);
    return j;
}

Json to_json(const EquivalenceSet& set) {
    Json j = Json::array();
    for (const auto& m : set.members) j.push_back(m.str());
    return j;
}

Json to_json(const PropertyValue& v) {
    Json j = Json::object();
    j["kind"] = std::string(to_string(v.kind()));
    j["raw"] = v.raw();
    if (!v.provenance().source.empty()) j["source"] = v.provenance().source;
    if (v.provenance().ingested != 0) j["ingested"] = format_timestamp(v.provenance().ingested);
    if (v.quality()) j["quality"] = *v.quality();
    return j;
}

PropertyValue value_from_json(const Json& j) {
    try {
        const auto kind = parse_value_kind(j.at("kind").get<std::string>());
        if (!kind) throw DataError("unknown value kind '" + j.at("kind").get<std::string>() + "'");
        Provenance prov;
        if (const auto it = j.find("source"); it != j.end()) prov.source = it->get<std::string>();
        if (const auto it = j.find("ingested"); it != j.end()) {
            const auto t = parse_timestamp(it->get<std::string>());
            if (!t) throw DataError("unreadable timestamp '" + it->get<std::string>() + "'");
            prov.ingested = *t;
        }
        std::optional<double> quality;
        if (const auto it = j.find("quality"); it != j.end()) quality = it->get<double>();
        return PropertyValue::parse(*kind, j.at("raw").get<std::string>(), prov, quality);
    } catch (const Json::exception& e) {
        throw DataError(std::string("malformed value: ") + e.what());
    }
}

FusedEntity fused_from_json(const Json& j) {
    try {
        FusedEntity f{EntityId(j.at("id").get<std::string>()), j.at("type").get<std::string>(), {}, {}, {}, {}};
        for (const auto& m : j.at("members")) f.members.emplace_back(m.get<std::string>());
        for (const auto& [p, values] : j.at("properties").items()) {
            auto& out = f.properties[p];
            for (const auto& v : values) out.push_back(value_from_json(v));
        }
        for (const auto& u : j.at("unresolved")) f.unresolved.insert(u.get<std::string>());
        for (const auto& d : j.at("decisions")) {
            FusionDecision fd;
            fd.property = d.at("property").get<std::string>();
            fd.function = d.at("function").get<std::string>();
            for (const auto& v : d.at("inputs")) fd.inputs.push_back(value_from_json(v));
            for (const auto& v : d.at("output")) fd.output.push_back(value_from_json(v));
            fd.rationale = d.at("rationale").get<std::string>();
            fd.decided_by = d.at("decidedBy").get<std::string>() == "human" ? DecidedBy::human : DecidedBy::threshold;
            if (const auto it = d.find("actor"); it != d.end()) fd.actor = it->get<std::string>();
            f.decisions.push_back(std::move(fd));
        }
        return f;
    } catch (const Json::exception& e) {
        throw DataError(std::string("malformed fused entity: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("malformed fused entity: ") + e.what());
    }
}

Json to_json(const FusedEntity& f) {
    Json j = Json::object();
    j["id"] = f.id.str();
    j["type"] = f.type;
    j["members"] = Json::array();
    for (const auto& m : f.members) j["members"].push_back(m.str());
    j["properties"] = Json::object();
    for (const auto& [p, values] : f.properties) {
        Json vs = Json::array();
        for (const auto& v : values) vs.push_back(to_json(v));
        j["properties"][p] = std::move(vs);
    }
    j["unresolved"] = Json::array();
    for (const auto& u : f.unresolved) j["unresolved"].push_back(u);
    j["decisions"] = Json::array();
    for (const auto& d : f.decisions) j["decisions"].push_back(to_json(d, f.id));
    return j;
}

std::string gold_header() { return "idA,idB,verdict,labeler,timestamp"; }

std::string gold_row(const LabelRecord& r) {
    return csv_escape(r.pair.first().str()) + ',' + csv_escape(r.pair.second().str()) + ',' +
           std::string(to_string(r.verdict)) + ',' + csv_escape(r.labeler) + ',' + format_timestamp(r.timestamp);
}

void write_gold(const GoldStandard& gold, std::ostream& out) {
    out << gold_header() << '\n';
    for (const auto& r : gold.history()) out << gold_row(r) << '\n';
}

GoldStandard read_gold(std::istream& in) {
    GoldStandard gold;
    const auto records = read_csv_records(in);
    if (records.empty()) return gold;
    const auto& header = records.front().fields;
    if (header.size() < 3 || header[0] != "idA" || header[1] != "idB" || header[2] != "verdict") {
        throw SchemaError("gold standard header must start with idA,idB,verdict");
    }
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& rec = records[i];
        const auto& f = rec.fields;
        if (f.size() == 1 && f[0].empty()) continue;
        if (f.size() < 3) throw RowError(rec.line, "gold rows need idA,idB,verdict");
        const auto verdict = parse_verdict(f[2]);
        if (!verdict || *verdict == Verdict::unlabeled) {
            throw ValueError(rec.line, 3, "verdict must be same, different or related");
        }
        std::int64_t ts = 0;
        if (f.size() > 4 && !f[4].empty()) {
            const auto parsed = parse_timestamp(f[4]);
            if (!parsed) throw ValueError(rec.line, 5, "unreadable timestamp '" + f[4] + "'");
            ts = *parsed;
        }
        if (f[0].empty() || f[1].empty()) throw RowError(rec.line, "gold rows need two ids");
        try {
            gold = submit_label(gold, EntityId(f[0]), EntityId(f[1]), *verdict, f.size() > 3 ? f[3] : "", ts);
        } catch (const DataError& e) {
            throw RowError(rec.line, e.what());
        }
    }
    return gold;
}

Json to_json(const FusionDecision& d, const EntityId& entity) {
    Json j = Json::object();
    j["entity"] = entity.str();
    j["property"] = d.property;
    j["function"] = d.function;
    j["inputs"] = Json::array();
    for (const auto& v : d.inputs) j["inputs"].push_back(to_json(v));
    j["output"] = Json::array();
    for (const auto& v : d.output) j["output"].push_back(to_json(v));
    j["rationale"] = d.rationale;
    j["decidedBy"] = std::string(to_string(d.decided_by));
    if (!d.actor.empty()) j["actor"] = d.actor;
    return j;
}

void write_decisions(std::span<const FusedEntity> fused, std::ostream& out) {
    for (const auto& f : fused) {
        for (const auto& d : f.decisions) out << to_json(d, f.id).dump() << '\n';
    }
}

namespace {

std::string fixed(double x, int digits = 4) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        width.resize(std::max(width.size(), r.size()));
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    std::string out;
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c > 0) line += "  ";
            line += c == 0 ? r[c] + std::string(width[c] - r[c].size(), ' ')
                           : std::string(width[c] - r[c].size(), ' ') + r[c];
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + '\n';
    }
    return out;
}

}  // namespace

std::string eval_table(std::span<const std::pair<std::string, EvalReport>> rows) {
    std::vector<std::vector<std::string>> cells{
        {"", "tp", "fp", "fn", "unjudged", "precision", "recall", "f1"}};
    for (const auto& [label, r] : rows) {
        cells.push_back({label, std::to_string(r.tp), std::to_string(r.fp), std::to_string(r.fn),
                         std::to_string(r.unjudged), fixed(r.precision), fixed(r.recall), fixed(r.f1)});
    }
    return table(cells);
}

std::string feature_table(std::span<const FeatureRow> rows) {
    std::vector<std::vector<std::string>> cells{{"property", "fill", "distinct", "comparator", "threshold",
                                                 "precision", "recall", "f1", "note"}};
    for (const auto& r : rows) {
        cells.push_back({r.property, fixed(r.fill_rate, 3), fixed(r.distinctness, 3), r.comparator,
                         fixed(r.best_threshold, 2), fixed(r.standalone.precision), fixed(r.standalone.recall),
                         fixed(r.standalone.f1), r.discriminative ? "" : "non-discriminative"});
    }
    return table(cells);
}

}  // namespace kgdd
