#include "kgdd/ingest.hpp"

#include <algorithm>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "kgdd/error.hpp"
#include "kgdd/text.hpp"

namespace kgdd {

namespace {
constexpr std::string_view opaque_prefix = "urn:kgdd:entity:";
}

std::string_view to_string(TypeHint hint) {
    switch (hint) {
        case TypeHint::text: return "text";
        case TypeHint::number: return "number";
        case TypeHint::url: return "url";
        case TypeHint::timestamp: return "timestamp";
        case TypeHint::geopoint: return "geopoint";
        case TypeHint::latitude: return "latitude";
        case TypeHint::longitude: return "longitude";
    }
    return "text";
}

std::optional<TypeHint> parse_type_hint(std::string_view s) {
    if (s == "text") return TypeHint::text;
    if (s == "number") return TypeHint::number;
    if (s == "url") return TypeHint::url;
    if (s == "timestamp") return TypeHint::timestamp;
    if (s == "geopoint") return TypeHint::geopoint;
    if (s == "latitude" || s == "lat") return TypeHint::latitude;
    if (s == "longitude" || s == "lon") return TypeHint::longitude;
    return std::nullopt;
}

std::string SchemaMapping::canonical(std::string_view source) const {
    const auto it = aliases.find(source);
    return it == aliases.end() ? std::string(source) : it->second;
}

void SchemaMapping::validate() const {
    for (const auto& [from, to] : aliases) {
        if (from.empty() || to.empty()) throw ConfigError("schema aliases must be non-empty");
        const auto chained = aliases.find(to);
        if (chained != aliases.end() && chained->second != to) {
            throw ConfigError("alias target '" + to + "' is itself aliased to '" + chained->second +
                              "'");
        }
    }
    for (const auto& [name, hint] : type_hints) {
        if (name.empty()) throw ConfigError("type hints need a property name");
    }
    if (geo_property.empty()) throw ConfigError("geo property name must not be empty");
}

SchemaMapping SchemaMapping::standard() {
    SchemaMapping m;
    m.aliases = {
        {"title", "name"},
        {"label", "name"},
        {"rdfs:label", "name"},
        {"purl:title", "name"},
        {"dc:title", "name"},
        {"schema:name", "name"},
        {"schema:url", "url"},
        {"schema:address", "address"},
        {"schema:streetAddress", "streetAddress"},
        {"schema:addressLocality", "addressLocality"},
        {"locality", "addressLocality"},
        {"schema:telephone", "telephone"},
        {"phone", "telephone"},
        {"schema:geo", "geo"},
        {"schema:latitude", "latitude"},
        {"schema:longitude", "longitude"},
        {"lat", "latitude"},
        {"lon", "longitude"},
        {"lng", "longitude"},
    };
    m.type_hints = {
        {"url", TypeHint::url},
        {"latitude", TypeHint::latitude},
        {"longitude", TypeHint::longitude},
    };
    m.prefixes = {{"purl", "http://purl.org/dc/terms/"}};
    return m;
}

const Entity* Dataset::find(const EntityId& id) const {
    for (const auto& e : entities) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

std::vector<EntityId> Dataset::ids() const {
    std::vector<EntityId> out;
    out.reserve(entities.size());
    for (const auto& e : entities) out.push_back(e.id);
    return out;
}

std::set<std::string> Dataset::property_names() const {
    std::set<std::string> out;
    for (const auto& e : entities) {
        for (const auto& [name, list] : e.properties) out.insert(name);
    }
    return out;
}

void Dataset::validate() const {
    std::unordered_set<EntityId> seen;
    for (const auto& e : entities) {
        if (!seen.insert(e.id).second) throw ValidationError("duplicate entity id '" + e.id.str() + "'");
        e.validate();
    }
}

std::size_t IngestDiagnostics::unmapped_total() const {
    std::size_t n = 0;
    for (const auto& [p, c] : unmapped_predicates) n += c;
    return n;
}

namespace {

// Accumulates typed values for one entity; latitude/longitude halves are
// merged positionally into geopoints at finish().
class EntityBuilder {
public:
    EntityBuilder(const SchemaMapping& mapping, Provenance prov, std::optional<double> quality)
        : mapping_(mapping), prov_(std::move(prov)), quality_(quality) {}

    // Throws ValidationError when the lexical form does not fit the hint.
    void add(const std::string& property, TypeHint hint, std::string_view raw,
             std::string_view geo_target = {}) {
        const std::string target = geo_target.empty() ? mapping_.geo_property : std::string(geo_target);
        switch (hint) {
            case TypeHint::latitude:
                halves_[target].first.push_back(PropertyValue::number(raw).as_number());
                return;
            case TypeHint::longitude:
                halves_[target].second.push_back(PropertyValue::number(raw).as_number());
                return;
            case TypeHint::geopoint: {
                auto v = PropertyValue::parse(ValueKind::geopoint, raw, prov_, quality_);
                if (!(mapping_.geo_sentinel && v.as_geo() == GeoPoint{0.0, 0.0})) {
                    props_[property].push_back(std::move(v));
                }
                return;
            }
            case TypeHint::number:
                props_[property].push_back(PropertyValue::number(raw, prov_, quality_));
                return;
            case TypeHint::timestamp:
                props_[property].push_back(PropertyValue::timestamp(raw, prov_, quality_));
                return;
            case TypeHint::url:
                props_[property].push_back(PropertyValue::url(std::string(raw), prov_, quality_));
                return;
            case TypeHint::text:
                props_[property].push_back(PropertyValue::text(std::string(raw), prov_, quality_));
                return;
        }
    }

    void add_value(const std::string& property, PropertyValue v) {
        props_[property].push_back(std::move(v));
    }

    PropertyMap finish(std::vector<std::string>* warnings, const std::string& who) {
        for (auto& [target, lists] : halves_) {
            auto& [lats, lons] = lists;
            if (lats.size() != lons.size() && warnings) {
                warnings->push_back(who + ": unmatched latitude/longitude halves for '" + target +
                                    "'");
            }
            const std::size_t n = std::min(lats.size(), lons.size());
            for (std::size_t i = 0; i < n; ++i) {
                const GeoPoint p{lats[i], lons[i]};
                if (mapping_.geo_sentinel && p == GeoPoint{0.0, 0.0}) continue;
                props_[target].push_back(PropertyValue::geo(p, prov_, quality_));
            }
        }
        halves_.clear();
        return std::move(props_);
    }

private:
    const SchemaMapping& mapping_;
    Provenance prov_;
    std::optional<double> quality_;
    PropertyMap props_;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> halves_;
};

TypeHint hint_for(const SchemaMapping& mapping, const std::string& canonical) {
    const auto it = mapping.type_hints.find(canonical);
    return it == mapping.type_hints.end() ? TypeHint::text : it->second;
}

struct Column {
    std::string canonical;
    TypeHint hint = TypeHint::text;
    bool suffixed = false;  // kind came from a "@kind" suffix
    enum class Role { property, id, type, source, ingested, quality } role = Role::property;
};

Column classify_column(const std::string& header, const SchemaMapping& mapping,
                       const IngestOptions& options) {
    Column c;
    if (header == options.id_column) {
        c.role = Column::Role::id;
        return c;
    }
    if (header == options.type_column) {
        c.role = Column::Role::type;
        return c;
    }
    if (header == "@source") {
        c.role = Column::Role::source;
        return c;
    }
    if (header == "@ingested") {
        c.role = Column::Role::ingested;
        return c;
    }
    if (header == "@quality") {
        c.role = Column::Role::quality;
        return c;
    }
    std::string name = header;
    const auto at = header.rfind('@');
    if (at != std::string::npos && at > 0) {
        const std::string suffix = header.substr(at + 1);
        std::optional<TypeHint> h;
        if (suffix == "lat") h = TypeHint::latitude;
        if (suffix == "lon") h = TypeHint::longitude;
        if (!h && suffix != "latitude" && suffix != "longitude") h = parse_type_hint(suffix);
        if (h) {
            name = header.substr(0, at);
            c.hint = *h;
            c.suffixed = true;
        }
    }
    c.canonical = mapping.canonical(name);
    if (!c.suffixed) c.hint = hint_for(mapping, c.canonical);
    return c;
}

}  // namespace

std::vector<CsvRecord> read_csv_records(std::istream& in) {
    std::string doc((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (doc.rfind("\xEF\xBB\xBF", 0) == 0) doc.erase(0, 3);

    std::vector<CsvRecord> out;
    std::size_t line = 1;
    std::size_t i = 0;
    while (i < doc.size()) {
        CsvRecord rec;
        rec.line = line;
        std::string field;
        bool record_done = false;
        while (!record_done) {
            field.clear();
            if (i < doc.size() && doc[i] == '"') {
                ++i;
                for (;;) {
                    if (i >= doc.size()) throw RowError(rec.line, "unterminated quoted field");
                    const char c = doc[i++];
                    if (c == '"') {
                        if (i < doc.size() && doc[i] == '"') {
                            field.push_back('"');
                            ++i;
                        } else {
                            break;
                        }
                    } else {
                        if (c == '\n') ++line;
                        field.push_back(c);
                    }
                }
                if (i < doc.size() && doc[i] != ',' && doc[i] != '\n' && doc[i] != '\r') {
                    throw RowError(line, "unexpected character after closing quote");
                }
            } else {
                while (i < doc.size() && doc[i] != ',' && doc[i] != '\n' && doc[i] != '\r') {
                    if (doc[i] == '"') throw RowError(line, "quote inside unquoted field");
                    field.push_back(doc[i++]);
                }
            }
            rec.fields.push_back(field);
            if (i < doc.size() && doc[i] == ',') {
                ++i;
                continue;
            }
            if (i < doc.size() && doc[i] == '\r') ++i;
            if (i < doc.size() && doc[i] == '\n') ++i;
            ++line;
            record_done = true;
        }
        // Skip blank lines.
        if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;
        out.push_back(std::move(rec));
    }
    return out;
}

Dataset parse_csv(std::istream& in, const SchemaMapping& mapping, const IngestOptions& options,
                  IngestDiagnostics* diag) {
    mapping.validate();
    std::vector<CsvRecord> records;
    try {
        records = read_csv_records(in);
    } catch (const RowError& e) {
        throw ParseError(0, e.what());
    }
    if (records.empty()) throw SchemaError("CSV input has no header row");

    const auto& header = records.front().fields;
    std::vector<Column> columns;
    std::optional<std::size_t> id_col;
    for (std::size_t c = 0; c < header.size(); ++c) {
        columns.push_back(classify_column(header[c], mapping, options));
        if (columns.back().role == Column::Role::id) id_col = c;
    }
    if (!id_col) throw SchemaError("id column '" + options.id_column + "' not found in header");

    Dataset ds;
    ds.id = options.dataset_id;
    ds.source_label = options.source;
    std::unordered_set<std::string> seen_ids;

    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        try {
            if (rec.fields.size() != header.size()) {
                throw RowError(rec.line, "expected " + std::to_string(header.size()) +
                                             " fields, found " + std::to_string(rec.fields.size()));
            }
            const std::string& id = rec.fields[*id_col];
            if (text::trim(id).empty()) throw RowError(rec.line, "empty entity id");
            if (!seen_ids.insert(id).second) throw RowError(rec.line, "duplicate entity id '" + id + "'");

            Provenance prov{options.source, options.ingested};
            std::optional<double> quality;
            std::string type = options.default_type;
            for (std::size_t c = 0; c < columns.size(); ++c) {
                const std::string& cell = rec.fields[c];
                if (cell.empty()) continue;
                try {
                    switch (columns[c].role) {
                        case Column::Role::type: type = cell; break;
                        case Column::Role::source: prov.source = cell; break;
                        case Column::Role::ingested:
                            prov.ingested = PropertyValue::timestamp(cell).as_time();
                            break;
                        case Column::Role::quality:
                            quality = PropertyValue::number(cell).as_number();
                            if (*quality < 0.0 || *quality > 1.0) {
                                throw ValidationError("quality must lie in [0,1]");
                            }
                            break;
                        default: break;
                    }
                } catch (const ValidationError& e) {
                    throw ValueError(rec.line, c + 1, e.what());
                }
            }

            EntityBuilder builder(mapping, prov, quality);
            for (std::size_t c = 0; c < columns.size(); ++c) {
                if (columns[c].role != Column::Role::property) continue;
                const std::string& cell = rec.fields[c];
                if (cell.empty()) continue;
                try {
                    const bool half = columns[c].hint == TypeHint::latitude ||
                                      columns[c].hint == TypeHint::longitude;
                    builder.add(columns[c].canonical, columns[c].hint, cell,
                                half && columns[c].suffixed ? columns[c].canonical : std::string());
                } catch (const ValidationError& e) {
                    throw ValueError(rec.line, c + 1, e.what());
                }
            }
            std::vector<std::string> warnings;
            Entity e{EntityId(id), type, {}};
            try {
                e.properties = builder.finish(&warnings, "line " + std::to_string(rec.line));
            } catch (const ValidationError& err) {
                throw RowError(rec.line, err.what());
            }
            if (e.properties.empty()) throw RowError(rec.line, "entity '" + id + "' has no properties");
            if (diag) diag->warnings.insert(diag->warnings.end(), warnings.begin(), warnings.end());
            ds.entities.push_back(std::move(e));
        } catch (const DataError& err) {
            if (!diag) throw;
            diag->rejected.push_back({rec.line, err.what()});
        }
    }
    if (diag && !diag->rejected.empty()) {
        spdlog::warn("csv: rejected {} row(s)", diag->rejected.size());
    }
    return ds;
}

namespace {

constexpr std::string_view rdf_type = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
constexpr std::string_view xsd = "http://www.w3.org/2001/XMLSchema#";

const std::map<std::string, std::string, std::less<>>& well_known_prefixes() {
    static const std::map<std::string, std::string, std::less<>> p = {
        {"rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"},
        {"rdfs", "http://www.w3.org/2000/01/rdf-schema#"},
        {"xsd", std::string(xsd)},
        {"owl", "http://www.w3.org/2002/07/owl#"},
        {"schema", "http://schema.org/"},
        {"dc", "http://purl.org/dc/terms/"},
        {"dcterms", "http://purl.org/dc/terms/"},
        {"geo", "http://www.w3.org/2003/01/geo/wgs84_pos#"},
    };
    return p;
}

struct Term {
    enum class Kind { iri, blank, literal } kind = Kind::iri;
    std::string value;
    std::string datatype;
    std::size_t offset = 0;

    bool is_node() const { return kind != Kind::literal; }
    std::string node_key() const { return (kind == Kind::blank ? "_:" : "") + value; }
};

struct Triple {
    Term subject;
    std::string predicate;
    Term object;
};

class TurtleReader {
public:
    TurtleReader(std::string_view doc, RdfSyntax syntax) : doc_(doc), turtle_(syntax == RdfSyntax::turtle) {}

    std::vector<Triple> read() {
        for (;;) {
            skip_space();
            if (at_end()) break;
            if (peek() == '@' || starts_with_keyword("PREFIX") || starts_with_keyword("BASE") ||
                starts_with_keyword("@base")) {
                directive();
                continue;
            }
            statement();
        }
        return std::move(triples_);
    }

    const std::map<std::string, std::string, std::less<>>& prefixes() const { return prefixes_; }

private:
    [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_, what); }

    bool at_end() const { return pos_ >= doc_.size(); }
    char peek() const { return at_end() ? '\0' : doc_[pos_]; }

    bool starts_with_keyword(std::string_view kw) const {
        if (doc_.substr(pos_, kw.size()) != kw) return false;
        const std::size_t after = pos_ + kw.size();
        return after < doc_.size() && (doc_[after] == ' ' || doc_[after] == '\t');
    }

    void skip_space() {
        while (!at_end()) {
            const char c = peek();
            if (c == '#') {
                while (!at_end() && peek() != '\n') ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos_;
            } else {
                break;
            }
        }
    }

    void expect(char c) {
        skip_space();
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void require_turtle(const char* what) const {
        if (!turtle_) fail(std::string(what) + " is not allowed in N-Triples");
    }

    void directive() {
        require_turtle("a directive");
        const std::size_t start = pos_;
        const bool sparql = peek() != '@';
        std::string kw;
        if (!sparql) ++pos_;
        while (!at_end() && std::isalpha(static_cast<unsigned char>(peek()))) kw.push_back(peek()), ++pos_;
        std::string lower = kw;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        if (lower != "prefix") {
            pos_ = start;
            fail("unsupported directive '" + kw + "'");
        }
        skip_space();
        std::string name;
        while (!at_end() && peek() != ':') {
            const char c = peek();
            if (c == ' ' || c == '\n' || c == '\t') fail("bad prefix name");
            name.push_back(c);
            ++pos_;
        }
        expect(':');
        skip_space();
        if (peek() != '<') fail("expected IRI in prefix directive");
        prefixes_[name] = iri_ref();
        if (!sparql) expect('.');
    }

    void statement() {
        Term subject = subject_term();
        skip_space();
        if (subject.kind == Term::Kind::blank && subject.value.rfind("anon", 0) == 0 && peek() == '.') {
            ++pos_;
            return;
        }
        predicate_object_list(subject);
        expect('.');
    }

    void predicate_object_list(const Term& subject) {
        for (;;) {
            skip_space();
            const std::string predicate = predicate_iri();
            for (;;) {
                Term object = object_term();
                triples_.push_back({subject, predicate, std::move(object)});
                skip_space();
                if (peek() != ',') break;
                require_turtle("','");
                ++pos_;
            }
            skip_space();
            if (peek() != ';') break;
            require_turtle("';'");
            while (peek() == ';') {
                ++pos_;
                skip_space();
            }
            if (peek() == '.' || peek() == ']') break;
        }
    }

    Term subject_term() {
        skip_space();
        if (peek() == '<') return {Term::Kind::iri, iri_ref(), {}, pos_};
        if (peek() == '_') return blank_label();
        if (peek() == '[') return anon_node();
        if (peek() == '"') fail("literal in subject position");
        require_turtle("a prefixed name");
        return {Term::Kind::iri, prefixed_name(), {}, pos_};
    }

    std::string predicate_iri() {
        skip_space();
        if (peek() == '<') return iri_ref();
        if (peek() == 'a' && pos_ + 1 < doc_.size() &&
            (doc_[pos_ + 1] == ' ' || doc_[pos_ + 1] == '\t' || doc_[pos_ + 1] == '\n')) {
            require_turtle("'a'");
            ++pos_;
            return std::string(rdf_type);
        }
        require_turtle("a prefixed name");
        return prefixed_name();
    }

    Term object_term() {
        skip_space();
        const std::size_t at = pos_;
        const char c = peek();
        if (c == '<') return {Term::Kind::iri, iri_ref(), {}, at};
        if (c == '_') return blank_label();
        if (c == '"') return literal();
        if (c == '[') return anon_node();
        if (c == '(') fail("collections are not supported");
        if (c == '\'') fail("single-quoted literals are not supported");
        require_turtle("an abbreviated term");
        if (c == '+' || c == '-' || c == '.' || std::isdigit(static_cast<unsigned char>(c))) return number();
        if (doc_.substr(pos_, 4) == "true" || doc_.substr(pos_, 5) == "false") {
            const bool t = doc_.substr(pos_, 4) == "true";
            pos_ += t ? 4 : 5;
            return {Term::Kind::literal, t ? "true" : "false", std::string(xsd) + "boolean", at};
        }
        return {Term::Kind::iri, prefixed_name(), {}, at};
    }

    Term anon_node() {
        require_turtle("'['");
        const std::size_t at = pos_;
        ++pos_;
        Term node{Term::Kind::blank, "anon" + std::to_string(++anon_), {}, at};
        skip_space();
        if (peek() != ']') predicate_object_list(node);
        expect(']');
        return node;
    }

    Term blank_label() {
        const std::size_t at = pos_;
        if (doc_.substr(pos_, 2) != "_:") fail("expected blank node label");
        pos_ += 2;
        std::string label;
        while (!at_end()) {
            const char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.') {
                label.push_back(c);
                ++pos_;
            } else {
                break;
            }
        }
        while (!label.empty() && label.back() == '.') {
            label.pop_back();
            --pos_;
        }
        if (label.empty()) fail("empty blank node label");
        return {Term::Kind::blank, "b:" + label, {}, at};
    }

    std::string iri_ref() {
        if (peek() != '<') fail("expected '<'");
        ++pos_;
        std::string iri;
        for (;;) {
            if (at_end()) fail("unterminated IRI");
            const char c = doc_[pos_++];
            if (c == '>') break;
            if (c == ' ' || c == '\n' || c == '"' || c == '<') fail("invalid character in IRI");
            if (c == '\\') {
                iri += unicode_escape();
                continue;
            }
            iri.push_back(c);
        }
        return iri;
    }

    std::string prefixed_name() {
        const std::size_t at = pos_;
        std::string prefix;
        while (!at_end() && peek() != ':') {
            const char c = peek();
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
                fail("expected a term");
            }
            prefix.push_back(c);
            ++pos_;
        }
        if (at_end()) fail("expected ':' in prefixed name");
        ++pos_;
        std::string local;
        while (!at_end()) {
            const char c = peek();
            const auto uc = static_cast<unsigned char>(c);
            if (std::isalnum(uc) || uc >= 0x80 || c == '_' || c == '-' || c == '.' || c == ':' || c == '%') {
                local.push_back(c);
                ++pos_;
            } else if (c == '\\' && pos_ + 1 < doc_.size()) {
                local.push_back(doc_[pos_ + 1]);
                pos_ += 2;
            } else {
                break;
            }
        }
        while (!local.empty() && local.back() == '.') {
            local.pop_back();
            --pos_;
        }
        const auto it = prefixes_.find(prefix);
        if (it == prefixes_.end()) {
            pos_ = at;
            fail("undeclared prefix '" + prefix + "'");
        }
        return it->second + local;
    }

    std::string unicode_escape() {
        if (at_end()) fail("dangling escape");
        const char kind = doc_[pos_++];
        std::size_t digits = kind == 'u' ? 4 : kind == 'U' ? 8 : 0;
        if (digits == 0) fail("invalid escape in IRI");
        if (pos_ + digits > doc_.size()) fail("truncated unicode escape");
        char32_t cp = 0;
        for (std::size_t k = 0; k < digits; ++k) {
            const char h = doc_[pos_++];
            cp <<= 4;
            if (h >= '0' && h <= '9') cp |= static_cast<char32_t>(h - '0');
            else if (h >= 'a' && h <= 'f') cp |= static_cast<char32_t>(h - 'a' + 10);
            else if (h >= 'A' && h <= 'F') cp |= static_cast<char32_t>(h - 'A' + 10);
            else fail("bad hex digit in unicode escape");
        }
        return text::encode_utf8(std::u32string_view(&cp, 1));
    }

    Term literal() {
        const std::size_t at = pos_;
        if (doc_.substr(pos_, 3) == "\"\"\"") fail("long string literals are not supported");
        ++pos_;
        std::string value;
        for (;;) {
            if (at_end()) fail("unterminated string literal");
            const char c = doc_[pos_++];
            if (c == '"') break;
            if (c == '\n') fail("newline in string literal");
            if (c == '\\') {
                if (at_end()) fail("dangling escape");
                const char e = doc_[pos_];
                switch (e) {
                    case 't': value.push_back('\t'); ++pos_; break;
                    case 'n': value.push_back('\n'); ++pos_; break;
                    case 'r': value.push_back('\r'); ++pos_; break;
                    case 'b': value.push_back('\b'); ++pos_; break;
                    case 'f': value.push_back('\f'); ++pos_; break;
                    case '"': value.push_back('"'); ++pos_; break;
                    case '\'': value.push_back('\''); ++pos_; break;
                    case '\\': value.push_back('\\'); ++pos_; break;
                    case 'u':
                    case 'U': value += unicode_escape(); break;
                    default: fail("invalid escape in string literal");
                }
                continue;
            }
            value.push_back(c);
        }
        Term t{Term::Kind::literal, std::move(value), {}, at};
        if (peek() == '@') {
            ++pos_;
            while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '-')) ++pos_;
        } else if (doc_.substr(pos_, 2) == "^^") {
            pos_ += 2;
            if (peek() == '<') {
                t.datatype = iri_ref();
            } else {
                require_turtle("a prefixed datatype");
                t.datatype = prefixed_name();
            }
        }
        return t;
    }

    Term number() {
        const std::size_t at = pos_;
        std::string s;
        if (peek() == '+' || peek() == '-') s.push_back(doc_[pos_++]);
        bool decimal = false;
        bool exponent = false;
        while (!at_end()) {
            const char c = peek();
            if (std::isdigit(static_cast<unsigned char>(c))) {
                s.push_back(c);
                ++pos_;
            } else if (c == '.' && !decimal && !exponent && pos_ + 1 < doc_.size() &&
                       std::isdigit(static_cast<unsigned char>(doc_[pos_ + 1]))) {
                decimal = true;
                s.push_back(c);
                ++pos_;
            } else if ((c == 'e' || c == 'E') && !exponent) {
                exponent = true;
                s.push_back(c);
                ++pos_;
                if (peek() == '+' || peek() == '-') s.push_back(doc_[pos_++]);
            } else {
                break;
            }
        }
        if (s.empty() || s == "+" || s == "-") fail("malformed number");
        const char* type = exponent ? "double" : decimal ? "decimal" : "integer";
        return {Term::Kind::literal, s, std::string(xsd) + type, at};
    }

    std::string_view doc_;
    bool turtle_;
    std::size_t pos_ = 0;
    std::size_t anon_ = 0;
    std::map<std::string, std::string, std::less<>> prefixes_;
    std::vector<Triple> triples_;
};

bool numeric_datatype(std::string_view dt) {
    if (dt.rfind(xsd, 0) != 0) return false;
    const auto local = dt.substr(xsd.size());
    return local == "double" || local == "decimal" || local == "integer" || local == "float" ||
           local == "int" || local == "long";
}

std::string local_name(std::string_view iri) {
    const auto cut = iri.find_last_of("#/:");
    return std::string(cut == std::string_view::npos ? iri : iri.substr(cut + 1));
}

}  // namespace

Dataset parse_rdf(std::istream& in, RdfSyntax syntax, const SchemaMapping& mapping,
                  const IngestOptions& options, IngestDiagnostics* diag) {
    mapping.validate();
    const std::string doc((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    TurtleReader reader(doc, syntax);
    const std::vector<Triple> triples = reader.read();

    // Alias keys may be full IRIs or prefixed names; expand the latter with the
    // document's, the mapping's and the well-known prefixes.
    std::unordered_map<std::string, std::string> predicate_alias;
    const auto expand = [&](const std::string& key) -> std::optional<std::string> {
        const auto colon = key.find(':');
        if (colon == std::string::npos) return std::nullopt;
        const std::string prefix = key.substr(0, colon);
        for (const auto* table : {&reader.prefixes(), &mapping.prefixes, &well_known_prefixes()}) {
            const auto it = table->find(prefix);
            if (it != table->end()) return it->second + key.substr(colon + 1);
        }
        return std::nullopt;
    };
    for (const auto& [from, to] : mapping.aliases) {
        predicate_alias.emplace(from, to);
        if (auto full = expand(from)) predicate_alias.emplace(*full, to);
    }

    std::vector<std::string> subject_order;
    std::unordered_map<std::string, std::vector<const Triple*>> by_subject;
    for (const auto& t : triples) {
        const std::string key = t.subject.node_key();
        auto [it, inserted] = by_subject.try_emplace(key);
        if (inserted) subject_order.push_back(key);
        it->second.push_back(&t);
    }

    const auto lookup = [&](const std::string& predicate) -> std::optional<std::string> {
        const auto it = predicate_alias.find(predicate);
        if (it == predicate_alias.end()) return std::nullopt;
        return it->second;
    };
    const auto flattened = [&](const Triple& t, const std::optional<std::string>& canonical) {
        if (!t.object.is_node() || !by_subject.count(t.object.node_key())) return false;
        return t.object.kind == Term::Kind::blank || (canonical && mapping.flatten.count(*canonical));
    };

    std::unordered_set<std::string> nested;
    for (const auto& t : triples) {
        if (t.predicate == rdf_type) continue;
        if (flattened(t, lookup(t.predicate))) nested.insert(t.object.node_key());
    }

    Dataset ds;
    ds.id = options.dataset_id;
    ds.source_label = options.source;
    const Provenance prov{options.source, options.ingested};

    const auto unmapped = [&](const std::string& predicate) {
        if (diag) ++diag->unmapped_predicates[predicate];
    };

    for (const auto& key : subject_order) {
        const auto& list = by_subject[key];
        if (list.front()->subject.kind != Term::Kind::iri || nested.count(key)) continue;

        std::string_view subject = list.front()->subject.value;
        // Undo the URN wrapping that write_ntriples applies to opaque ids.
        if (subject.starts_with(opaque_prefix) && subject.size() > opaque_prefix.size()) {
            subject.remove_prefix(opaque_prefix.size());
        }
        Entity e{EntityId(std::string(subject)), options.default_type, {}};
        bool typed = false;
        EntityBuilder builder(mapping, prov, std::nullopt);

        const auto add = [&](const std::string& canonical, const Term& object) {
            TypeHint hint = hint_for(mapping, canonical);
            if (hint == TypeHint::text) {
                if (object.kind == Term::Kind::iri) hint = TypeHint::url;
                else if (numeric_datatype(object.datatype)) hint = TypeHint::number;
            }
            try {
                builder.add(canonical, hint, object.value);
            } catch (const ValidationError& err) {
                if (!diag) throw ParseError(object.offset, err.what());
                diag->rejected.push_back({0, "byte " + std::to_string(object.offset) + ": " + err.what()});
            }
        };

        for (const Triple* t : list) {
            if (t->predicate == rdf_type) {
                if (!typed && t->object.kind == Term::Kind::iri) {
                    e.type = local_name(t->object.value);
                    typed = true;
                }
                continue;
            }
            const auto canonical = lookup(t->predicate);
            if (flattened(*t, canonical)) {
                for (const Triple* inner : by_subject[t->object.node_key()]) {
                    if (inner->predicate == rdf_type) continue;
                    if (inner->object.is_node() && by_subject.count(inner->object.node_key())) {
                        if (diag) {
                            ++diag->skipped_triples;
                            diag->warnings.push_back("unsupported nesting below '" + e.id.str() +
                                                     "' via <" + inner->predicate + ">");
                        }
                        spdlog::warn("rdf: skipping triple nested more than one level below {}", e.id.str());
                        continue;
                    }
                    const auto inner_canonical = lookup(inner->predicate);
                    if (!inner_canonical) {
                        unmapped(inner->predicate);
                        continue;
                    }
                    add(*inner_canonical, inner->object);
                }
                continue;
            }
            if (!canonical) {
                unmapped(t->predicate);
                continue;
            }
            if (t->object.kind == Term::Kind::blank) continue;
            add(*canonical, t->object);
        }

        std::vector<std::string> warnings;
        try {
            e.properties = builder.finish(&warnings, e.id.str());
        } catch (const ValidationError& err) {
            if (!diag) throw ParseError(list.front()->subject.offset, err.what());
            diag->rejected.push_back({0, e.id.str() + ": " + err.what()});
            continue;
        }
        if (diag) diag->warnings.insert(diag->warnings.end(), warnings.begin(), warnings.end());
        if (e.properties.empty()) {
            if (diag) diag->warnings.push_back("subject '" + e.id.str() + "' has no mapped properties");
            continue;
        }
        ds.entities.push_back(std::move(e));
    }
    if (diag && diag->unmapped_total() > 0) {
        spdlog::info("rdf: dropped {} triple(s) with unmapped predicates", diag->unmapped_total());
    }
    return ds;
}

Dataset apply_mapping(const Dataset& dataset, const SchemaMapping& mapping) {
    Dataset out = dataset;
    for (auto& e : out.entities) {
        PropertyMap mapped;
        for (auto& [key, list] : e.properties) {
            auto& slot = mapped[mapping.canonical(key)];
            slot.insert(slot.end(), list.begin(), list.end());
        }
        e.properties = std::move(mapped);
    }
    return out;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_csv(const Dataset& dataset, std::ostream& out) {
    struct Slot {
        std::string name;
        ValueKind kind;
        std::size_t count;
    };
    std::vector<Slot> slots;
    bool any_source = false;
    bool any_ingested = false;
    bool any_quality = false;
    for (const auto& e : dataset.entities) {
        for (const auto& [name, list] : e.properties) {
            auto it = std::find_if(slots.begin(), slots.end(), [&](const Slot& s) { return s.name == name; });
            if (it == slots.end()) {
                slots.push_back({name, list.front().kind(), 0});
                it = std::prev(slots.end());
            }
            it->count = std::max(it->count, list.size());
            for (const auto& v : list) {
                any_source = any_source || !v.provenance().source.empty();
                any_ingested = any_ingested || v.provenance().ingested != 0;
                any_quality = any_quality || v.quality().has_value();
            }
        }
    }

    std::vector<std::string> header = {"id", "type"};
    if (any_source) header.push_back("@source");
    if (any_ingested) header.push_back("@ingested");
    if (any_quality) header.push_back("@quality");
    for (const auto& s : slots) {
        for (std::size_t i = 0; i < s.count; ++i) {
            switch (s.kind) {
                case ValueKind::geopoint:
                    header.push_back(s.name + "@lat");
                    header.push_back(s.name + "@lon");
                    break;
                case ValueKind::text: header.push_back(s.name); break;
                default: header.push_back(s.name + "@" + std::string(to_string(s.kind))); break;
            }
        }
    }
    const auto write_row = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) out << ',';
            out << csv_escape(fields[i]);
        }
        out << '\n';
    };
    write_row(header);

    for (const auto& e : dataset.entities) {
        std::vector<std::string> row = {e.id.str(), e.type};
        const PropertyValue* first = nullptr;
        for (const auto& [name, list] : e.properties) {
            if (!list.empty()) {
                first = &list.front();
                break;
            }
        }
        if (any_source) row.push_back(first ? first->provenance().source : "");
        if (any_ingested) row.push_back(first ? format_timestamp(first->provenance().ingested) : "");
        if (any_quality) {
            row.push_back(first && first->quality() ? format_number(*first->quality()) : "");
        }
        for (const auto& s : slots) {
            const auto values = e.values(s.name);
            for (std::size_t i = 0; i < s.count; ++i) {
                if (s.kind == ValueKind::geopoint) {
                    if (i < values.size() && values[i].kind() == ValueKind::geopoint) {
                        row.push_back(format_number(values[i].as_geo().lat));
                        row.push_back(format_number(values[i].as_geo().lon));
                    } else {
                        row.emplace_back();
                        row.emplace_back();
                    }
                } else {
                    row.push_back(i < values.size() ? values[i].raw() : "");
                }
            }
        }
        write_row(row);
    }
}

namespace {

std::string iri_escape(std::string_view id) {
    static constexpr std::string_view bad = " <>\"{}|^`\\\t\n\r";
    std::string out;
    for (char c : id) {
        if (bad.find(c) != std::string_view::npos) {
            char buf[4];
            std::snprintf(buf, sizeof buf, "%%%02X", static_cast<unsigned char>(c));
            out += buf;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

// Opaque ids (no scheme) become URNs so that the subject is a valid IRI.
std::string subject_iri(std::string_view id) {
    std::string out = iri_escape(id);
    if (out.find(':') == std::string::npos) out = std::string(opaque_prefix) + out;
    return out;
}

std::string nt_literal(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default: out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

}  // namespace

void write_ntriples(const Dataset& dataset, std::ostream& out, std::string_view vocab) {
    std::size_t blank = 0;
    const std::string v(vocab);
    for (const auto& e : dataset.entities) {
        const std::string s = "<" + subject_iri(e.id.str()) + ">";
        if (!e.type.empty()) out << s << " <" << rdf_type << "> <" << v << iri_escape(e.type) << "> .\n";
        for (const auto& [name, list] : e.properties) {
            const std::string p = "<" + v + iri_escape(name) + ">";
            for (const auto& value : list) {
                switch (value.kind()) {
                    case ValueKind::geopoint: {
                        const std::string b = "_:g" + std::to_string(++blank);
                        out << s << ' ' << p << ' ' << b << " .\n";
                        out << b << " <" << v << "latitude> \"" << format_number(value.as_geo().lat)
                            << "\"^^<" << xsd << "double> .\n";
                        out << b << " <" << v << "longitude> \"" << format_number(value.as_geo().lon)
                            << "\"^^<" << xsd << "double> .\n";
                        break;
                    }
                    case ValueKind::number:
                        out << s << ' ' << p << ' ' << nt_literal(value.raw()) << "^^<" << xsd
                            << "double> .\n";
                        break;
                    case ValueKind::timestamp:
                        out << s << ' ' << p << ' ' << nt_literal(value.raw()) << "^^<" << xsd
                            << "dateTime> .\n";
                        break;
                    case ValueKind::url:
                        if (value.raw().find(':') != std::string::npos &&
                            value.raw().find_first_of(" <>\"") == std::string::npos) {
                            out << s << ' ' << p << " <" << value.raw() << "> .\n";
                        } else {
                            out << s << ' ' << p << ' ' << nt_literal(value.raw()) << " .\n";
                        }
                        break;
                    case ValueKind::text:
                        out << s << ' ' << p << ' ' << nt_literal(value.raw()) << " .\n";
                        break;
                }
            }
        }
    }
}

}  // namespace kgdd
