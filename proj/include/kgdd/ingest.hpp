#pragma once

// Ingestion of CSV and RDF (N-Triples and a Turtle subset) into datasets,
// with aliasing of source property names to canonical names.
//
// Canonical CSV layout, as produced by write_csv:
//   id,type[,@source][,@ingested][,@quality],<prop>[@<kind>]...
// A column name may carry a kind suffix: "@number", "@url", "@timestamp",
// "@geopoint", or "@lat"/"@lon" for the two halves of a geopoint. Repeated
// column names hold further values of a multi-valued property.
//
// Turtle subset: @prefix/PREFIX directives, IRIs, prefixed names, "a",
// blank node labels and [ ... ] property lists, string literals with
// escapes, language tags and datatypes, bare numbers and booleans, and
// ';' / ',' lists. @base, collections and long strings are rejected.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kgdd/core.hpp"

namespace kgdd {

enum class TypeHint { text, number, url, timestamp, geopoint, latitude, longitude };

std::string_view to_string(TypeHint hint);
std::optional<TypeHint> parse_type_hint(std::string_view s);

struct SchemaMapping {
    // Source property (CSV column, predicate IRI or prefixed name) -> canonical.
    std::map<std::string, std::string, std::less<>> aliases;
    // Canonical property -> kind coercion.
    std::map<std::string, TypeHint, std::less<>> type_hints;
    // Canonical property receiving merged latitude/longitude halves.
    std::string geo_property = "geo";
    // A (0,0) geopoint is treated as missing.
    bool geo_sentinel = true;
    // Canonical properties whose node objects are flattened onto the subject
    // (blank-node objects are always flattened).
    std::set<std::string, std::less<>> flatten = {"address", "geo"};
    // Extra prefixes for expanding prefixed alias keys.
    std::map<std::string, std::string, std::less<>> prefixes;

    // The alias target, or the key itself when it is not aliased.
    std::string canonical(std::string_view source) const;
    // Throws ConfigError for empty canonical names.
    void validate() const;

    // Aliases and hints for the restaurant-style schema: name/title/label,
    // url, streetAddress, addressLocality, telephone, latitude/longitude.
    static SchemaMapping standard();
};

struct Dataset {
    std::string id;
    std::vector<Entity> entities;
    std::string source_label;

    const Entity* find(const EntityId& id) const;
    std::vector<EntityId> ids() const;
    std::set<std::string> property_names() const;
    // Throws ValidationError on duplicate ids or invalid entities.
    void validate() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct IngestOptions {
    std::string dataset_id = "dataset";
    std::string source;           // provenance source id
    std::int64_t ingested = 0;    // provenance timestamp
    std::string id_column = "id";
    std::string type_column = "type";
    std::string default_type = "Thing";
};

struct RowIssue {
    std::size_t line = 0;
    std::string message;
};

struct IngestDiagnostics {
    std::vector<RowIssue> rejected;
    std::map<std::string, std::size_t> unmapped_predicates;
    std::size_t skipped_triples = 0;
    std::vector<std::string> warnings;

    std::size_t unmapped_total() const;
};

/// Parses comma-separated, double-quoted, UTF-8 CSV. Without `diag`, the
/// first bad row throws (RowError / ValueError); with it, bad rows are
/// recorded and skipped. A missing id column throws SchemaError.
Dataset parse_csv(std::istream& in, const SchemaMapping& mapping, const IngestOptions& options = {},
                  IngestDiagnostics* diag = nullptr);

enum class RdfSyntax { ntriples, turtle };

/// Subjects become entities; node objects reached through flattened
/// predicates (and blank nodes) contribute their literal properties to the
/// parent. Syntax errors throw ParseError with the byte offset.
Dataset parse_rdf(std::istream& in, RdfSyntax syntax, const SchemaMapping& mapping,
                  const IngestOptions& options = {}, IngestDiagnostics* diag = nullptr);

/// Renames every property key to its canonical name. Values of keys merged
/// into one name are concatenated in source key order.
Dataset apply_mapping(const Dataset& dataset, const SchemaMapping& mapping);

void write_csv(const Dataset& dataset, std::ostream& out);

/// N-Triples with predicates `vocab + property`. Geopoints become a blank
/// node carrying latitude/longitude.
void write_ntriples(const Dataset& dataset, std::ostream& out,
                    std::string_view vocab = "http://schema.org/");

// CSV field quoting per RFC 4180.
std::string csv_escape(std::string_view field);
// Splits one CSV document into records; line numbers are 1-based and refer to
// the first physical line of each record.
struct CsvRecord {
    std::size_t line = 0;
    std::vector<std::string> fields;
};
std::vector<CsvRecord> read_csv_records(std::istream& in);

}  // namespace kgdd
