#include "doctest.h"

#include <sstream>

#include "kgdd/error.hpp"
#include "kgdd/ingest.hpp"
#include "kgdd/synthetic.hpp"
#include "support.hpp"

using namespace kgdd;
using namespace kgdd::testing;

namespace {

Dataset csv(const std::string& body, const SchemaMapping& m = SchemaMapping::standard(),
            IngestDiagnostics* diag = nullptr) {
    std::istringstream in(body);
    return parse_csv(in, m, {}, diag);
}

Dataset rdf(const std::string& body, RdfSyntax syntax, const SchemaMapping& m = SchemaMapping::standard(),
            IngestDiagnostics* diag = nullptr) {
    std::istringstream in(body);
    return parse_rdf(in, syntax, m, {}, diag);
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("csv row with the five restaurant properties") {
    const auto ds = csv(
        "id,name,url,streetAddress,latitude,longitude\n"
        "r1,Hugo's Bar,http://hugos.at,Herrenanger 11,47.040537,10.609275\n");
    REQUIRE(ds.entities.size() == 1);
    const Entity& e = ds.entities[0];
    CHECK(e.properties.size() == 4);
    REQUIRE(e.has("geo"));
    CHECK(e.values("geo")[0].as_geo() == GeoPoint{47.040537, 10.609275});
    CHECK(e.values("url")[0].kind() == ValueKind::url);
    CHECK(e.values("name")[0].raw() == "Hugo's Bar");
}

TEST_CASE("csv geo sentinel and empty cells") {
    const auto ds = csv("id,name,telephone,latitude,longitude\nr1,X,,0,0\n");
    REQUIRE(ds.entities.size() == 1);
    CHECK_FALSE(ds.entities[0].has("geo"));
    CHECK_FALSE(ds.entities[0].has("telephone"));

    SchemaMapping keep = SchemaMapping::standard();
    keep.geo_sentinel = false;
    CHECK(csv("id,name,latitude,longitude\nr1,X,0,0\n", keep).entities[0].has("geo"));
}

TEST_CASE("csv empty file after header") {
    CHECK(csv("id,name\n").entities.empty());
}

TEST_CASE("csv errors carry positions") {
    CHECK_THROWS_AS(csv("name,url\nX,http://x\n"), SchemaError);
    try {
        csv("id,name\nr1,A\nr2,B,extra\n");
        FAIL("expected a row error");
    } catch (const RowError& e) {
        CHECK(e.line() == 3);
    }
    try {
        csv("id,name,latitude,longitude\nr1,A,north,10\n");
        FAIL("expected a value error");
    } catch (const ValueError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 3);
    }
}

TEST_CASE("csv diagnostics collect rejected rows") {
    IngestDiagnostics diag;
    const auto ds = csv("id,name\nr1,A\nr2,B,extra\nr3,C\n", SchemaMapping::standard(), &diag);
    CHECK(ds.entities.size() == 2);
    REQUIRE(diag.rejected.size() == 1);
    CHECK(diag.rejected[0].line == 3);
}

TEST_CASE("csv quoting and multi-line fields") {
    const auto ds = csv("id,name,streetAddress\nr1,\"Bar, \"\"Hugo's\"\"\",\"Line 1\nLine 2\"\nr2,Y,Z\n");
    REQUIRE(ds.entities.size() == 2);
    CHECK(ds.entities[0].values("name")[0].raw() == "Bar, \"Hugo's\"");
    CHECK(ds.entities[0].values("streetAddress")[0].raw() == "Line 1\nLine 2");
}

TEST_CASE("csv repeated columns hold several values") {
    const auto ds = csv("id,name,name\nr1,A,B\n");
    REQUIRE(ds.entities[0].values("name").size() == 2);
}

TEST_CASE("csv round trip on the synthetic benchmark") {
    SyntheticSpec spec;
    spec.entity_count = 120;
    spec.duplicate_count = 10;
    spec.seed = 5;
    const auto data = generate_synthetic(spec);
    for (const Dataset* d : {&data.dataset, &data.raw}) {
        std::stringstream s;
        write_csv(*d, s);
        SchemaMapping identity;
        identity.geo_sentinel = false;
        IngestOptions options;
        options.dataset_id = d->id;
        auto back = parse_csv(s, identity, options);
        back.source_label = d->source_label;
        CHECK(back == *d);
    }
}

TEST_CASE("ntriples single triple and unmapped predicates") {
    IngestDiagnostics diag;
    const auto ds = rdf(
        "<http://ex.org/s> <http://schema.org/name> \"Hugo's Bar\" .\n"
        "<http://ex.org/s> <http://ex.org/odd> \"x\" .\n",
        RdfSyntax::ntriples, SchemaMapping::standard(), &diag);
    REQUIRE(ds.entities.size() == 1);
    CHECK(ds.entities[0].id == id("http://ex.org/s"));
    CHECK(ds.entities[0].values("name")[0].raw() == "Hugo's Bar");
    CHECK(diag.unmapped_total() == 1);
}

TEST_CASE("turtle postal address node is flattened") {
    const auto ds = rdf(R"(@prefix schema: <http://schema.org/> .
@prefix ex: <http://ex.org/> .
ex:r1 a schema:Restaurant ;
    schema:name "Hugo's" ;
    schema:address [ a schema:PostalAddress ; schema:streetAddress "Herrenanger 11" ] ;
    schema:geo [ schema:latitude 47.040537 ; schema:longitude 10.609275 ] .
)",
                        RdfSyntax::turtle);
    REQUIRE(ds.entities.size() == 1);
    const Entity& e = ds.entities[0];
    CHECK(e.type == "Restaurant");
    CHECK(e.values("streetAddress")[0].raw() == "Herrenanger 11");
    REQUIRE(e.has("geo"));
    CHECK(e.values("geo")[0].as_geo() == GeoPoint{47.040537, 10.609275});
}

TEST_CASE("turtle: two aliased predicates give two values") {
    const auto ds = rdf(R"(@prefix schema: <http://schema.org/> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
<http://ex.org/r1> rdfs:label "Hotel Seespitz" ; schema:name "Seespitz" .
)",
                        RdfSyntax::turtle);
    REQUIRE(ds.entities.size() == 1);
    CHECK(ds.entities[0].values("name").size() == 2);
}

TEST_CASE("rdf syntax errors report a byte offset") {
    try {
        rdf("<http://ex.org/s> <http://schema.org/name> \"open .\n", RdfSyntax::ntriples);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.offset() > 0);
    }
    CHECK_THROWS_AS(rdf("@base <http://ex.org/> .\n", RdfSyntax::turtle), ParseError);
}

TEST_CASE("ntriples writer round trip") {
    const auto d = dataset({entity("http://ex.org/a", {{"name", {txt("A \"quoted\"")}}, {"geo", {geo(47.1, 10.5)}}}),
                            entity("http://ex.org/b", {{"url", {PropertyValue::url("http://b.at")}}})});
    std::stringstream s;
    write_ntriples(d, s);
    SchemaMapping m = SchemaMapping::standard();
    const auto back = rdf(s.str(), RdfSyntax::ntriples, m);
    REQUIRE(back.entities.size() == 2);
    CHECK(back.find(id("http://ex.org/a"))->values("name")[0].raw() == "A \"quoted\"");
    CHECK(back.find(id("http://ex.org/a"))->values("geo")[0].as_geo() == GeoPoint{47.1, 10.5});
    CHECK(back.find(id("http://ex.org/b"))->values("url")[0].raw() == "http://b.at");
}

TEST_CASE("apply_mapping") {
    SchemaMapping m;
    m.aliases = {{"rdfs:label", "name"}, {"title", "name"}};
    SUBCASE("rename") {
        const auto out = apply_mapping(dataset({entity("a", {{"rdfs:label", {txt("x")}}})}), m);
        CHECK(out.entities[0].values("name")[0].raw() == "x");
        CHECK_FALSE(out.entities[0].has("rdfs:label"));
    }
    SUBCASE("merge keeps source key order") {
        const auto out = apply_mapping(dataset({entity("a", {{"title", {txt("a")}}, {"name", {txt("b")}}})}), m);
        const auto vs = out.entities[0].values("name");
        REQUIRE(vs.size() == 2);
        CHECK(vs[0].raw() == "a");
        CHECK(vs[1].raw() == "b");
    }
    SUBCASE("identity and idempotence") {
        const auto d = dataset({entity("a", {{"name", {txt("x")}}, {"url", {PropertyValue::url("http://x")}}})});
        CHECK(apply_mapping(d, SchemaMapping{}) == d);
        const auto once = apply_mapping(dataset({entity("a", {{"title", {txt("a")}}, {"name", {txt("b")}}})}), m);
        CHECK(apply_mapping(once, m) == once);
    }
}

TEST_CASE("schema mapping validation") {
    SchemaMapping m;
    m.aliases = {{"title", ""}};
    CHECK_THROWS_AS(m.validate(), ConfigError);
}

}

TEST_SUITE("ingest") {

TEST_CASE("opaque ids survive an ntriples round trip") {
    const auto d = dataset({entity("r0001", {{"name", {txt("A")}}})});
    std::stringstream s;
    write_ntriples(d, s);
    CHECK(s.str().find("<urn:kgdd:entity:r0001>") != std::string::npos);
    const auto back = rdf(s.str(), RdfSyntax::ntriples);
    REQUIRE(back.entities.size() == 1);
    CHECK(back.entities[0].id == id("r0001"));
    CHECK(back.entities[0].type == "Restaurant");
}

}
