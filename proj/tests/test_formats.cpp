#include "doctest.h"

#include <sstream>

#include "kgdd/error.hpp"
#include "kgdd/formats.hpp"
#include "kgdd/synthetic.hpp"
#include "support.hpp"

using namespace kgdd;
using namespace kgdd::testing;

TEST_SUITE("formats") {

TEST_CASE("results round trip") {
    const auto data = generate_synthetic({});
    auto c = name_geo_config();
    const auto r = run_dedup(data.dataset, c, {0.5, {}});
    REQUIRE(!r.assertions.empty());
    std::stringstream s;
    write_results(r.assertions, s);
    const auto back = read_results(s);
    REQUIRE(back.size() == r.assertions.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].pair == r.assertions[i].pair);
        CHECK(back[i].sim == r.assertions[i].sim);
        CHECK(back[i].per_property == r.assertions[i].per_property);
        CHECK(back[i].verdict == r.assertions[i].verdict);
    }
    const auto j = to_json(r.assertions.front());
    for (const char* key : {"idA", "idB", "sim", "perProperty", "verdict"}) CHECK(j.contains(key));
}

TEST_CASE("malformed result lines") {
    std::stringstream s(R"({"idA":"a","idB":"b","sim":0.9,"perProperty":{},"verdict":"unlabeled"}
{"idA":"a","idB":"a","sim":0.9}
)");
    try {
        read_results(s);
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find('2') != std::string::npos);
    }
    std::stringstream range(R"({"idA":"a","idB":"b","sim":1.5,"perProperty":{},"verdict":"unlabeled"})");
    CHECK_THROWS_AS(read_results(range), DataError);
}

TEST_CASE("gold CSV round trip keeps history") {
    GoldStandard g;
    g = submit_label(g, id("a"), id("b"), Verdict::same, "alice", 100);
    g = submit_label(g, id("c,1"), id("d\"2"), Verdict::related, "bob", 200);
    g = submit_label(g, id("a"), id("b"), Verdict::different, "carol", 300);
    std::stringstream s;
    write_gold(g, s);
    CHECK(s.str().rfind(gold_header(), 0) == 0);
    const auto back = read_gold(s);
    CHECK(back == g);
    CHECK(back.history().size() == 3);
}

TEST_CASE("gold CSV errors carry the line") {
    std::stringstream bad_verdict(gold_header() + "\na,b,maybe,x,0\n");
    try {
        read_gold(bad_verdict);
        FAIL("expected an error");
    } catch (const ValueError& e) {
        CHECK(e.line() == 2);
    }
    std::stringstream short_row(gold_header() + "\na,b\n");
    CHECK_THROWS_AS(read_gold(short_row), RowError);
    std::stringstream self(gold_header() + "\na,a,same,x,0\n");
    CHECK_THROWS_AS(read_gold(self), DataError);
}

TEST_CASE("values and fused entities round trip") {
    const std::vector<PropertyValue> values{
        PropertyValue::text("Hugo's", {"osm", 5}, 0.7), PropertyValue::url("https://hugos.at"),
        PropertyValue::number(47.25), PropertyValue::geo({47.1, 11.2}, {"tourism", 9}),
        PropertyValue::timestamp(std::int64_t{1580472000})};
    for (const auto& v : values) CHECK(value_from_json(to_json(v)) == v);

    const std::vector<Entity> es{entity("a", {{"name", {txt("X")}}, {"geo", {geo(1, 2)}}}),
                                 entity("b", {{"name", {txt("Y")}}})};
    FusionPolicy policy;
    policy.unique = {"name"};
    EquivalenceSet cls{{id("a"), id("b")}};
    const auto fused = fuse_class(cls, es, policy);
    CHECK(fused_from_json(to_json(fused)) == fused);
    const std::vector<FusedEntity> all{fused};
    std::stringstream log;
    write_decisions(all, log);
    std::size_t lines = 0;
    for (std::string line; std::getline(log, line);) {
        const auto j = Json::parse(line);
        CHECK(j.at("entity") == fused.id.str());
        ++lines;
    }
    CHECK(lines == fused.decisions.size());
}

TEST_CASE("text tables") {
    const std::vector<std::pair<std::string, EvalReport>> rows{{"0.9", make_report(7, 1, 16)},
                                                               {"0.8", make_report(9, 3, 14)}};
    const auto t = eval_table(rows);
    CHECK(t.find("0.3043") != std::string::npos);
    CHECK(std::count(t.begin(), t.end(), '\n') >= 3);
}

}
