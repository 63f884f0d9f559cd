#include "doctest.h"

#include "kgdd/config.hpp"
#include "kgdd/error.hpp"
#include "kgdd/synthetic.hpp"
#include "support.hpp"

using namespace kgdd;
using namespace kgdd::testing;

TEST_SUITE("config") {

TEST_CASE("the shipped restaurant config loads") {
    const auto c = load_run_config(std::filesystem::path(KGDD_SOURCE_DIR) / "configs" / "restaurants.json");
    CHECK(c.match.accept_threshold == 0.85);
    CHECK(c.match.blocking.strategy == BlockingStrategy::standard);
    CHECK(c.match.blocking.keys.size() == 2);
    CHECK(c.match.tree.properties() == std::set<std::string>{"geo", "name"});
    CHECK(c.world == WorldAssumption::closed);
    CHECK(c.fusion.unique.count("name") == 1);
    CHECK(c.ga.population_size == 30);
    CHECK(c.ga.generations == 20);
}

TEST_CASE("defaults for an empty document") {
    const auto c = parse_run_config(R"({"match": {"tree": {"property": "name"}}})");
    CHECK(c.world == WorldAssumption::open);
    CHECK(c.sweep == std::vector<double>{0.9, 0.8});
    CHECK(c.ga_default_space);
    CHECK(c.fusion.default_rule.function == FusionFunction::union_values);
}

TEST_CASE("documents round trip") {
    RunConfig c;
    c.match = name_geo_config();
    c.match.blocking = {BlockingStrategy::sorted_neighborhood, {KeyFunction::name_prefix("name", 4)}, 7, true};
    c.fusion.per_property["geo"] = {FusionFunction::average, {}};
    c.fusion.per_property["phone"] = {FusionFunction::prefer_source, {{"sources", "a,b"}}};
    c.fusion.unique = {"name"};
    c.fusion.quality_threshold = 0.25;
    c.world = WorldAssumption::closed;
    c.sweep = {0.95, 0.5};
    c.ga.seed = 99;
    c.ga.mutation_rate = 0.3;
    const auto again = parse_run_config(dump_run_config(c));
    CHECK(again.match.tree == c.match.tree);
    CHECK(again.match.accept_threshold == c.match.accept_threshold);
    CHECK(again.match.min_comparable_leaves == c.match.min_comparable_leaves);
    CHECK(to_json(again.match.blocking) == to_json(c.match.blocking));
    CHECK(again.fusion.per_property == c.fusion.per_property);
    CHECK(again.fusion.unique == c.fusion.unique);
    CHECK(again.fusion.quality_threshold == 0.25);
    CHECK(again.world == WorldAssumption::closed);
    CHECK(again.sweep == c.sweep);
    CHECK(again.ga.seed == 99);
    CHECK(again.ga.mutation_rate == 0.3);
    CHECK(dump_run_config(again) == dump_run_config(c));
}

TEST_CASE("comparator trees from JSON") {
    const auto t = tree_from_json(Json::parse(R"({"op": "WAVG", "children": [
        {"property": "name", "cleaners": ["lowercase"], "comparator": "jaro-winkler", "weight": 2},
        {"property": "geo", "comparator": {"name": "geo-distance", "params": {"scale": 250}},
         "threshold": 0.5, "missing": "pessimistic"}]})"));
    REQUIRE(!t.is_leaf());
    const auto leaves = t.leaves();
    REQUIRE(leaves.size() == 2);
    CHECK(leaves[0]->comparator.name() == "jaro-winkler");
    CHECK(leaves[0]->weight == 2.0);
    CHECK(leaves[1]->comparator.params().at("scale") == 250.0);
    CHECK(leaves[1]->missing == MissingPolicy::pessimistic);
    CHECK(tree_from_json(to_json(t)) == t);
}

TEST_CASE("config errors name the key") {
    // Each document is otherwise valid.
    auto message = [](const std::string& text) {
        auto j = Json::parse(text);
        if (!j["match"].contains("tree")) j["match"]["tree"] = {{"property", "name"}};
        try {
            parse_run_config(j.dump());
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message(R"({"match": {"acceptThreshhold": 0.9}})").find("acceptThreshhold") != std::string::npos);
    CHECK(message(R"({"match": {"tree": {"op": "XOR", "children": []}}})").find("AND") != std::string::npos);
    CHECK(message(R"({"match": {"tree": {"property": "name", "comparator": "soundexx"}}})") != "no error");
    CHECK(message(R"({"match": {"blocking": {"strategy": "canopy"}}})").find("canopy") != std::string::npos);
    CHECK(message(R"({"fusion": {"properties": {"name": "median"}}})").find("median") != std::string::npos);
    CHECK(message(R"({"evaluation": {"sweep": [1.5]}})") != "no error");
    CHECK(message(R"({"match": {"acceptThreshold": "high"}})").find("acceptThreshold") != std::string::npos);
    CHECK_THROWS_AS(parse_run_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("{}"), ConfigError);
    CHECK(message(R"({"fusion": {"unique": ["name"], "properties": {"name": "union"}}})") != "no error");
    CHECK_THROWS_AS(load_run_config("/nonexistent/kgdd.json"), ConfigError);
}

}
