#include "doctest.h"

#include <algorithm>

#include "kgdd/error.hpp"
#include "kgdd/violations.hpp"
#include "support.hpp"

using namespace kgdd;
using namespace kgdd::testing;

TEST_SUITE("core") {

TEST_CASE("canonical_pair orders ids and rejects self pairs") {
    const auto p = canonical_pair(id("x2"), id("x1"));
    CHECK(p.first() == id("x1"));
    CHECK(p.second() == id("x2"));
    CHECK(canonical_pair(id("x1"), id("x2")) == p);
    CHECK_THROWS_AS(canonical_pair(id("x1"), id("x1")), SelfPairError);
}

TEST_CASE("canonical_pair is symmetric and idempotent on random ids") {
    Rng rng(7);
    for (int i = 0; i < 500; ++i) {
        const auto a = id("e" + random_string(rng, 4, {"a", "b", "c"}));
        const auto b = id("e" + random_string(rng, 4, {"a", "b", "c"}));
        if (a == b) continue;
        const auto p = canonical_pair(a, b);
        CHECK(p == canonical_pair(b, a));
        CHECK(canonical_pair(p.first(), p.second()) == p);
        CHECK(p.first() < p.second());
    }
}

TEST_CASE("property values") {
    CHECK_THROWS_AS(PropertyValue::text(""), ValidationError);
    CHECK_THROWS_AS(PropertyValue::geo({91.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(PropertyValue::geo({0.0, -181.0}), ValidationError);
    CHECK_THROWS_AS(PropertyValue::text("x", {}, 1.5), ValidationError);
    CHECK_THROWS_AS(PropertyValue::number("12a"), ValidationError);

    const auto g = PropertyValue::parse(ValueKind::geopoint, "47.040537,10.609275");
    CHECK(g.as_geo().lat == doctest::Approx(47.040537));
    CHECK(g.as_geo().lon == doctest::Approx(10.609275));

    const auto t = PropertyValue::timestamp("2020-01-31T12:00:00Z");
    CHECK(t.as_time() == 1580472000);
    CHECK(format_timestamp(t.as_time()) == "2020-01-31T12:00:00Z");
    CHECK(PropertyValue::timestamp("2020-01-31").as_time() == 1580428800);
    CHECK(PropertyValue::number("47.1").as_number() == 47.1);
}

TEST_CASE("entities need at least one property") {
    CHECK_THROWS_AS(entity("a", {}).validate(), ValidationError);
    CHECK_NOTHROW(entity("a", {{"name", {txt("Hugo's")}}}).validate());
}

TEST_CASE("equivalence classes: transitive chain and singletons") {
    const std::vector<EntityId> ids{id("a"), id("b"), id("c"), id("d")};
    const std::vector<CanonicalPair> chain{canonical_pair(id("a"), id("b")), canonical_pair(id("b"), id("c"))};
    CHECK(as_sets(equivalence_classes(ids, chain)) ==
          std::set<std::set<std::string>>{{"a", "b", "c"}, {"d"}});

    const std::vector<EntityId> two{id("a"), id("b")};
    CHECK(as_sets(equivalence_classes(two, std::span<const CanonicalPair>{})) ==
          std::set<std::set<std::string>>{{"a"}, {"b"}});

    const std::vector<EntityId> three{id("a"), id("b"), id("c")};
    const std::vector<CanonicalPair> star{canonical_pair(id("a"), id("b")), canonical_pair(id("a"), id("c"))};
    const std::vector<std::string> names{"a", "b", "c"};
    CHECK(as_sets(equivalence_classes(three, star)) == brute_force_classes(names, {{"a", "b"}, {"a", "c"}}));
}

TEST_CASE("equivalence classes reject dangling ids") {
    const std::vector<EntityId> ids{id("a"), id("b")};
    const std::vector<CanonicalPair> bad{canonical_pair(id("a"), id("z"))};
    CHECK_THROWS_AS(equivalence_classes(ids, bad), ReferentialError);
}

TEST_CASE("only same verdicts merge sets") {
    const std::vector<EntityId> ids{id("a"), id("b"), id("c")};
    std::vector<SameAsAssertion> as(2, SameAsAssertion{canonical_pair(id("a"), id("b")), 0.9, {}, Verdict::unlabeled, DecidedBy::threshold});
    as[0].verdict = Verdict::related;
    as[1] = SameAsAssertion{canonical_pair(id("b"), id("c")), 0.9, {}, Verdict::same, DecidedBy::human};
    CHECK(as_sets(equivalence_classes(ids, as)) == std::set<std::set<std::string>>{{"a"}, {"b", "c"}});
}

TEST_CASE("equivalence classes agree with brute-force closure on random graphs") {
    Rng rng(11);
    for (int round = 0; round < 200; ++round) {
        const std::size_t n = 1 + rng.below(12);
        std::vector<std::string> names;
        std::vector<EntityId> ids;
        for (std::size_t i = 0; i < n; ++i) {
            names.push_back("n" + std::to_string(i));
            ids.push_back(id(names.back()));
        }
        std::vector<std::pair<std::string, std::string>> edges;
        std::vector<CanonicalPair> pairs;
        const std::size_t m = rng.below(n + 3);
        for (std::size_t k = 0; k < m && n > 1; ++k) {
            const auto i = rng.below(n), j = rng.below(n);
            if (i == j) continue;
            edges.emplace_back(names[i], names[j]);
            pairs.push_back(canonical_pair(ids[i], ids[j]));
        }
        const auto got = equivalence_classes(ids, pairs);
        CHECK(as_sets(got) == brute_force_classes(names, edges));

        // Partition: every id exactly once; sets sorted, ordered by first member.
        std::vector<std::string> seen;
        for (const auto& c : got) {
            CHECK(std::is_sorted(c.members.begin(), c.members.end()));
            for (const auto& mbr : c.members) seen.push_back(mbr.str());
        }
        std::sort(seen.begin(), seen.end());
        auto expected = names;
        std::sort(expected.begin(), expected.end());
        CHECK(seen == expected);
        CHECK(std::is_sorted(got.begin(), got.end(), [](const auto& x, const auto& y) {
            return x.members.front() < y.members.front();
        }));
    }
}

TEST_CASE("detect_violations") {
    SUBCASE("two names on one entity") {
        const std::vector<Entity> es{
            entity("i1", {{"name", {txt("Hotel Seespitz, Restaurant"), txt("Hotel Seespitz****Superior")}}})};
        const auto v = detect_violations(EquivalenceSet{{id("i1")}}, es, {"name"});
        REQUIRE(v.size() == 1);
        CHECK(v[0].property == "name");
        CHECK(v[0].values.size() == 2);
    }
    SUBCASE("identical values") {
        const std::vector<Entity> es{entity("a", {{"name", {txt("Hugo's")}}}),
                                     entity("b", {{"name", {txt("Hugo's")}}})};
        CHECK(detect_violations(EquivalenceSet{{id("a"), id("b")}}, es, {"name"}).empty());
    }
    SUBCASE("two urls and three names") {
        const std::vector<Entity> es{
            entity("a", {{"name", {txt("A")}}, {"url", {PropertyValue::url("http://a.at")}}}),
            entity("b", {{"name", {txt("B")}}, {"url", {PropertyValue::url("http://b.at")}}}),
            entity("c", {{"name", {txt("C")}}, {"url", {PropertyValue::url("http://a.at")}}})};
        const auto v = detect_violations(EquivalenceSet{{id("a"), id("b"), id("c")}}, es, {"name", "url"});
        REQUIRE(v.size() == 2);
        CHECK(v[0].values.size() + v[1].values.size() == 5);
    }
    SUBCASE("values equal after normalization are not conflicts") {
        const std::vector<Entity> es{entity("a", {{"name", {txt("Hugo's  Bar")}}}),
                                     entity("b", {{"name", {txt("hugo's bar")}}})};
        CHECK(detect_violations(EquivalenceSet{{id("a"), id("b")}}, es, {"name"}).empty());
    }
    SUBCASE("missing member") {
        const std::vector<Entity> es{entity("a", {{"name", {txt("x")}}})};
        CHECK_THROWS_AS(detect_violations(EquivalenceSet{{id("a"), id("q")}}, es, {"name"}), ReferentialError);
    }
}

}
