#include "doctest.h"

#include "kgdd/error.hpp"
#include "kgdd/fusion.hpp"
#include "support.hpp"

using namespace kgdd;
using namespace kgdd::testing;
namespace fo = kgdd::testing::fusion_oracle;

namespace {

PropertyValue qv(const std::string& raw, double quality, std::int64_t t = 0, std::string source = "s") {
    return PropertyValue::text(raw, {std::move(source), t}, quality);
}

PropertyValue random_value(Rng& rng) {
    const std::string raw = rng.pick(std::vector<std::string>{"a", "b", "bb", "ccc", "Hotel", "Hotel Seespitz"});
    const Provenance prov{rng.pick(std::vector<std::string>{"s1", "s2", "s3"}),
                          static_cast<std::int64_t>(rng.below(3))};
    std::optional<double> q;
    if (rng.chance(0.6)) q = rng.pick(std::vector<double>{0.2, 0.5, 0.9, 1.0});
    return rng.chance(0.8) ? PropertyValue::text(raw, prov, q) : PropertyValue::url(raw, prov, q);
}

std::vector<PropertyValue> random_values(Rng& rng, std::size_t max) {
    std::vector<PropertyValue> out;
    const auto n = 1 + rng.below(max);
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(random_value(rng));
    return out;
}

// Output comparison on the full value, provenance and quality included.
void check_same(const std::vector<PropertyValue>& got, const std::vector<PropertyValue>& want) {
    auto key = [](const PropertyValue& v) { return fo::key_of(v); };
    auto g = got, w = want;
    auto by = [&](const PropertyValue& x, const PropertyValue& y) { return key(x) < key(y); };
    std::sort(g.begin(), g.end(), by);
    std::sort(w.begin(), w.end(), by);
    CHECK(g == w);
}

FusionPolicy policy_of(std::map<std::string, FusionRule> rules, std::set<std::string> unique = {}) {
    FusionPolicy p;
    p.per_property = std::move(rules);
    p.unique = std::move(unique);
    return p;
}

EquivalenceSet cls(std::vector<std::string> ids) {
    EquivalenceSet s;
    std::sort(ids.begin(), ids.end());
    for (const auto& i : ids) s.members.push_back(id(i));
    return s;
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("voting picks the most frequent name") {
    const std::vector<Entity> es{entity("a", {{"name", {txt("Hotel Seespitz")}}}),
                                 entity("b", {{"name", {txt("Hotel Seespitz")}}}),
                                 entity("c", {{"name", {txt("Seespitz")}}})};
    const auto f = fuse_class(cls({"a", "b", "c"}), es, policy_of({{"name", {FusionFunction::voting, {}}}}));
    REQUIRE(f.properties.find("name") != f.properties.end());
    CHECK(f.properties.find("name")->second.size() == 1);
    CHECK(f.properties.find("name")->second[0].raw() == "Hotel Seespitz");
    CHECK(f.id.str() == "urn:kgdd:fused:a+b+c");
    CHECK(f.members.size() == 3);
}

TEST_CASE("average over latitudes") {
    const std::vector<Entity> es{entity("a", {{"latitude", {PropertyValue::number(47.0)}}}),
                                 entity("b", {{"latitude", {PropertyValue::number(47.2)}}})};
    const auto f = fuse_class(cls({"a", "b"}), es, policy_of({{"latitude", {FusionFunction::average, {}}}}));
    CHECK(f.properties.find("latitude")->second.at(0).as_number() == doctest::Approx(47.1));

    const std::vector<Entity> gs{entity("a", {{"geo", {geo(47.0, 11.0)}}}), entity("b", {{"geo", {geo(47.2, 11.4)}}})};
    const auto g = fuse_class(cls({"a", "b"}), gs, policy_of({{"geo", {FusionFunction::average, {}}}}));
    const auto p = g.properties.find("geo")->second.at(0).as_geo();
    CHECK(p.lat == doctest::Approx(47.1));
    CHECK(p.lon == doctest::Approx(11.2));
}

TEST_CASE("filter keeps values at or above the quality threshold") {
    std::string why;
    const std::vector<PropertyValue> in{qv("good", 0.9), qv("bad", 0.3)};
    const auto out = fusion::filter(in, 0.5, why);
    REQUIRE(out.size() == 1);
    CHECK(out[0].raw() == "good");
    CHECK(!why.empty());
    // Per-rule threshold overrides the policy's.
    const std::vector<Entity> es{entity("a", {{"name", {qv("good", 0.9)}}}), entity("b", {{"name", {qv("bad", 0.3)}}})};
    const auto f = fuse_class(cls({"a", "b"}), es, policy_of({{"name", {FusionFunction::filter, {{"threshold", "0.2"}}}}}));
    CHECK(f.properties.find("name")->second.size() == 2);
}

TEST_CASE("fusion functions equal the multiset oracle") {
    Rng rng(51);
    std::string why;
    for (int round = 0; round < 1000; ++round) {
        const auto in = random_values(rng, 8);
        check_same(fusion::voting(in, why), fo::voting(in));
        check_same(fusion::latest(in, why), fo::latest(in));
        check_same(fusion::longest(in, why), fo::longest(in));
        check_same(fusion::union_values(in, why), fo::union_values(in));
        const double t = rng.pick(std::vector<double>{0.0, 0.3, 0.5, 0.95});
        check_same(fusion::filter(in, t, why), fo::filter(in, t));
        std::vector<double> xs;
        std::vector<PropertyValue> nums;
        for (std::size_t i = 0; i < in.size(); ++i) {
            xs.push_back(rng.uniform(-1000.0, 1000.0));
            nums.push_back(PropertyValue::number(xs.back()));
        }
        const auto avg = fusion::average(nums, why);
        REQUIRE(avg.size() == 1);
        CHECK(avg[0].as_number() == fo::mean(xs));
    }
}

TEST_CASE("fused output does not depend on input order") {
    Rng rng(52);
    const FusionPolicy policy = policy_of({{"name", {FusionFunction::voting, {}}},
                                           {"url", {FusionFunction::longest, {}}},
                                           {"phone", {FusionFunction::latest, {}}},
                                           {"score", {FusionFunction::average, {}}}});
    for (int round = 0; round < 200; ++round) {
        std::vector<Entity> es;
        std::vector<std::string> ids;
        const auto n = 1 + rng.below(5);
        for (std::uint64_t i = 0; i < n; ++i) {
            PropertyMap props;
            props["name"] = random_values(rng, 2);
            if (rng.chance(0.7)) props["phone"] = random_values(rng, 2);
            if (rng.chance(0.5)) props["tag"] = random_values(rng, 3);
            props["score"].push_back(PropertyValue::number(rng.uniform(0.0, 5.0)));
            ids.push_back("m" + std::to_string(i));
            es.push_back(entity(ids.back(), props));
        }
        const auto ref = fuse_class(cls(ids), es, policy);
        auto shuffled = es;
        for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
        CHECK(fuse_class(cls(ids), shuffled, policy) == ref);

        // Conservation: every output appears among the inputs, except averages.
        for (const auto& d : ref.decisions) {
            if (d.function == "average") {
                std::vector<double> xs;
                for (const auto& v : d.inputs) xs.push_back(v.as_number());
                CHECK(d.output.at(0).as_number() == doctest::Approx(fo::mean(xs)));
                continue;
            }
            for (const auto& o : d.output) {
                CHECK(std::find(d.inputs.begin(), d.inputs.end(), o) != d.inputs.end());
            }
        }
        // One decision per fused property.
        std::set<std::string> decided;
        for (const auto& d : ref.decisions) decided.insert(d.property);
        for (const auto& [p, vs] : ref.properties) CHECK(decided.count(p) == 1);
    }
}

TEST_CASE("unique properties and review flags") {
    const std::vector<Entity> es{entity("a", {{"name", {txt("Post")}}, {"tag", {txt("x")}}}),
                                 entity("b", {{"name", {txt("Gasthof Post")}}, {"tag", {txt("y")}}})};
    const auto f = fuse_class(cls({"a", "b"}), es, policy_of({}, {"name"}));
    CHECK(f.properties.find("name")->second.size() == 1);
    CHECK(f.unresolved == std::set<std::string>{"name"});
    CHECK(f.properties.find("tag")->second.size() == 2);  // union by default

    const std::vector<Entity> agree{entity("a", {{"name", {txt("Post")}}}), entity("b", {{"name", {txt("Post")}}})};
    CHECK(fuse_class(cls({"a", "b"}), agree, policy_of({}, {"name"})).unresolved.empty());

    CHECK_THROWS_AS(policy_of({{"name", {FusionFunction::union_values, {}}}}, {"name"}).validate(), PolicyError);
    CHECK_THROWS_AS(policy_of({{"name", {FusionFunction::filter, {}}}}, {"name"}).validate(), PolicyError);
}

TEST_CASE("prefer-source") {
    const std::vector<Entity> es{entity("a", {{"phone", {PropertyValue::text("1", {"osm", 0})}}}),
                                 entity("b", {{"phone", {PropertyValue::text("2", {"tourism", 0})}}})};
    const auto rule = [](std::string sources) {
        return policy_of({{"phone", {FusionFunction::prefer_source, {{"sources", std::move(sources)}}}}});
    };
    auto f = fuse_class(cls({"a", "b"}), es, rule("tourism,osm"));
    CHECK(f.properties.find("phone")->second.at(0).raw() == "2");
    CHECK(f.unresolved.empty());
    f = fuse_class(cls({"a", "b"}), es, rule("osm"));
    CHECK(f.properties.find("phone")->second.at(0).raw() == "1");
    f = fuse_class(cls({"a", "b"}), es, rule("wiki"));
    CHECK(f.unresolved == std::set<std::string>{"phone"});
    CHECK(f.properties.find("phone")->second.size() == 1);
    CHECK_THROWS_AS(policy_of({{"phone", {FusionFunction::prefer_source, {}}}}).validate(), PolicyError);
}

TEST_CASE("overrides") {
    const std::vector<Entity> es{entity("a", {{"name", {txt("Hotel Seespitz")}}}),
                                 entity("b", {{"name", {txt("Hotel Seespitz")}}}),
                                 entity("c", {{"name", {txt("Seespitz")}}})};
    const auto f = fuse_class(cls({"a", "b", "c"}), es, policy_of({{"name", {FusionFunction::voting, {}}}}));
    const std::vector<Override> one{{"name", "Seespitz", "maria"}};
    const auto g = resolve_overrides(f, one);
    CHECK(g.properties.find("name")->second.at(0).raw() == "Seespitz");
    CHECK(g.decisions.size() == f.decisions.size() + 1);
    CHECK(g.decisions.back().decided_by == DecidedBy::human);
    CHECK(g.decisions.back().function == "override");
    CHECK(g.decisions.back().actor == "maria");
    CHECK(resolve_overrides(f, {}) == f);
    const std::vector<Override> invented{{"name", "Seespitz Resort", "maria"}};
    CHECK_THROWS_AS(resolve_overrides(f, invented), ValidationError);
    const std::vector<Override> absent{{"phone", "1", "maria"}};
    CHECK_THROWS_AS(resolve_overrides(f, absent), ValidationError);
}

TEST_CASE("policy errors") {
    const std::vector<Entity> es{entity("a", {{"name", {txt("x")}}}), entity("b", {{"name", {txt("y")}}})};
    const auto avg = policy_of({{"name", {FusionFunction::average, {}}}});
    CHECK_NOTHROW(avg.validate());
    CHECK_THROWS_AS(avg.validate(es), PolicyError);
    CHECK_THROWS_AS(fuse_class(cls({"a", "b"}), es, avg), PolicyError);
    FusionPolicy bad;
    bad.quality_threshold = 1.5;
    CHECK_THROWS_AS(bad.validate(), PolicyError);
    CHECK_THROWS_AS(fuse_class(cls({"a", "z"}), es, FusionPolicy{}), ReferentialError);
    CHECK_THROWS_AS(fuse_class(EquivalenceSet{}, es, FusionPolicy{}), ValidationError);
    CHECK(parse_fusion_function("prefer-source") == FusionFunction::prefer_source);
    CHECK(!parse_fusion_function("median"));
}

}
