#include "doctest.h"

#include <numeric>

#include "kgdd/compare.hpp"
#include "kgdd/error.hpp"
#include "support.hpp"

using namespace kgdd;
using namespace kgdd::testing;

namespace {

Leaf leaf(const std::string& property, const std::string& comparator = "levenshtein", double threshold = 0.0,
          double weight = 1.0, MissingPolicy missing = MissingPolicy::ignore) {
    return Leaf{property, {}, Comparator::make(comparator), weight, threshold, missing};
}

ComparatorTree flat(CombineOp op, std::size_t n, const std::vector<double>& weights = {},
                    const std::vector<double>& thresholds = {}) {
    std::vector<ComparatorTree> children;
    for (std::size_t i = 0; i < n; ++i) {
        children.push_back(ComparatorTree::leaf(leaf("p" + std::to_string(i), "levenshtein",
                                                     thresholds.empty() ? 0.0 : thresholds[i],
                                                     weights.empty() ? 1.0 : weights[i])));
    }
    return ComparatorTree::branch(op, std::move(children));
}

std::optional<double> run(const ComparatorTree& t, std::vector<std::optional<double>> scores) {
    return combine(t, scores);
}

// Values of the kind a comparator is meant for.
PropertyValue random_value(Rng& rng, const Comparator& c) {
    if (c.name() == "geo-distance" || c.name() == "bbox-overlap") {
        return geo(47.0 + rng.uniform(-0.05, 0.05), 10.6 + rng.uniform(-0.05, 0.05));
    }
    if (c.name() == "numeric-relative" || c.name() == "numeric-absolute") {
        return PropertyValue::number(static_cast<double>(rng.below(2000)) - 1000.0);
    }
    if (c.name() == "temporal") return PropertyValue::timestamp(static_cast<std::int64_t>(rng.below(1000000)));
    auto s = random_string(rng, 10);
    return txt(s.empty() ? "x" : s);
}

}  // namespace

TEST_SUITE("compare") {

TEST_CASE("levenshtein on a dropped apostrophe") {
    CHECK(metrics::levenshtein("Hugos", "Hugo's") == doctest::Approx(1.0 - 1.0 / 6.0));
    CHECK(metrics::levenshtein("Hugos", "Hugo's") == dp_levenshtein_similarity("Hugos", "Hugo's"));
    CHECK(metrics::levenshtein("", "") == 1.0);
    CHECK(metrics::levenshtein("abc", "") == 0.0);
}

TEST_CASE("levenshtein agrees with the DP oracle") {
    Rng rng(101);
    for (int i = 0; i < 2000; ++i) {
        const auto a = random_string(rng, 12);
        const auto b = random_string(rng, 12);
        REQUIRE(metrics::levenshtein(a, b) == dp_levenshtein_similarity(a, b));
        REQUIRE(metrics::levenshtein_distance(text::decode_utf8(a), text::decode_utf8(b)) == dp_edit_distance(a, b));
    }
}

TEST_CASE("token metrics on reordered tokens") {
    const auto sorted = [](const char* s) { return std::string(cleaners::token_sort(s)); };
    CHECK(metrics::qgram(sorted("HUGO'S BAR"), sorted("BAR HUGO'S")) == 1.0);
    CHECK(metrics::jaccard("HUGO'S BAR", "BAR HUGO'S") == 1.0);
    CHECK(metrics::dice("a b", "b c") == doctest::Approx(0.5));
    CHECK(metrics::jaccard("a b", "b c") == doctest::Approx(1.0 / 3.0));
    CHECK(metrics::cosine("a a b", "a b b") == doctest::Approx(4.0 / 5.0));
    CHECK(metrics::qgram("abcd", "abce") == doctest::Approx(2.0 / 4.0));
    CHECK(metrics::prefix("abcd", "abxy") == doctest::Approx(0.5));
    CHECK(metrics::suffix("xbcd", "abcd") == doctest::Approx(0.75));
    CHECK(metrics::lcs_substring("xabcx", "yabcy") == doctest::Approx(3.0 / 5.0));
    CHECK(metrics::jaro_winkler("MARTHA", "MARHTA") == doctest::Approx(0.9611).epsilon(1e-4));
    CHECK(metrics::jaro("DIXON", "DICKSONX") == doctest::Approx(0.7667).epsilon(1e-4));
    CHECK(metrics::numeric_relative(50, 100) == doctest::Approx(0.5));
}

TEST_CASE("registry covers the five families and twenty comparators") {
    const auto names = registered_comparators();
    CHECK(names.size() >= 20);
    std::set<Family> families;
    for (const auto& n : names) families.insert(Comparator::make(n).family());
    CHECK(families.size() == 5);
}

TEST_CASE("every comparator: identity, symmetry, range") {
    Rng rng(202);
    for (const auto& name : registered_comparators()) {
        const auto c = Comparator::make(name);
        for (int i = 0; i < 300; ++i) {
            const auto a = random_value(rng, c);
            const auto b = rng.chance(0.1) ? a : random_value(rng, c);
            const double ab = c.compare(a, b);
            INFO(name, " [", a.raw(), "] [", b.raw(), "]");
            CHECK(ab >= 0.0);
            CHECK(ab <= 1.0);
            CHECK(ab == c.compare(b, a));
            CHECK(c.compare(a, a) == 1.0);
        }
    }
}

TEST_CASE("comparator construction errors") {
    CHECK_THROWS_AS(Comparator::make("no-such-metric"), ConfigError);
    CHECK_THROWS_AS(Comparator::make("levenshtein", {{"q", 3}}), ConfigError);
    CHECK_THROWS_AS(Comparator::make("jaro-winkler", {{"prefix-scale", 0.3}}), ConfigError);
    CHECK_THROWS_AS(Comparator::make("geo-distance", {{"scale", 0}}), ConfigError);
    CHECK_NOTHROW(Comparator::make("qgram", {{"q", 3}}));
}

TEST_CASE("compare_geo") {
    const GeoPoint p{47.040537, 10.609275};
    CHECK(compare_geo(p, p, 1000) == 1.0);

    // A point exactly `scale` metres due north.
    const double scale = 2000.0;
    const GeoPoint north{p.lat + scale / 6371008.8 * 180.0 / std::numbers::pi, p.lon};
    CHECK(compare_geo(p, north, scale) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(compare_geo(p, {p.lat + 1.0, p.lon}, scale) == 0.0);

    const GeoPoint a{47.0, 10.6}, b{47.0, 10.61};
    const double oracle = 1.0 - vector_great_circle_meters(a, b) / 2000.0;
    CHECK(compare_geo(a, b, 2000.0) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(haversine_meters(a, b) == doctest::Approx(vector_great_circle_meters(a, b)).epsilon(1e-9));

    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const GeoPoint x{rng.uniform(-80, 80), rng.uniform(-179, 179)};
        const GeoPoint y{x.lat + rng.uniform(-0.5, 0.5), x.lon + rng.uniform(-0.5, 0.5)};
        CHECK(haversine_meters(x, y) == doctest::Approx(vector_great_circle_meters(x, y)).epsilon(1e-7));
        CHECK(compare_geo(x, y, 50000) == compare_geo(y, x, 50000));
    }
}

TEST_CASE("compare_temporal") {
    CHECK(compare_temporal(100, 100, 60) == 1.0);
    CHECK(compare_temporal(100, 160, 60) == 0.0);
    CHECK(compare_temporal(100, 130, 60) == doctest::Approx(0.5));
    CHECK(compare_temporal(130, 100, 60) == compare_temporal(100, 130, 60));
}

TEST_CASE("combinators") {
    CHECK(run(flat(CombineOp::conjunction, 2, {}, {0.5, 0.5}), {1.0, 1.0}) == 1.0);
    CHECK(run(flat(CombineOp::conjunction, 2, {}, {0.5, 0.5}), {1.0, 0.4}) == 0.0);
    CHECK(run(flat(CombineOp::minimum, 2), {0.2, 0.9}) == 0.2);
    CHECK(run(flat(CombineOp::maximum, 2), {0.2, 0.9}) == 0.9);
    CHECK(run(flat(CombineOp::disjunction, 2), {0.2, 0.9}) == 0.9);
    CHECK(*run(flat(CombineOp::weighted_average, 2, {1.0, 3.0}), {0.2, 0.6}) == doctest::Approx(0.5));
    CHECK(*run(flat(CombineOp::conjunction, 2, {1.0, 3.0}, {0.1, 0.1}), {0.2, 0.6}) == doctest::Approx(0.5));
}

TEST_CASE("absent children are excluded") {
    CHECK(run(flat(CombineOp::minimum, 3), {0.4, std::nullopt, 0.8}) == 0.4);
    CHECK_FALSE(run(flat(CombineOp::maximum, 2), {std::nullopt, std::nullopt}).has_value());
    CHECK(*run(flat(CombineOp::weighted_average, 2), {std::nullopt, 0.3}) == doctest::Approx(0.3));
}

TEST_CASE("permutation invariance and WAVG monotonicity") {
    Rng rng(77);
    for (int round = 0; round < 500; ++round) {
        const std::size_t n = 1 + rng.below(5);
        std::vector<double> w(n), s(n);
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = rng.uniform(0.5, 3.0);
            s[i] = rng.uniform();
        }
        const double t = rng.uniform(0.0, 0.5);
        const std::vector<double> same_t(n, t);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
        std::vector<double> pw(n), ps(n);
        for (std::size_t i = 0; i < n; ++i) {
            pw[i] = w[perm[i]];
            ps[i] = s[perm[i]];
        }
        const auto opt = [](const std::vector<double>& v) { return std::vector<std::optional<double>>(v.begin(), v.end()); };
        for (auto op : {CombineOp::minimum, CombineOp::maximum, CombineOp::disjunction}) {
            CHECK(run(flat(op, n, w), opt(s)) == run(flat(op, n, pw), opt(ps)));
        }
        for (auto op : {CombineOp::weighted_average, CombineOp::conjunction}) {
            CHECK(*run(flat(op, n, w, same_t), opt(s)) ==
                  doctest::Approx(*run(flat(op, n, pw, same_t), opt(ps))).epsilon(1e-12));
        }

        const auto wavg = flat(CombineOp::weighted_average, n, w);
        auto raised = s;
        const auto k = rng.below(n);
        raised[k] = std::min(1.0, raised[k] + rng.uniform(0.0, 0.5));
        CHECK(*run(wavg, opt(raised)) >= *run(wavg, opt(s)) - 1e-15);
    }
}

TEST_CASE("evaluate_tree takes the best value pair and applies the missing policy") {
    const Entity a = entity("a", {{"name", {txt("Hugo's Bar"), txt("Hugos")}}});
    const Entity b = entity("b", {{"name", {txt("Hugos")}}, {"telephone", {txt("1")}}});
    SUBCASE("multi-valued max") {
        const auto t = ComparatorTree::leaf(leaf("name"));
        const auto s = evaluate_tree(t, a, b);
        CHECK(s.sim == 1.0);
        CHECK(s.per_property.at("name") == 1.0);
        CHECK(s.comparable_leaves == 1);
    }
    SUBCASE("ignore") {
        const auto t = ComparatorTree::branch(CombineOp::minimum, {ComparatorTree::leaf(leaf("name")),
                                                                   ComparatorTree::leaf(leaf("telephone"))});
        const auto s = evaluate_tree(t, a, b);
        CHECK(s.sim == 1.0);
        CHECK(s.comparable_leaves == 1);
        CHECK_FALSE(s.per_property.count("telephone"));
    }
    SUBCASE("pessimistic") {
        const auto t = ComparatorTree::branch(
            CombineOp::minimum,
            {ComparatorTree::leaf(leaf("name")),
             ComparatorTree::leaf(leaf("telephone", "exact", 0.0, 1.0, MissingPolicy::pessimistic))});
        const auto s = evaluate_tree(t, a, b);
        CHECK(s.sim == 0.0);
        CHECK(s.comparable_leaves == 1);
    }
}

TEST_CASE("tree validation") {
    CHECK_THROWS_AS(ComparatorTree::branch(CombineOp::maximum, {}).validate(), ConfigError);
    CHECK_THROWS_AS(ComparatorTree::leaf(leaf("name", "levenshtein", 1.5)).validate(), ConfigError);
    CHECK_THROWS_AS(ComparatorTree::leaf(leaf("name", "levenshtein", 0.5, 0.0)).validate(), ConfigError);
    CHECK_NOTHROW(flat(CombineOp::conjunction, 3).validate());
}

TEST_CASE("leaf labels disambiguate repeated properties") {
    const auto t = ComparatorTree::branch(CombineOp::maximum, {ComparatorTree::leaf(leaf("name")),
                                                               ComparatorTree::leaf(leaf("name", "jaccard"))});
    CHECK(t.leaf_labels() == std::vector<std::string>{"name", "name#2"});
}

}
