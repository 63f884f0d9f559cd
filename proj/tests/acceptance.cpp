// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status if
// any criterion fails. Pass criterion numbers as arguments to run a subset.

#include <sys/resource.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>

#include <spdlog/spdlog.h>

#include "kgdd/compare.hpp"
#include "kgdd/evaluate.hpp"
#include "kgdd/formats.hpp"
#include "kgdd/fusion.hpp"
#include "kgdd/synthetic.hpp"
#include "support.hpp"

using namespace kgdd;
using namespace kgdd::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x, int digits = 4) {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(digits);
    o << x;
    return o.str();
}

std::set<CanonicalPair> accepted_set(const std::vector<SameAsAssertion>& as, double threshold) {
    const auto v = accepted_pairs(as, threshold);
    return {v.begin(), v.end()};
}

bool subset(const std::set<CanonicalPair>& a, const std::set<CanonicalPair>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

const SyntheticData& bench() {
    static const SyntheticData data = generate_synthetic({495, 23, {}, 2020});
    return data;
}

double f1_of(const MatchConfig& c, WorldAssumption world = WorldAssumption::closed) {
    const auto r = run_dedup(bench().dataset, c);
    return score(accepted_pairs(r.assertions, c.accept_threshold), bench().gold, world).f1;
}

long max_rss_kb() {
    rusage u{};
    getrusage(RUSAGE_SELF, &u);
    return u.ru_maxrss;
}

Outcome metric_arithmetic() {
    GoldStandard recall_gold, precision_gold;
    std::vector<CanonicalPair> found, accepted;
    for (int i = 0; i < 23; ++i) {
        const auto p = canonical_pair(id("a" + std::to_string(i)), id("b" + std::to_string(i)));
        recall_gold = recall_gold.with({p, kgdd::Verdict::same, "t", 0});
        if (i < 7) found.push_back(p);
    }
    for (int i = 0; i < 3; ++i) {
        const auto p = canonical_pair(id("c" + std::to_string(i)), id("d" + std::to_string(i)));
        precision_gold = precision_gold.with({p, i < 2 ? kgdd::Verdict::same : kgdd::Verdict::different, "t", 0});
        accepted.push_back(p);
    }
    const auto r = score(found, recall_gold);
    const auto p = score(accepted, precision_gold);
    const bool ok = r.tp == 7 && r.fn == 16 && std::abs(r.recall - 0.3043) <= 1e-4 && p.tp == 2 && p.fp == 1 &&
                    std::abs(p.precision - 0.6667) <= 1e-4;
    return {ok, "recall(tp=7,fn=16)=" + fmt(r.recall) + " precision(tp=2,fp=1)=" + fmt(p.precision)};
}

PropertyValue random_value(Rng& rng) {
    const std::string raw = rng.pick(std::vector<std::string>{"a", "b", "bb", "ccc", "Hotel", "Hotel Seespitz", "Seespitz"});
    const Provenance prov{rng.pick(std::vector<std::string>{"s1", "s2", "s3"}), static_cast<std::int64_t>(rng.below(3))};
    std::optional<double> q;
    if (rng.chance(0.6)) q = rng.pick(std::vector<double>{0.2, 0.5, 0.9, 1.0});
    return rng.chance(0.8) ? PropertyValue::text(raw, prov, q) : PropertyValue::url(raw, prov, q);
}

bool same_values(std::vector<PropertyValue> a, std::vector<PropertyValue> b) {
    const auto by = [](const PropertyValue& x, const PropertyValue& y) {
        return fusion_oracle::key_of(x) < fusion_oracle::key_of(y);
    };
    std::sort(a.begin(), a.end(), by);
    std::sort(b.begin(), b.end(), by);
    return a == b;
}

Outcome oracle_equivalence() {
    std::ostringstream detail;
    bool ok = true;

    // (a) Levenshtein against the full DP matrix.
    Rng rng(2021);
    std::size_t lev_mismatch = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto a = random_string(rng, 12), b = random_string(rng, 12);
        if (metrics::levenshtein(a, b) != dp_levenshtein_similarity(a, b)) ++lev_mismatch;
    }
    ok = ok && lev_mismatch == 0;
    detail << "(a) levenshtein mismatches " << lev_mismatch << "/10000; ";

    // (b) Fusion functions against multiset enumeration.
    std::map<std::string, std::size_t> fusion_mismatch{{"voting", 0}, {"filter", 0}, {"latest", 0},
                                                        {"longest", 0}, {"union", 0}, {"average", 0}};
    std::string why;
    for (int i = 0; i < 1000; ++i) {
        std::vector<PropertyValue> in;
        const auto n = 1 + rng.below(8);
        for (std::uint64_t k = 0; k < n; ++k) in.push_back(random_value(rng));
        const double t = rng.pick(std::vector<double>{0.0, 0.3, 0.5, 0.95});
        fusion_mismatch["voting"] += !same_values(fusion::voting(in, why), fusion_oracle::voting(in));
        fusion_mismatch["filter"] += !same_values(fusion::filter(in, t, why), fusion_oracle::filter(in, t));
        fusion_mismatch["latest"] += !same_values(fusion::latest(in, why), fusion_oracle::latest(in));
        fusion_mismatch["longest"] += !same_values(fusion::longest(in, why), fusion_oracle::longest(in));
        fusion_mismatch["union"] += !same_values(fusion::union_values(in, why), fusion_oracle::union_values(in));
        std::vector<double> xs;
        std::vector<PropertyValue> nums;
        for (std::uint64_t k = 0; k < n; ++k) {
            xs.push_back(rng.uniform(-1000.0, 1000.0));
            nums.push_back(PropertyValue::number(xs.back()));
        }
        fusion_mismatch["average"] += fusion::average(nums, why).at(0).as_number() != fusion_oracle::mean(xs);
    }
    detail << "(b) fusion mismatches";
    for (const auto& [name, m] : fusion_mismatch) {
        ok = ok && m == 0;
        detail << " " << name << "=" << m;
    }
    detail << " /1000; ";

    // (c) Blocked runs against the naive run on the benchmark.
    const auto& ds = bench().dataset;
    auto c = name_geo_config();
    const auto naive = accepted_set(run_dedup(ds, c).assertions, c.accept_threshold);
    c.blocking = {BlockingStrategy::standard, {KeyFunction::name_prefix("name", 3), KeyFunction::geohash("geo", 5)},
                  10, false};
    const auto standard = accepted_set(run_dedup(ds, c).assertions, c.accept_threshold);
    c.blocking = {BlockingStrategy::sorted_neighborhood, {KeyFunction::name_prefix("name", 3)}, 10, false};
    const auto sn = accepted_set(run_dedup(ds, c).assertions, c.accept_threshold);
    c.blocking.window = ds.entities.size();
    const auto sn_full = run_dedup(ds, c);
    const auto sn_full_set = accepted_set(sn_full.assertions, c.accept_threshold);
    const std::size_t n = ds.entities.size();
    const bool c_ok = subset(standard, naive) && subset(sn, naive) && sn_full_set == naive &&
                      sn_full.report.candidate_count == n * (n - 1) / 2;
    ok = ok && c_ok;
    detail << "(c) accepted naive=" << naive.size() << " standard=" << standard.size() << " (subset "
           << subset(standard, naive) << ") sn(w=10)=" << sn.size() << " (subset " << subset(sn, naive)
           << ") sn(w=n)=" << sn_full_set.size() << " (equal " << (sn_full_set == naive) << ")";
    return {ok, detail.str()};
}

Outcome benchmark_end_to_end() {
    const auto& ds = bench().dataset;
    std::vector<double> thresholds;
    for (int t = 0; t <= 100; ++t) thresholds.push_back(t / 100.0);
    double best_name = 0.0;
    std::string best_label;
    for (const auto& name : registered_comparators()) {
        const auto comparator = Comparator::make(name);
        if (comparator.family() != Family::string) continue;
        const auto c = name_only_config(comparator, 0.0);
        const auto r = run_dedup(ds, c, {0.0, {}});
        for (const auto& [t, report] : threshold_sweep(r.assertions, bench().gold, thresholds, WorldAssumption::closed)) {
            if (report.f1 > best_name) {
                best_name = report.f1;
                best_label = name + "@" + fmt(t, 2);
            }
        }
    }
    const double combined = f1_of(name_geo_config());
    return {combined > best_name, "AND(name,geo) f1=" + fmt(combined) + " vs best name-only f1=" + fmt(best_name) +
                                      " (" + best_label + ")"};
}

std::string full_pipeline_bytes() {
    const auto data = generate_synthetic({495, 23, {}, 2020});
    std::ostringstream csv;
    write_csv(data.dataset, csv);
    std::istringstream back(csv.str());
    SchemaMapping identity;
    identity.geo_sentinel = false;
    IngestOptions opts;
    opts.dataset_id = "bench";
    const auto ds = parse_csv(back, identity, opts);

    auto c = name_geo_config();
    c.blocking = {BlockingStrategy::standard, {KeyFunction::name_prefix("name", 3), KeyFunction::geohash("geo", 5)},
                  10, false};
    const auto r = run_dedup(ds, c, {0.5, {}});
    std::ostringstream out;
    write_results(r.assertions, out);

    FusionPolicy policy;
    policy.unique = {"name"};
    policy.per_property["geo"] = {FusionFunction::average, {}};
    std::vector<FusedEntity> fused;
    for (const auto& cls : equivalence_classes(ds.ids(), confirmed_pairs(r.assertions, data.gold, c.accept_threshold))) {
        if (cls.members.size() > 1) fused.push_back(fuse_class(cls, ds.entities, policy));
    }
    write_decisions(fused, out);
    return csv.str() + out.str();
}

Outcome determinism() {
    const auto a = full_pipeline_bytes();
    const auto b = full_pipeline_bytes();
    return {a == b && !a.empty(), std::to_string(a.size()) + " bytes, identical=" + (a == b ? "yes" : "no")};
}

Outcome threshold_monotonicity() {
    // A single name leaf without a leaf threshold spreads scores over the
    // whole range, so every cut changes the accepted set.
    const auto r = run_dedup(bench().dataset, name_only_config(), {0.0, {}});
    const std::vector<double> thresholds{0.5, 0.8, 0.9, 1.0};
    std::vector<std::set<CanonicalPair>> sets;
    for (double t : thresholds) sets.push_back(accepted_set(r.assertions, t));
    bool ok = true;
    std::ostringstream detail;
    detail << "accepted sizes";
    for (std::size_t i = 0; i < sets.size(); ++i) {
        detail << " " << fmt(thresholds[i], 1) << ":" << sets[i].size();
        if (i > 0) ok = ok && sets[i].size() <= sets[i - 1].size() && subset(sets[i], sets[i - 1]);
    }
    detail << ", nested=" << (ok ? "yes" : "no");
    return {ok, detail.str()};
}

Outcome ga_learning() {
    GAParams p;
    p.population_size = 30;
    p.generations = 20;
    p.seed = 42;
    p.space = default_search_space(bench().dataset);
    p.world = WorldAssumption::closed;
    const auto r = learn_config(bench().dataset, bench().gold, p);
    bool monotone = r.fitness_trace.size() == 20;
    for (std::size_t g = 1; g < r.fitness_trace.size(); ++g) monotone = monotone && r.fitness_trace[g] >= r.fitness_trace[g - 1];
    const double baseline = f1_of(name_only_config());
    // The reported fitness must be what the pipeline gives for the learned config.
    const double rerun = f1_of(r.best);
    const bool consistent = std::abs(rerun - r.best_fitness) < 1e-9;
    return {monotone && consistent && r.best_fitness >= baseline,
            "trace " + fmt(r.fitness_trace.front()) + " -> " + fmt(r.fitness_trace.back()) +
                " non-decreasing=" + (monotone ? "yes" : "no") + ", learned f1=" + fmt(r.best_fitness) +
                " (pipeline rerun " + fmt(rerun) + ") vs name-only baseline f1=" + fmt(baseline)};
}

Outcome scalability() {
    const auto started = std::chrono::steady_clock::now();
    const auto data = generate_synthetic({99000, 1000, {}, 7});
    const std::size_t n = data.dataset.entities.size();
    auto c = name_geo_config();
    // Block on ~150 m cells: a town holds thousands of entities at this size.
    c.blocking = {BlockingStrategy::standard, {KeyFunction::geohash("geo", 7)}, 10, false};
    const auto r = run_dedup(data.dataset, c);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const double all_pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    const double share = static_cast<double>(r.report.candidate_count) / all_pairs;
    const double rss_gb = static_cast<double>(max_rss_kb()) / (1024.0 * 1024.0);
    const auto found = accepted_set(r.assertions, c.accept_threshold);
    std::size_t planted_found = 0;
    for (const auto& p : data.planted) planted_found += found.count(p);
    return {n == 100000 && share < 0.01 && rss_gb < 4.0 && seconds < 600.0,
            "n=" + std::to_string(n) + " candidates=" + std::to_string(r.report.candidate_count) + " (" +
                fmt(100.0 * share, 3) + "% of all pairs, largest block " + std::to_string(r.report.blocking.largest_block) +
                "), peak rss " + fmt(rss_gb, 2) + " GB, " + fmt(seconds, 1) + " s incl. generation, planted found " +
                std::to_string(planted_found) + "/" + std::to_string(data.planted.size())};
}

Outcome closure_properties() {
    Rng rng(88);
    std::size_t failures = 0;
    for (int round = 0; round < 1000; ++round) {
        const std::size_t n = 1 + rng.below(30);
        std::vector<std::string> names;
        std::vector<EntityId> ids;
        for (std::size_t i = 0; i < n; ++i) {
            names.push_back("e" + std::to_string(i));
            ids.push_back(id(names.back()));
        }
        std::vector<CanonicalPair> pairs;
        std::vector<std::pair<std::string, std::string>> edges;
        std::vector<SameAsAssertion> mixed;
        const auto m = rng.below(2 * n);
        for (std::uint64_t k = 0; k < m && n > 1; ++k) {
            const auto a = rng.below(n), b = rng.below(n);
            if (a == b) continue;
            const auto p = canonical_pair(ids[a], ids[b]);
            if (rng.chance(0.2)) {
                // Related assertions must not merge.
                mixed.push_back({p, 1.0, {}, kgdd::Verdict::related, DecidedBy::human});
                continue;
            }
            pairs.push_back(p);
            edges.emplace_back(names[a], names[b]);
            mixed.push_back({p, 1.0, {}, kgdd::Verdict::same, DecidedBy::human});
        }
        const auto classes = equivalence_classes(ids, pairs);
        bool ok = as_sets(classes) == brute_force_classes(names, edges);
        ok = ok && as_sets(equivalence_classes(ids, mixed)) == as_sets(classes);
        // Partition: every id in exactly one class.
        std::map<std::string, int> seen;
        for (const auto& c : classes) {
            for (const auto& member : c.members) ++seen[member.str()];
        }
        ok = ok && seen.size() == n && std::all_of(seen.begin(), seen.end(), [](const auto& kv) { return kv.second == 1; });
        // Permutation invariance over both inputs.
        auto shuffled_ids = ids;
        auto shuffled_pairs = pairs;
        for (std::size_t i = shuffled_ids.size(); i > 1; --i) std::swap(shuffled_ids[i - 1], shuffled_ids[rng.below(i)]);
        for (std::size_t i = shuffled_pairs.size(); i > 1; --i) std::swap(shuffled_pairs[i - 1], shuffled_pairs[rng.below(i)]);
        ok = ok && equivalence_classes(shuffled_ids, shuffled_pairs) == classes;
        // Monotonicity: more confirmed pairs only merge classes.
        auto more = pairs;
        for (int k = 0; k < 3 && n > 1; ++k) {
            const auto a = rng.below(n), b = rng.below(n);
            if (a != b) more.push_back(canonical_pair(ids[a], ids[b]));
        }
        const auto coarser = as_sets(equivalence_classes(ids, more));
        for (const auto& c : as_sets(classes)) {
            ok = ok && std::any_of(coarser.begin(), coarser.end(), [&](const std::set<std::string>& big) {
                     return std::includes(big.begin(), big.end(), c.begin(), c.end());
                 });
        }
        ok = ok && coarser.size() <= classes.size();
        failures += !ok;
    }
    return {failures == 0, std::to_string(1000 - failures) + "/1000 random assertion sets satisfy closure == brute force, "
                               "partition, permutation invariance, monotonicity"};
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"metric arithmetic", metric_arithmetic},
        {"oracle equivalence", oracle_equivalence},
        {"benchmark end-to-end", benchmark_end_to_end},
        {"determinism", determinism},
        {"threshold monotonicity", threshold_monotonicity},
        {"GA learning", ga_learning},
        {"scalability guard", scalability},
        {"equivalence closure properties", closure_properties},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(number)) continue;
        const auto started = std::chrono::steady_clock::now();
        Outcome v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        std::printf("[%s] %d. %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", number, criteria[i].first.c_str(),
                    v.detail.c_str(), s);
        std::fflush(stdout);
        failed += !v.pass;
    }
    std::printf("%d failed\n", failed);
    return failed == 0 ? 0 : 1;
}
