#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include <spdlog/spdlog.h>

#include "kgdd/error.hpp"
#include "kgdd/evaluate.hpp"
#include "kgdd/rng.hpp"

namespace kgdd {

namespace {

bool contains_any(std::string_view name, std::initializer_list<std::string_view> parts) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return std::any_of(parts.begin(), parts.end(),
                       [&](std::string_view p) { return lower.find(p) != std::string::npos; });
}

ValueKind dominant_kind(const Dataset& ds, const std::string& property) {
    std::map<ValueKind, std::size_t> counts;
    for (const auto& e : ds.entities) {
        for (const auto& v : e.values(property)) ++counts[v.kind()];
    }
    ValueKind best = ValueKind::text;
    std::size_t n = 0;
    for (const auto& [k, c] : counts) {
        if (c > n) {
            best = k;
            n = c;
        }
    }
    return best;
}

PropertyGenes genes_for(const std::string& property, ValueKind kind) {
    PropertyGenes g;
    g.property = property;
    const auto text_chain = CleanerChain::build(
        {"lowercase", "strip-accents", "strip-punctuation", "collapse-whitespace", "trim"});
    switch (kind) {
        case ValueKind::geopoint:
            g.chains = {CleanerChain::build({"geo-sentinel-scrub"})};
            for (double s : {250.0, 1000.0, 5000.0}) {
                g.comparators.push_back(Comparator::make("geo-distance", {{"scale", s}}));
            }
            return g;
        case ValueKind::number:
            g.chains = {CleanerChain{}};
            g.comparators = {Comparator::make("numeric-relative"), Comparator::make("exact")};
            return g;
        case ValueKind::timestamp:
            g.chains = {CleanerChain{}};
            for (double s : {3600.0, 86400.0, 30 * 86400.0}) {
                g.comparators.push_back(Comparator::make("temporal", {{"scale", s}}));
            }
            return g;
        case ValueKind::url:
            g.chains = {CleanerChain::build({"url-normalize"})};
            g.comparators = {Comparator::make("exact"), Comparator::make("levenshtein")};
            return g;
        case ValueKind::text: break;
    }
    if (contains_any(property, {"phone", "fax"})) {
        g.chains = {CleanerChain::build({"phone-normalize"})};
        g.comparators = {Comparator::make("exact"), Comparator::make("levenshtein"),
                         Comparator::make("suffix")};
    } else if (contains_any(property, {"street", "address"})) {
        g.chains = {CleanerChain::build({"expand-abbreviations", "ordinal-to-digit", "address-token-reorder",
                                         "lowercase", "strip-accents", "strip-punctuation",
                                         "collapse-whitespace", "trim"}),
                    text_chain};
        g.comparators = {Comparator::make("levenshtein"), Comparator::make("jaccard"),
                         Comparator::make("jaro-winkler"), Comparator::make("monge-elkan")};
    } else if (contains_any(property, {"locality", "city", "country"})) {
        g.chains = {CleanerChain::build({"strip-country-suffix", "lowercase", "strip-accents",
                                         "collapse-whitespace", "trim"}),
                    text_chain};
        g.comparators = {Comparator::make("exact"), Comparator::make("levenshtein"),
                         Comparator::make("jaro-winkler")};
    } else if (contains_any(property, {"url", "homepage", "website"})) {
        g.chains = {CleanerChain::build({"url-normalize"})};
        g.comparators = {Comparator::make("exact"), Comparator::make("levenshtein")};
    } else {
        g.chains = {text_chain,
                    CleanerChain::build({"lowercase", "strip-accents", "strip-punctuation",
                                         "token-sort", "collapse-whitespace", "trim"}),
                    CleanerChain{}};
        g.comparators = {Comparator::make("levenshtein"), Comparator::make("jaro-winkler"),
                         Comparator::make("qgram"), Comparator::make("jaccard"),
                         Comparator::make("monge-elkan")};
    }
    return g;
}

enum Label : std::int8_t { unjudged = 0, positive = 1, negative = 2, related = 3 };

struct PairTable {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    std::vector<std::int8_t> labels;
};

// Candidate pairs per blocking and leaf score columns per
// (blocking, property, comparator, chain), computed on first use. A column
// holds NaN where either side has no value after cleaning.
class ScoreCache {
public:
    ScoreCache(const Dataset& ds, const GoldStandard& gold, const std::vector<BlockingSpec>& blockings,
               const std::vector<PropertyGenes>& genes)
        : ds_(ds), gold_(gold), blockings_(blockings), genes_(genes),
          tables_(blockings.size()), built_(blockings.size(), false) {}

    const PairTable& table(std::size_t b) {
        if (!built_[b]) {
            PairTable& t = tables_[b];
            const auto space = CandidateSpace::of(ds_.entities);
            generate_pairs(space, blockings_[b], [&](std::size_t i, std::size_t j) {
                t.pairs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
            });
            t.labels.reserve(t.pairs.size());
            for (const auto& [i, j] : t.pairs) {
                const auto v = gold_.verdict(canonical_pair(ds_.entities[i].id, ds_.entities[j].id));
                t.labels.push_back(!v                         ? unjudged
                                   : *v == Verdict::same      ? positive
                                   : *v == Verdict::different ? negative
                                                              : related);
            }
            built_[b] = true;
            spdlog::debug("learn: blocking {} yields {} candidate pairs", b, t.pairs.size());
        }
        return tables_[b];
    }

    const std::vector<double>& column(std::size_t b, std::size_t p, std::size_t c, std::size_t h) {
        const auto key = std::make_tuple(b, p, c, h);
        if (auto it = columns_.find(key); it != columns_.end()) return it->second;
        const auto& cleaned = cleaned_values(p, h);
        const auto& t = table(b);
        Leaf leaf{genes_[p].property, {}, genes_[p].comparators[c]};
        std::vector<double> col;
        col.reserve(t.pairs.size());
        for (const auto& [i, j] : t.pairs) {
            const auto s = score_leaf(leaf, cleaned[i], cleaned[j]);
            col.push_back(s ? *s : std::numeric_limits<double>::quiet_NaN());
        }
        return columns_.emplace(key, std::move(col)).first->second;
    }

private:
    const std::vector<std::vector<PropertyValue>>& cleaned_values(std::size_t p, std::size_t h) {
        const auto key = std::make_pair(p, h);
        if (auto it = cleaned_.find(key); it != cleaned_.end()) return it->second;
        std::vector<std::vector<PropertyValue>> out;
        out.reserve(ds_.entities.size());
        for (const auto& e : ds_.entities) {
            out.push_back(clean_values(e.values(genes_[p].property), genes_[p].chains[h]));
        }
        return cleaned_.emplace(key, std::move(out)).first->second;
    }

    const Dataset& ds_;
    const GoldStandard& gold_;
    const std::vector<BlockingSpec>& blockings_;
    const std::vector<PropertyGenes>& genes_;
    std::vector<PairTable> tables_;
    std::vector<bool> built_;
    std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>, std::vector<double>> columns_;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::vector<PropertyValue>>> cleaned_;
};

struct LeafInput {
    const std::vector<double>* column;
    double weight;
    double threshold;
    bool pessimistic;
};

// Same arithmetic as combine() on a one-level tree, so the fitness equals the
// F1 of the decoded configuration run through the pipeline.
EvalReport count_flat(const PairTable& t, const std::vector<LeafInput>& leaves, CombineOp op,
                      double accept, int min_leaves, std::size_t gold_same, WorldAssumption world) {
    std::size_t tp = 0, fp = 0;
    std::vector<std::pair<double, const LeafInput*>> present;
    present.reserve(leaves.size());
    for (std::size_t k = 0; k < t.pairs.size(); ++k) {
        const auto label = t.labels[k];
        if (label == related) continue;
        if (label == unjudged && world == WorldAssumption::open) continue;
        present.clear();
        int comparable = 0;
        for (const auto& leaf : leaves) {
            const double s = (*leaf.column)[k];
            if (std::isnan(s)) {
                if (leaf.pessimistic) present.emplace_back(0.0, &leaf);
            } else {
                ++comparable;
                present.emplace_back(s, &leaf);
            }
        }
        if (comparable < min_leaves || present.empty()) continue;
        double sim = 0.0;
        bool failed = false;
        switch (op) {
            case CombineOp::minimum:
                sim = 1.0;
                for (const auto& [s, l] : present) sim = std::min(sim, s);
                break;
            case CombineOp::maximum:
            case CombineOp::disjunction:
                for (const auto& [s, l] : present) sim = std::max(sim, s);
                break;
            case CombineOp::conjunction:
                for (const auto& [s, l] : present) {
                    if (s < l->threshold) failed = true;
                }
                [[fallthrough]];
            case CombineOp::weighted_average: {
                if (failed) {
                    sim = 0.0;
                    break;
                }
                double num = 0.0, den = 0.0;
                for (const auto& [s, l] : present) {
                    num += l->weight * s;
                    den += l->weight;
                }
                sim = std::clamp(num / den, 0.0, 1.0);
                break;
            }
        }
        if (sim < accept) continue;
        if (label == positive) {
            ++tp;
        } else {
            ++fp;
        }
    }
    return make_report(tp, fp, gold_same - tp);
}

struct Gene {
    bool enabled = false;
    std::size_t comparator = 0;
    std::size_t chain = 0;
    double weight = 1.0;
    double threshold = 0.0;
    bool pessimistic = false;
};

struct Genome {
    std::vector<Gene> genes;
    CombineOp op = CombineOp::weighted_average;
    double accept = 0.9;
    int min_leaves = 1;
    std::size_t blocking = 0;
    double fitness = -1.0;
};

class Learner {
public:
    Learner(const Dataset& ds, const GoldStandard& gold, const GAParams& params)
        : ds_(ds), gold_(gold), p_(params), space_(params.space), rng_(params.seed) {
        if (space_.blockings.empty()) space_.blockings.push_back(p_.blocking);
        for (const auto& seed : p_.seeds) seeds_.push_back(encode(seed));
        for (const auto& g : space_.properties) {
            if (g.comparators.empty() || g.chains.empty()) {
                throw ConfigError("search space for '" + g.property + "' needs comparators and chains");
            }
        }
        const auto names = ds_.property_names();
        for (const auto& g : space_.properties) {
            if (!names.count(g.property)) {
                throw ConfigError("search space references unknown property '" + g.property + "'");
            }
        }
        // Seeds were encoded before the space could grow; pad their genomes.
        for (auto& s : seeds_) s.genes.resize(space_.properties.size());
        cache_.emplace(ds_, gold_, space_.blockings, space_.properties);
        gold_same_ = gold_.count(Verdict::same);
    }

    LearnResult run() {
        std::vector<Genome> pop;
        for (const auto& s : seeds_) {
            if (pop.size() < p_.population_size) pop.push_back(s);
        }
        while (pop.size() < p_.population_size) pop.push_back(random_genome());
        for (auto& g : pop) evaluate(g);

        LearnResult result;
        std::size_t best = best_index(pop);
        Genome champion = pop[best];
        result.fitness_trace.push_back(champion.fitness);
        spdlog::info("learn: generation 0 best f1 {:.4f}", champion.fitness);

        for (std::size_t gen = 1; gen < p_.generations; ++gen) {
            std::vector<std::size_t> order(pop.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return pop[a].fitness > pop[b].fitness; });
            std::vector<Genome> next;
            for (std::size_t e = 0; e < p_.elite && e < order.size(); ++e) next.push_back(pop[order[e]]);
            while (next.size() < p_.population_size) {
                const Genome& a = pop[tournament(pop)];
                const Genome& b = pop[tournament(pop)];
                Genome child = rng_.chance(p_.crossover_rate) ? crossover(a, b) : a;
                mutate(child);
                child.fitness = -1.0;
                evaluate(child);
                next.push_back(std::move(child));
            }
            pop = std::move(next);
            best = best_index(pop);
            if (pop[best].fitness > champion.fitness) champion = pop[best];
            result.fitness_trace.push_back(champion.fitness);
            spdlog::info("learn: generation {} best f1 {:.4f}", gen, champion.fitness);
        }
        result.best = decode(champion);
        result.best_fitness = champion.fitness;
        return result;
    }

    EvalReport evaluate_config(const Genome& g) {
        const auto& t = cache_->table(g.blocking);
        std::vector<LeafInput> leaves;
        for (std::size_t p = 0; p < g.genes.size(); ++p) {
            const Gene& gene = g.genes[p];
            if (!gene.enabled) continue;
            leaves.push_back({&cache_->column(g.blocking, p, gene.comparator, gene.chain), gene.weight,
                              gene.threshold, gene.pessimistic});
        }
        return count_flat(t, leaves, g.op, g.accept, g.min_leaves, gold_same_, p_.world);
    }

private:
    void evaluate(Genome& g) {
        if (g.fitness < 0.0) g.fitness = evaluate_config(g).f1;
    }

    static std::size_t best_index(const std::vector<Genome>& pop) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < pop.size(); ++i) {
            if (pop[i].fitness > pop[best].fitness) best = i;
        }
        return best;
    }

    std::size_t tournament(const std::vector<Genome>& pop) {
        std::size_t best = static_cast<std::size_t>(rng_.below(pop.size()));
        for (std::size_t k = 1; k < p_.tournament; ++k) {
            const auto c = static_cast<std::size_t>(rng_.below(pop.size()));
            if (pop[c].fitness > pop[best].fitness) best = c;
        }
        return best;
    }

    double draw(std::pair<double, double> range) { return rng_.uniform(range.first, range.second); }

    double nudge(double x, std::pair<double, double> range) {
        if (rng_.chance(0.5)) return draw(range);
        const double span = range.second - range.first;
        return std::clamp(x + (rng_.uniform() - 0.5) * 0.2 * span, range.first, range.second);
    }

    Gene random_gene(std::size_t p) {
        const auto& pg = space_.properties[p];
        Gene g;
        g.enabled = rng_.chance(0.6);
        g.comparator = static_cast<std::size_t>(rng_.below(pg.comparators.size()));
        g.chain = static_cast<std::size_t>(rng_.below(pg.chains.size()));
        g.weight = draw(space_.weight_range);
        g.threshold = draw(space_.leaf_threshold_range);
        g.pessimistic = pg.missing == MissingPolicy::pessimistic;
        return g;
    }

    void ensure_enabled(Genome& g) {
        if (std::none_of(g.genes.begin(), g.genes.end(), [](const Gene& x) { return x.enabled; })) {
            g.genes[static_cast<std::size_t>(rng_.below(g.genes.size()))].enabled = true;
        }
    }

    Genome random_genome() {
        Genome g;
        for (std::size_t p = 0; p < space_.properties.size(); ++p) g.genes.push_back(random_gene(p));
        ensure_enabled(g);
        g.op = rng_.pick(space_.root_ops);
        g.accept = draw(space_.accept_threshold_range);
        g.min_leaves = rng_.pick(space_.min_comparable_leaves);
        g.blocking = static_cast<std::size_t>(rng_.below(space_.blockings.size()));
        return g;
    }

    // Slots: one per property gene, then op, accept, min_leaves, blocking.
    Genome crossover(const Genome& a, const Genome& b) {
        const std::size_t slots = a.genes.size() + 4;
        const std::size_t cut = 1 + static_cast<std::size_t>(rng_.below(slots - 1));
        Genome child = a;
        for (std::size_t s = cut; s < slots; ++s) {
            if (s < a.genes.size()) {
                child.genes[s] = b.genes[s];
                continue;
            }
            switch (s - a.genes.size()) {
                case 0: child.op = b.op; break;
                case 1: child.accept = b.accept; break;
                case 2: child.min_leaves = b.min_leaves; break;
                default: child.blocking = b.blocking; break;
            }
        }
        ensure_enabled(child);
        return child;
    }

    void mutate(Genome& g) {
        for (std::size_t p = 0; p < g.genes.size(); ++p) {
            if (!rng_.chance(p_.mutation_rate)) continue;
            Gene& gene = g.genes[p];
            const auto& pg = space_.properties[p];
            switch (rng_.below(6)) {
                case 0: gene.enabled = !gene.enabled; break;
                case 1: gene.comparator = static_cast<std::size_t>(rng_.below(pg.comparators.size())); break;
                case 2: gene.chain = static_cast<std::size_t>(rng_.below(pg.chains.size())); break;
                case 3: gene.weight = nudge(gene.weight, space_.weight_range); break;
                case 4: gene.threshold = nudge(gene.threshold, space_.leaf_threshold_range); break;
                default: gene.pessimistic = !gene.pessimistic; break;
            }
        }
        if (rng_.chance(p_.mutation_rate)) g.op = rng_.pick(space_.root_ops);
        if (rng_.chance(p_.mutation_rate)) g.accept = nudge(g.accept, space_.accept_threshold_range);
        if (rng_.chance(p_.mutation_rate)) g.min_leaves = rng_.pick(space_.min_comparable_leaves);
        if (rng_.chance(p_.mutation_rate)) {
            g.blocking = static_cast<std::size_t>(rng_.below(space_.blockings.size()));
        }
        ensure_enabled(g);
    }

    template <typename T>
    static std::size_t index_of(std::vector<T>& options, const T& value) {
        const auto it = std::find(options.begin(), options.end(), value);
        if (it != options.end()) return static_cast<std::size_t>(it - options.begin());
        options.push_back(value);
        return options.size() - 1;
    }

    // Seeds extend the search space with any choice they use that it lacks.
    Genome encode(const MatchConfig& config) {
        config.validate();
        Genome g;
        std::vector<const Leaf*> leaves;
        if (config.tree.is_leaf()) {
            leaves.push_back(&std::get<Leaf>(config.tree.node));
            g.op = CombineOp::maximum;
        } else {
            const auto& b = std::get<Branch>(config.tree.node);
            for (const auto& child : b.children) {
                if (!child.is_leaf()) throw ConfigError("GA seeds must be at most one level deep");
                leaves.push_back(&std::get<Leaf>(child.node));
            }
            g.op = b.op;
        }
        g.genes.resize(space_.properties.size());
        std::set<std::string> used;
        for (const Leaf* leaf : leaves) {
            if (!used.insert(leaf->property).second) {
                throw ConfigError("GA seeds may use each property once; '" + leaf->property + "' repeats");
            }
            auto it = std::find_if(space_.properties.begin(), space_.properties.end(),
                                   [&](const PropertyGenes& pg) { return pg.property == leaf->property; });
            if (it == space_.properties.end()) {
                space_.properties.push_back({leaf->property, {}, {}, MissingPolicy::ignore});
                it = space_.properties.end() - 1;
                g.genes.resize(space_.properties.size());
            }
            const auto p = static_cast<std::size_t>(it - space_.properties.begin());
            Gene& gene = g.genes[p];
            gene.enabled = true;
            gene.comparator = index_of(it->comparators, leaf->comparator);
            gene.chain = index_of(it->chains, leaf->cleaners);
            gene.weight = leaf->weight;
            gene.threshold = leaf->threshold;
            gene.pessimistic = leaf->missing == MissingPolicy::pessimistic;
        }
        g.accept = config.accept_threshold;
        g.min_leaves = config.min_comparable_leaves;
        g.blocking = index_of(space_.blockings, config.blocking);
        return g;
    }

public:
    MatchConfig decode(const Genome& g) const {
        std::vector<ComparatorTree> children;
        for (std::size_t p = 0; p < g.genes.size(); ++p) {
            const Gene& gene = g.genes[p];
            if (!gene.enabled) continue;
            const auto& pg = space_.properties[p];
            children.push_back(ComparatorTree::leaf(
                {pg.property, pg.chains[gene.chain], pg.comparators[gene.comparator], gene.weight,
                 gene.threshold, gene.pessimistic ? MissingPolicy::pessimistic : MissingPolicy::ignore}));
        }
        MatchConfig c;
        c.tree = ComparatorTree::branch(g.op, std::move(children));
        c.blocking = space_.blockings[g.blocking];
        c.accept_threshold = g.accept;
        c.min_comparable_leaves = g.min_leaves;
        return c;
    }

private:
    const Dataset& ds_;
    const GoldStandard& gold_;
    const GAParams& p_;
    SearchSpace space_;
    Rng rng_;
    std::vector<Genome> seeds_;
    std::optional<ScoreCache> cache_;
    std::size_t gold_same_ = 0;
};

void check_range(std::pair<double, double> r, const char* what, double lo, double hi) {
    if (!(r.first >= lo && r.first <= r.second && r.second <= hi)) {
        throw ConfigError(std::string(what) + " range must be ordered and lie in [" +
                          format_number(lo) + "," + format_number(hi) + "]");
    }
}

}  // namespace

SearchSpace default_search_space(const Dataset& dataset) {
    SearchSpace s;
    for (const auto& name : dataset.property_names()) {
        s.properties.push_back(genes_for(name, dominant_kind(dataset, name)));
    }
    return s;
}

void GAParams::validate() const {
    if (population_size < 2) throw ConfigError("GA population size must be at least 2");
    if (generations < 1) throw ConfigError("GA needs at least one generation");
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ConfigError("mutation rate must lie in [0,1]");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw ConfigError("crossover rate must lie in [0,1]");
    if (tournament < 1) throw ConfigError("tournament size must be at least 1");
    if (elite >= population_size) throw ConfigError("elite count must be below the population size");
    if (space.properties.empty() && seeds.empty()) throw ConfigError("GA search space has no properties");
    if (space.root_ops.empty()) throw ConfigError("GA search space has no combinators");
    if (space.min_comparable_leaves.empty() ||
        *std::min_element(space.min_comparable_leaves.begin(), space.min_comparable_leaves.end()) < 1) {
        throw ConfigError("minComparableLeaves choices must be >= 1");
    }
    check_range(space.weight_range, "weight", std::numeric_limits<double>::min(),
                std::numeric_limits<double>::max());
    check_range(space.leaf_threshold_range, "leaf threshold", 0.0, 1.0);
    check_range(space.accept_threshold_range, "acceptance threshold", 0.0, 1.0);
    blocking.validate();
    for (const auto& b : space.blockings) b.validate();
}

LearnResult learn_config(const Dataset& dataset, const GoldStandard& gold, const GAParams& params) {
    params.validate();
    if (gold.count(Verdict::same) == 0) throw ValidationError("the gold standard has no positive labels");
    if (params.world == WorldAssumption::open && gold.count(Verdict::different) == 0) {
        throw ValidationError("the gold standard has no negative labels");
    }
    if (dataset.entities.size() < 2) throw ValidationError("learning needs at least two entities");
    Learner learner(dataset, gold, params);
    return learner.run();
}

std::vector<FeatureRow> feature_report(const Dataset& dataset, const GoldStandard& gold,
                                       WorldAssumption world, const BlockingSpec& blocking) {
    if (gold.empty()) throw ValidationError("the gold standard is empty; scoring is meaningless");
    blocking.validate();
    const auto space = default_search_space(dataset);
    const std::vector<BlockingSpec> blockings{blocking};
    ScoreCache cache(dataset, gold, blockings, space.properties);
    const auto& table = cache.table(0);
    const std::size_t gold_same = gold.count(Verdict::same);
    const double n = static_cast<double>(dataset.entities.size());

    std::vector<FeatureRow> rows;
    for (std::size_t p = 0; p < space.properties.size(); ++p) {
        const auto& pg = space.properties[p];
        FeatureRow row;
        row.property = pg.property;
        std::size_t having = 0, total = 0;
        std::set<std::string> distinct;
        for (const auto& e : dataset.entities) {
            const auto values = e.values(pg.property);
            if (!values.empty()) ++having;
            for (const auto& v : values) {
                ++total;
                distinct.insert(v.raw());
            }
        }
        row.fill_rate = n == 0 ? 0.0 : static_cast<double>(having) / n;
        row.distinctness = total == 0 ? 0.0 : static_cast<double>(distinct.size()) / static_cast<double>(total);
        row.discriminative = distinct.size() > 1;
        row.comparator = pg.comparators.front().name();

        const std::vector<LeafInput> leaves{{&cache.column(0, p, 0, 0), 1.0, 0.0, false}};
        bool first = true;
        for (int step = 100; step >= 0; --step) {
            const double t = step / 100.0;
            const auto r = count_flat(table, leaves, CombineOp::maximum, t, 1, gold_same, world);
            if (first || r.f1 > row.standalone.f1) {
                row.standalone = r;
                row.best_threshold = t;
                first = false;
            }
        }
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const FeatureRow& a, const FeatureRow& b) {
        if (a.standalone.f1 != b.standalone.f1) return a.standalone.f1 > b.standalone.f1;
        return a.property < b.property;
    });
    return rows;
}

}  // namespace kgdd
