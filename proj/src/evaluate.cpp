#include "kgdd/evaluate.hpp"

#include <algorithm>
#include <set>

#include "kgdd/error.hpp"

namespace kgdd {

GoldStandard GoldStandard::with(LabelRecord record) const {
    if (record.verdict == Verdict::unlabeled) {
        throw ValidationError("a label must be same, different or related");
    }
    GoldStandard next = *this;
    next.current_.insert_or_assign(record.pair, record.verdict);
    next.history_.push_back(std::move(record));
    return next;
}

std::optional<Verdict> GoldStandard::verdict(const CanonicalPair& pair) const {
    const auto it = current_.find(pair);
    if (it == current_.end()) return std::nullopt;
    return it->second;
}

std::size_t GoldStandard::count(Verdict v) const {
    return static_cast<std::size_t>(std::count_if(current_.begin(), current_.end(),
                                                  [v](const auto& kv) { return kv.second == v; }));
}

GoldStandard submit_label(const GoldStandard& gold, const EntityId& a, const EntityId& b,
                          Verdict verdict, std::string labeler, std::int64_t timestamp) {
    return gold.with({canonical_pair(a, b), verdict, std::move(labeler), timestamp});
}

std::vector<SameAsAssertion> next_candidates_for_labeling(std::span<const SameAsAssertion> assertions,
                                                          const GoldStandard& gold,
                                                          std::size_t limit) {
    std::vector<const SameAsAssertion*> open;
    for (const auto& a : assertions) {
        if (!gold.verdict(a.pair)) open.push_back(&a);
    }
    std::sort(open.begin(), open.end(), [](const SameAsAssertion* x, const SameAsAssertion* y) {
        if (x->sim != y->sim) return x->sim > y->sim;
        return x->pair < y->pair;
    });
    // Duplicate pairs in the input are proposed once.
    std::vector<SameAsAssertion> out;
    std::set<CanonicalPair> seen;
    for (const auto* a : open) {
        if (out.size() >= limit) break;
        if (seen.insert(a->pair).second) out.push_back(*a);
    }
    return out;
}

std::vector<CanonicalPair> confirmed_pairs(std::span<const SameAsAssertion> assertions,
                                           const GoldStandard& gold, double threshold) {
    std::set<CanonicalPair> out;
    for (const auto& a : assertions) {
        if (a.sim >= threshold) out.insert(a.pair);
    }
    for (const auto& [pair, verdict] : gold.current()) {
        if (verdict == Verdict::same) {
            out.insert(pair);
        } else {
            out.erase(pair);
        }
    }
    return {out.begin(), out.end()};
}

EvalReport make_report(std::size_t tp, std::size_t fp, std::size_t fn) {
    EvalReport r;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    r.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    r.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    r.f1 = r.precision + r.recall == 0.0 ? 0.0
                                         : 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

EvalReport score(std::span<const CanonicalPair> accepted, const GoldStandard& gold,
                 WorldAssumption world) {
    if (gold.empty()) throw ValidationError("the gold standard is empty; scoring is meaningless");
    const std::set<CanonicalPair> predicted(accepted.begin(), accepted.end());
    std::size_t tp = 0, fp = 0, unjudged = 0, related = 0, accepted_different = 0;
    for (const auto& p : predicted) {
        const auto v = gold.verdict(p);
        if (!v) {
            ++unjudged;
        } else if (*v == Verdict::same) {
            ++tp;
        } else if (*v == Verdict::related) {
            ++related;
        } else {
            ++accepted_different;
        }
    }
    fp = accepted_different;
    if (world == WorldAssumption::closed) {
        fp += unjudged;
        unjudged = 0;
    }
    const std::size_t fn = gold.count(Verdict::same) - tp;
    EvalReport r = make_report(tp, fp, fn);
    r.unjudged = unjudged;
    r.related = related;
    if (world == WorldAssumption::open) r.tn = gold.count(Verdict::different) - accepted_different;
    return r;
}

std::vector<std::pair<double, EvalReport>> threshold_sweep(std::span<const SameAsAssertion> scored,
                                                           const GoldStandard& gold,
                                                           std::span<const double> thresholds,
                                                           WorldAssumption world) {
    for (double t : thresholds) {
        if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("sweep thresholds must lie in [0,1]");
    }
    std::vector<std::pair<double, EvalReport>> out;
    std::vector<CanonicalPair> accepted;
    for (double t : thresholds) {
        accepted.clear();
        for (const auto& a : scored) {
            if (a.sim >= t) accepted.push_back(a.pair);
        }
        out.emplace_back(t, score(accepted, gold, world));
    }
    return out;
}

}  // namespace kgdd
