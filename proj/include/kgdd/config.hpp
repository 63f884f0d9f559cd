#pragma once

// The run-config document: one JSON file holding the schema mapping,
// comparator tree, blocking, thresholds, fusion policy, evaluation and GA
// settings. The CLI and the HTTP API read the same document.
//
// {
//   "mapping":    {"standard": true, "aliases": {"title": "name"}, ...},
//   "match":      {"mode": "dedup", "acceptThreshold": 0.9, "minComparableLeaves": 2,
//                  "blocking": {"strategy": "standard-blocking",
//                               "keys": [{"kind": "name-prefix", "property": "name", "length": 4}]},
//                  "tree": {"op": "AND", "children": [
//                      {"property": "name", "cleaners": ["lowercase"], "comparator": "levenshtein",
//                       "weight": 1, "threshold": 0.8, "missing": "ignore"}, ...]}},
//   "fusion":     {"default": "union", "qualityThreshold": 0.5, "unique": ["name"],
//                  "properties": {"geo": "average", "name": {"function": "voting"}}},
//   "evaluation": {"closedWorld": false, "sweep": [0.9, 0.8]},
//   "ga":         {"populationSize": 30, "generations": 20, "seed": 42, ...}
// }
//
// Unknown keys are rejected so that typos do not silently fall back to
// defaults.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "kgdd/evaluate.hpp"
#include "kgdd/fusion.hpp"
#include "kgdd/ingest.hpp"
#include "kgdd/pipeline.hpp"

namespace kgdd {

using Json = nlohmann::ordered_json;

struct RunConfig {
    SchemaMapping mapping = SchemaMapping::standard();
    MatchConfig match;
    FusionPolicy fusion;
    WorldAssumption world = WorldAssumption::open;
    std::vector<double> sweep = {0.9, 0.8};
    GAParams ga;
    // No "searchSpace" given: derive it from the dataset at learn time.
    bool ga_default_space = true;
    // Put the match config into the initial GA population.
    bool ga_seed_with_match = false;
};

/// Throws ConfigError naming the offending key.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
Json to_json(const RunConfig& config);
std::string dump_run_config(const RunConfig& config);

// Building blocks, also used by the HTTP API. The from_json variants throw
// ConfigError.
Json to_json(const Comparator& c);
Comparator comparator_from_json(const Json& j);
Json to_json(const CleanerChain& chain);
CleanerChain chain_from_json(const Json& j);
Json to_json(const ComparatorTree& tree);
ComparatorTree tree_from_json(const Json& j);
Json to_json(const BlockingSpec& spec);
BlockingSpec blocking_from_json(const Json& j);
Json to_json(const MatchConfig& config);
MatchConfig match_from_json(const Json& j);
Json to_json(const SchemaMapping& mapping);
SchemaMapping mapping_from_json(const Json& j);
Json to_json(const FusionPolicy& policy);
FusionPolicy fusion_from_json(const Json& j);
Json to_json(const SearchSpace& space);
SearchSpace search_space_from_json(const Json& j);

}  // namespace kgdd
