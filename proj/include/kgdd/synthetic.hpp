#pragma once

// Synthetic restaurant knowledge graph with planted, corrupted duplicates and
// a fully labeled gold standard.

#include <cstdint>
#include <vector>

#include "kgdd/evaluate.hpp"
#include "kgdd/ingest.hpp"
#include "kgdd/pipeline.hpp"

namespace kgdd {

// Relative weights of the corruption types applied to planted duplicates.
struct ErrorMix {
    double typo = 1.0;                 // "Hugo's" -> "Hugos", single-character edits
    double address_permutation = 1.0;  // "Str." / "Strasse", "11" / "Eleven", reordering
    double country_suffix = 1.0;       // "Serfaus" -> "Serfaus, AT"
    double missing_geo = 1.0;          // coordinates dropped
    double property_alias = 1.0;       // "title", "phone", "locality" instead of canonical keys
    double value_conflict = 1.0;       // a different telephone number
};

struct SyntheticSpec {
    std::size_t entity_count = 495;
    std::size_t duplicate_count = 23;
    ErrorMix error_mix;
    std::uint64_t seed = 2020;

    // Throws ConfigError.
    void validate() const;
};

struct SyntheticData {
    // Entities as a source would publish them: aliased property keys are kept.
    Dataset raw;
    // `raw` under SchemaMapping::standard().
    Dataset dataset;
    // Every planted pair labeled same, plus a sample of other pairs labeled
    // different. Complete under the closed-world assumption.
    GoldStandard gold;
    std::vector<CanonicalPair> planted;
};

/// entity_count originals plus duplicate_count corrupted copies, ids
/// shuffled. Identical output for identical specs.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Hand-written configurations for the benchmark schema.
MatchConfig name_only_config(Comparator comparator = Comparator::make("levenshtein"),
                             double accept_threshold = 0.9);
MatchConfig name_geo_config();

}  // namespace kgdd
