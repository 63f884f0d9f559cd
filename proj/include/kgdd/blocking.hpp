#pragma once

// Candidate pair generation. Pairs are streamed to a sink as indices into a
// candidate space, never collected, so memory is bounded by block sizes.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgdd/core.hpp"
#include "kgdd/normalize.hpp"

namespace kgdd {

enum class BlockingStrategy { naive, standard, sorted_neighborhood };

std::string_view to_string(BlockingStrategy s);
std::optional<BlockingStrategy> parse_blocking_strategy(std::string_view s);

/// Derives zero or more block keys from one property of an entity.
struct KeyFunction {
    enum class Kind { name_prefix, geohash, url_host, exact };

    Kind kind = Kind::name_prefix;
    std::string property = "name";
    int length = 4;  // prefix characters, or geohash precision

    static KeyFunction name_prefix(std::string property = "name", int k = 4);
    static KeyFunction geohash(std::string property = "geo", int precision = 6);
    static KeyFunction url_host(std::string property = "url");
    static KeyFunction exact(std::string property);

    // Sorted, de-duplicated keys; empty when the entity yields none.
    std::vector<std::string> keys(const Entity& e) const;

    friend bool operator==(const KeyFunction&, const KeyFunction&) = default;
};

std::string_view to_string(KeyFunction::Kind k);
std::optional<KeyFunction::Kind> parse_key_kind(std::string_view s);

struct BlockingSpec {
    BlockingStrategy strategy = BlockingStrategy::naive;
    // Keys from all functions are pooled; a pair shares a block if any key
    // matches.
    std::vector<KeyFunction> keys;
    std::size_t window = 10;
    // Entities without keys share one extra block instead of being excluded.
    bool unkeyed_block = false;

    // Throws ConfigError (window < 2, keyed strategy without key functions).
    void validate() const;

    friend bool operator==(const BlockingSpec&, const BlockingSpec&) = default;
};

/// Entities to pair up. With `sides` set, only pairs across different sides
/// are produced (record linkage).
struct CandidateSpace {
    std::vector<const Entity*> entities;
    std::vector<std::uint8_t> sides;

    static CandidateSpace of(std::span<const Entity> entities);
    static CandidateSpace linkage(std::span<const Entity> a, std::span<const Entity> b);

    bool cross_only() const noexcept { return !sides.empty(); }
    std::size_t size() const noexcept { return entities.size(); }
};

// Receives (i, j) with entities[i].id < entities[j].id.
using PairSink = std::function<void(std::size_t, std::size_t)>;

struct BlockingStats {
    std::size_t pairs = 0;
    std::size_t blocks = 0;
    std::size_t largest_block = 0;
    std::size_t unkeyed = 0;
    std::size_t skipped_same_id = 0;  // linkage pairs naming one id twice
};

BlockingStats naive_pairs(const CandidateSpace& space, const PairSink& sink);
BlockingStats standard_blocking(const CandidateSpace& space, std::span<const KeyFunction> keys,
                                bool unkeyed_block, const PairSink& sink);
BlockingStats sorted_neighborhood(const CandidateSpace& space, std::span<const KeyFunction> keys,
                                  std::size_t window, const PairSink& sink);

BlockingStats generate_pairs(const CandidateSpace& space, const BlockingSpec& spec,
                             const PairSink& sink);

/// Upper bound on the pair count, used for progress reporting.
std::size_t estimate_pairs(const CandidateSpace& space, const BlockingSpec& spec);

std::string geohash_encode(GeoPoint p, int precision);

}  // namespace kgdd
