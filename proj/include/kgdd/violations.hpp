#pragma once

#include <map>
#include <set>
#include <span>
#include <string>

#include "kgdd/core.hpp"
#include "kgdd/normalize.hpp"

namespace kgdd {

using ChainMap = std::map<std::string, CleanerChain, std::less<>>;

/// One violation per unique property with at least two distinct normalized
/// values across the members of `set`. Properties without an entry in
/// `chains` are normalized with trim, collapse-whitespace and lowercase.
/// Throws ReferentialError when a member is missing from `entities`.
std::vector<ConstraintViolation> detect_violations(const EquivalenceSet& set,
                                                   std::span<const Entity> entities,
                                                   const std::set<std::string>& unique_props,
                                                   const ChainMap& chains = {});

}  // namespace kgdd
