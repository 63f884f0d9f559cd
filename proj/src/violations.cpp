#include "kgdd/violations.hpp"

#include <unordered_map>

#include "kgdd/error.hpp"

namespace kgdd {

std::vector<ConstraintViolation> detect_violations(const EquivalenceSet& set,
                                                   std::span<const Entity> entities,
                                                   const std::set<std::string>& unique_props,
                                                   const ChainMap& chains) {
    std::unordered_map<EntityId, const Entity*> by_id;
    for (const auto& e : entities) by_id.emplace(e.id, &e);

    std::vector<const Entity*> members;
    for (const auto& id : set.members) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw ReferentialError("unknown class member '" + id.str() + "'");
        members.push_back(it->second);
    }

    static const CleanerChain fallback =
        CleanerChain::build({"trim", "collapse-whitespace", "lowercase"});

    std::vector<ConstraintViolation> out;
    for (const auto& prop : unique_props) {
        const auto chain_it = chains.find(prop);
        const CleanerChain& chain = chain_it == chains.end() ? fallback : chain_it->second;
        std::set<std::string> distinct;
        for (const Entity* e : members) {
            for (const auto& v : clean_values(e->values(prop), chain)) distinct.insert(v.raw());
        }
        if (distinct.size() >= 2) {
            out.push_back({set, prop, std::vector<std::string>(distinct.begin(), distinct.end())});
        }
    }
    return out;
}

}  // namespace kgdd
