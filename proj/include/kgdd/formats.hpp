#pragma once

// On-disk and wire formats: assertion results (JSON lines), the gold
// standard (CSV), fusion decision logs (JSON lines) and plain-text reports.
//
//   results:   {"idA":..,"idB":..,"sim":..,"perProperty":{..},"verdict":"unlabeled"}
//   gold CSV:  idA,idB,verdict,labeler,timestamp   (append-only; later rows win)
//   decisions: {"entity":..,"property":..,"function":..,"inputs":[..],"output":[..],
//               "rationale":..,"decidedBy":..,"actor":..}
// with values as {"kind":..,"raw":..[,"source":..,"ingested":..,"quality":..]}

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kgdd/config.hpp"
#include "kgdd/evaluate.hpp"
#include "kgdd/fusion.hpp"
#include "kgdd/pipeline.hpp"

namespace kgdd {

Json to_json(const SameAsAssertion& a);
// Throws DataError.
SameAsAssertion assertion_from_json(const Json& j);

void write_results(std::span<const SameAsAssertion> assertions, std::ostream& out);
// Throws DataError naming the line of a malformed record.
std::vector<SameAsAssertion> read_results(std::istream& in);

Json to_json(const RunReport& report);
Json to_json(const EvalReport& report);
Json to_json(const FeatureRow& row);
Json to_json(const EquivalenceSet& set);
Json to_json(const PropertyValue& value);
PropertyValue value_from_json(const Json& j);  // throws DataError
Json to_json(const FusedEntity& fused);
FusedEntity fused_from_json(const Json& j);    // throws DataError

std::string gold_header();
std::string gold_row(const LabelRecord& record);
void write_gold(const GoldStandard& gold, std::ostream& out);
// Replays the rows in order. Throws RowError / ValueError.
GoldStandard read_gold(std::istream& in);

Json to_json(const FusionDecision& d, const EntityId& entity);
void write_decisions(std::span<const FusedEntity> fused, std::ostream& out);

// Aligned text tables.
std::string eval_table(std::span<const std::pair<std::string, EvalReport>> rows);
std::string feature_table(std::span<const FeatureRow> rows);

}  // namespace kgdd
