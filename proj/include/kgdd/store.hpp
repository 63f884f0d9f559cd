#pragma once

// Durable, append-only storage for the service: datasets, runs and their
// results, gold labels, fusion runs and overrides. Every mutation is on disk
// (fsync) before the call returns; the in-memory index is rebuilt from the
// files at startup.
//
// Layout under the root directory:
//   datasets.jsonl            one record per dataset
//   datasets/<id>.csv         dataset content (canonical CSV)
//   gold/<dataset>.csv        label history per dataset
//   runs.jsonl                run records; later records for an id win
//   runs/<id>.jsonl           results of a finished run
//   fusion.jsonl              fusion run records
//   fusion/<id>.jsonl         decision log of a fusion run at creation
//   overrides.jsonl           human overrides, replayed in order

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kgdd/config.hpp"
#include "kgdd/error.hpp"
#include "kgdd/evaluate.hpp"
#include "kgdd/fusion.hpp"
#include "kgdd/ingest.hpp"
#include "kgdd/pipeline.hpp"

namespace kgdd {

enum class RunState { pending, running, done, failed };

std::string_view to_string(RunState s);

struct DatasetInfo {
    std::string id;
    std::string name;
    std::size_t entity_count = 0;
    std::int64_t created_at = 0;
};

struct RunRecord {
    std::string id;
    std::string dataset_id;
    std::string other_dataset_id;  // linkage runs only
    Json config;                   // the run-config document as submitted
    RunState state = RunState::pending;
    double progress = 0.0;
    std::optional<Json> report;  // RunReport, once done
    std::string error;
    std::int64_t created_at = 0;
};

struct OverrideRecord {
    std::string fusion_id;
    std::string entity;
    Override change;
    std::int64_t at = 0;
};

struct FusionRun {
    std::string id;
    std::string run_id;
    double threshold = 0.0;
    std::int64_t created_at = 0;
    std::vector<FusedEntity> entities;  // overrides applied
};

/// Thrown for unknown ids; the HTTP layer maps it to 404.
class NotFound : public Error {
public:
    using Error::Error;
};

/// Thrown when a label would silently replace another; mapped to 409.
class Conflict : public Error {
public:
    using Error::Error;
};

class Store {
public:
    explicit Store(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }

    DatasetInfo add_dataset(Dataset dataset, const std::string& name);
    std::vector<DatasetInfo> datasets() const;
    DatasetInfo dataset_info(const std::string& id) const;
    std::shared_ptr<const Dataset> dataset(const std::string& id) const;

    RunRecord create_run(const std::string& dataset_id, Json config, const std::string& other_dataset_id = {});
    // States only move forward; done and failed runs are immutable.
    void update_run(const std::string& id, RunState state, std::optional<Json> report = {},
                    std::string error = {});
    // In memory only; progress is not worth an fsync.
    void set_progress(const std::string& id, double progress);
    void save_results(const std::string& id, const std::vector<SameAsAssertion>& assertions);
    RunRecord run(const std::string& id) const;
    std::vector<RunRecord> runs() const;
    std::shared_ptr<const std::vector<SameAsAssertion>> results(const std::string& id) const;

    GoldStandard gold(const std::string& dataset_id) const;
    // Throws Conflict when the pair already carries a label and `supersede`
    // is false.
    GoldStandard add_label(const std::string& dataset_id, const LabelRecord& record, bool supersede);

    FusionRun add_fusion_run(const std::string& run_id, double threshold, std::vector<FusedEntity> entities);
    FusionRun fusion_run(const std::string& id) const;
    FusedEntity add_override(const std::string& fusion_id, const std::string& entity, const Override& change);

private:
    void replay();
    std::string next_id(const char* prefix, std::size_t n) const;

    std::filesystem::path root_;
    mutable std::mutex mutex_;
    std::vector<DatasetInfo> dataset_infos_;
    std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
    std::map<std::string, RunRecord> runs_;
    std::vector<std::string> run_order_;
    std::map<std::string, std::shared_ptr<const std::vector<SameAsAssertion>>> results_;
    std::map<std::string, GoldStandard> gold_;
    std::map<std::string, FusionRun> fusion_;
    std::size_t fusion_count_ = 0;
};

std::int64_t now_seconds();

}  // namespace kgdd
