#include "kgdd/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <iterator>
#include <sstream>

#include <spdlog/spdlog.h>

#include "kgdd/error.hpp"
#include "kgdd/formats.hpp"

namespace kgdd {

namespace fs = std::filesystem;

std::int64_t now_seconds() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string_view to_string(RunState s) {
    switch (s) {
        case RunState::pending: return "pending";
        case RunState::running: return "running";
        case RunState::done: return "done";
        case RunState::failed: return "failed";
    }
    return "pending";
}

namespace {

std::optional<RunState> parse_run_state(std::string_view s) {
    for (auto st : {RunState::pending, RunState::running, RunState::done, RunState::failed}) {
        if (to_string(st) == s) return st;
    }
    return std::nullopt;
}

void write_all(int fd, const std::string& data, const fs::path& path) {
    std::size_t off = 0;
    while (off < data.size()) {
        const auto n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            ::close(fd);
            throw Error("write failed: " + path.string());
        }
        off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        ::close(fd);
        throw Error("fsync failed: " + path.string());
    }
    ::close(fd);
}

void sync_dir(const fs::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
}

void append_durable(const fs::path& path, const std::string& line) {
    const bool fresh = !fs::exists(path);
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw Error("cannot open " + path.string());
    write_all(fd, line + "\n", path);
    if (fresh) sync_dir(path.parent_path());
}

// Whole-file write through a temporary and a rename.
void write_durable(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw Error("cannot open " + tmp.string());
    write_all(fd, content, tmp);
    fs::rename(tmp, path);
    sync_dir(path.parent_path());
}

// Every record is appended together with its newline, so a file that does
// not end in one holds a torn last append. Cut it off before anything is
// appended behind it.
void drop_torn_tail(const fs::path& path) {
    if (!fs::exists(path)) return;
    const auto size = fs::file_size(path);
    if (size == 0) return;
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (content.back() == '\n') return;
    const auto nl = content.rfind('\n');
    spdlog::warn("store: dropping torn last record of {}", path.string());
    fs::resize_file(path, nl == std::string::npos ? 0 : nl + 1);
}

std::vector<Json> read_jsonl(const fs::path& path) {
    drop_torn_tail(path);
    std::vector<Json> out;
    std::ifstream in(path);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const Json::exception&) {
            // Corrupt records are skipped rather than blocking startup.
            spdlog::warn("store: skipping unreadable line {} of {}", n, path.string());
        }
    }
    return out;
}

Json run_to_json(const RunRecord& r) {
    Json j = Json::object();
    j["id"] = r.id;
    j["datasetId"] = r.dataset_id;
    if (!r.other_dataset_id.empty()) j["otherDatasetId"] = r.other_dataset_id;
    j["config"] = r.config;
    j["state"] = std::string(to_string(r.state));
    j["report"] = r.report ? *r.report : Json(nullptr);
    j["error"] = r.error;
    j["createdAt"] = r.created_at;
    return j;
}

}  // namespace

Store::Store(fs::path root) : root_(std::move(root)) {
    for (const char* d : {"", "datasets", "gold", "runs", "fusion"}) fs::create_directories(root_ / d);
    replay();
}

std::string Store::next_id(const char* prefix, std::size_t n) const { return prefix + std::to_string(n + 1); }

void Store::replay() {
    for (const auto& j : read_jsonl(root_ / "datasets.jsonl")) {
        DatasetInfo info{j.at("id"), j.at("name"), j.at("entityCount"), j.at("createdAt")};
        std::ifstream in(root_ / "datasets" / (info.id + ".csv"));
        IngestOptions opts;
        opts.dataset_id = info.id;
        SchemaMapping identity;
        identity.geo_sentinel = false;
        auto ds = std::make_shared<Dataset>(parse_csv(in, identity, opts));
        datasets_[info.id] = std::move(ds);
        dataset_infos_.push_back(std::move(info));
    }
    for (const auto& j : read_jsonl(root_ / "runs.jsonl")) {
        RunRecord r;
        r.id = j.at("id");
        r.dataset_id = j.at("datasetId");
        r.other_dataset_id = j.value("otherDatasetId", "");
        r.config = j.at("config");
        r.state = parse_run_state(j.at("state").get<std::string>()).value_or(RunState::failed);
        if (!j.at("report").is_null()) r.report = j.at("report");
        r.error = j.at("error");
        r.created_at = j.at("createdAt");
        if (!runs_.count(r.id)) run_order_.push_back(r.id);
        runs_[r.id] = std::move(r);
    }
    for (auto& [id, r] : runs_) {
        if (r.state == RunState::done) {
            std::ifstream in(root_ / "runs" / (id + ".jsonl"));
            results_[id] = std::make_shared<const std::vector<SameAsAssertion>>(read_results(in));
        } else if (r.state == RunState::pending || r.state == RunState::running) {
            // The worker that owned it is gone.
            r.state = RunState::failed;
            r.error = "interrupted by a service restart";
            append_durable(root_ / "runs.jsonl", run_to_json(r).dump());
        }
    }
    for (const auto& info : dataset_infos_) {
        const fs::path path = root_ / "gold" / (info.id + ".csv");
        if (fs::exists(path)) {
            drop_torn_tail(path);
            std::ifstream in(path);
            gold_[info.id] = read_gold(in);
        }
    }
    for (const auto& j : read_jsonl(root_ / "fusion.jsonl")) {
        FusionRun f;
        f.id = j.at("id");
        f.run_id = j.at("runId");
        f.threshold = j.at("threshold");
        f.created_at = j.at("createdAt");
        for (const auto& e : read_jsonl(root_ / "fusion" / (f.id + ".jsonl"))) f.entities.push_back(fused_from_json(e));
        fusion_[f.id] = std::move(f);
        ++fusion_count_;
    }
    for (const auto& j : read_jsonl(root_ / "overrides.jsonl")) {
        auto it = fusion_.find(j.at("fusionId").get<std::string>());
        if (it == fusion_.end()) continue;
        const Override o{j.at("property"), j.at("chosen"), j.at("actor")};
        for (auto& e : it->second.entities) {
            if (e.id.str() == j.at("entity").get<std::string>()) e = resolve_overrides(e, std::span(&o, 1));
        }
    }
    spdlog::info("store: {} datasets, {} runs, {} fusion runs loaded from {}", datasets_.size(), runs_.size(),
                 fusion_.size(), root_.string());
}

DatasetInfo Store::add_dataset(Dataset dataset, const std::string& name) {
    std::lock_guard lock(mutex_);
    DatasetInfo info{next_id("ds-", dataset_infos_.size()), name, dataset.entities.size(), now_seconds()};
    dataset.id = info.id;
    std::ostringstream csv;
    write_csv(dataset, csv);
    write_durable(root_ / "datasets" / (info.id + ".csv"), csv.str());
    append_durable(root_ / "datasets.jsonl", Json{{"id", info.id},
                                                  {"name", info.name},
                                                  {"entityCount", info.entity_count},
                                                  {"createdAt", info.created_at}}
                                                 .dump());
    datasets_[info.id] = std::make_shared<const Dataset>(std::move(dataset));
    dataset_infos_.push_back(info);
    return info;
}

std::vector<DatasetInfo> Store::datasets() const {
    std::lock_guard lock(mutex_);
    return dataset_infos_;
}

DatasetInfo Store::dataset_info(const std::string& id) const {
    std::lock_guard lock(mutex_);
    for (const auto& i : dataset_infos_) {
        if (i.id == id) return i;
    }
    throw NotFound("unknown dataset '" + id + "'");
}

std::shared_ptr<const Dataset> Store::dataset(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = datasets_.find(id);
    if (it == datasets_.end()) throw NotFound("unknown dataset '" + id + "'");
    return it->second;
}

RunRecord Store::create_run(const std::string& dataset_id, Json config, const std::string& other_dataset_id) {
    std::lock_guard lock(mutex_);
    for (const auto& id : {dataset_id, other_dataset_id}) {
        if (!id.empty() && !datasets_.count(id)) throw NotFound("unknown dataset '" + id + "'");
    }
    RunRecord r;
    r.id = next_id("run-", run_order_.size());
    r.dataset_id = dataset_id;
    r.other_dataset_id = other_dataset_id;
    r.config = std::move(config);
    r.created_at = now_seconds();
    append_durable(root_ / "runs.jsonl", run_to_json(r).dump());
    runs_[r.id] = r;
    run_order_.push_back(r.id);
    return r;
}

void Store::update_run(const std::string& id, RunState state, std::optional<Json> report, std::string error) {
    std::lock_guard lock(mutex_);
    const auto it = runs_.find(id);
    if (it == runs_.end()) throw NotFound("unknown run '" + id + "'");
    RunRecord& r = it->second;
    if (r.state == RunState::done || r.state == RunState::failed || state < r.state) {
        throw Error("run " + id + " cannot move from " + std::string(to_string(r.state)) + " to " +
                    std::string(to_string(state)));
    }
    RunRecord next = r;
    next.state = state;
    if (report) next.report = std::move(report);
    next.error = std::move(error);
    if (state == RunState::done) next.progress = 1.0;
    append_durable(root_ / "runs.jsonl", run_to_json(next).dump());
    r = std::move(next);
}

void Store::set_progress(const std::string& id, double progress) {
    std::lock_guard lock(mutex_);
    const auto it = runs_.find(id);
    if (it != runs_.end()) it->second.progress = progress;
}

void Store::save_results(const std::string& id, const std::vector<SameAsAssertion>& assertions) {
    std::ostringstream out;
    write_results(assertions, out);
    write_durable(root_ / "runs" / (id + ".jsonl"), out.str());
    std::lock_guard lock(mutex_);
    results_[id] = std::make_shared<const std::vector<SameAsAssertion>>(assertions);
}

RunRecord Store::run(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = runs_.find(id);
    if (it == runs_.end()) throw NotFound("unknown run '" + id + "'");
    return it->second;
}

std::vector<RunRecord> Store::runs() const {
    std::lock_guard lock(mutex_);
    std::vector<RunRecord> out;
    for (const auto& id : run_order_) out.push_back(runs_.at(id));
    return out;
}

std::shared_ptr<const std::vector<SameAsAssertion>> Store::results(const std::string& id) const {
    std::lock_guard lock(mutex_);
    if (!runs_.count(id)) throw NotFound("unknown run '" + id + "'");
    const auto it = results_.find(id);
    if (it == results_.end()) throw NotFound("run '" + id + "' has no results yet");
    return it->second;
}

GoldStandard Store::gold(const std::string& dataset_id) const {
    std::lock_guard lock(mutex_);
    if (!datasets_.count(dataset_id)) throw NotFound("unknown dataset '" + dataset_id + "'");
    const auto it = gold_.find(dataset_id);
    return it == gold_.end() ? GoldStandard{} : it->second;
}

GoldStandard Store::add_label(const std::string& dataset_id, const LabelRecord& record, bool supersede) {
    std::lock_guard lock(mutex_);
    const auto ds = datasets_.find(dataset_id);
    if (ds == datasets_.end()) throw NotFound("unknown dataset '" + dataset_id + "'");
    for (const auto& id : {record.pair.first(), record.pair.second()}) {
        if (!ds->second->find(id)) throw NotFound("dataset '" + dataset_id + "' has no entity '" + id.str() + "'");
    }
    GoldStandard& gold = gold_[dataset_id];
    if (!supersede && gold.verdict(record.pair)) {
        throw Conflict("pair " + record.pair.first().str() + ", " + record.pair.second().str() +
                       " is already labeled; set supersede to replace the label");
    }
    GoldStandard next = gold.with(record);
    const fs::path path = root_ / "gold" / (dataset_id + ".csv");
    if (!fs::exists(path) || fs::file_size(path) == 0) append_durable(path, gold_header());
    append_durable(path, gold_row(record));
    gold = std::move(next);
    return gold;
}

FusionRun Store::add_fusion_run(const std::string& run_id, double threshold, std::vector<FusedEntity> entities) {
    std::lock_guard lock(mutex_);
    if (!runs_.count(run_id)) throw NotFound("unknown run '" + run_id + "'");
    FusionRun f{next_id("fusion-", fusion_count_), run_id, threshold, now_seconds(), std::move(entities)};
    std::string lines;
    for (const auto& e : f.entities) lines += to_json(e).dump() + "\n";
    write_durable(root_ / "fusion" / (f.id + ".jsonl"), lines);
    append_durable(root_ / "fusion.jsonl", Json{{"id", f.id},
                                                {"runId", f.run_id},
                                                {"threshold", f.threshold},
                                                {"createdAt", f.created_at}}
                                               .dump());
    fusion_[f.id] = f;
    ++fusion_count_;
    return f;
}

FusionRun Store::fusion_run(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = fusion_.find(id);
    if (it == fusion_.end()) throw NotFound("unknown fusion run '" + id + "'");
    return it->second;
}

FusedEntity Store::add_override(const std::string& fusion_id, const std::string& entity, const Override& change) {
    std::lock_guard lock(mutex_);
    const auto it = fusion_.find(fusion_id);
    if (it == fusion_.end()) throw NotFound("unknown fusion run '" + fusion_id + "'");
    for (auto& e : it->second.entities) {
        if (e.id.str() != entity) continue;
        FusedEntity next = resolve_overrides(e, std::span(&change, 1));
        append_durable(root_ / "overrides.jsonl", Json{{"fusionId", fusion_id},
                                                       {"entity", entity},
                                                       {"property", change.property},
                                                       {"chosen", change.chosen},
                                                       {"actor", change.actor},
                                                       {"at", now_seconds()}}
                                                      .dump());
        e = std::move(next);
        return e;
    }
    throw NotFound("fusion run '" + fusion_id + "' has no entity '" + entity + "'");
}

}  // namespace kgdd
