#include "kgdd/server.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "httplib.h"

#include "kgdd/formats.hpp"
#include "kgdd/synthetic.hpp"

namespace kgdd {

namespace {

using Request = httplib::Request;
using Response = httplib::Response;

void reply(Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void fail(Response& res, int status, const std::string& message) {
    reply(res, status, Json{{"error", message}});
}

// Runs a handler and maps exceptions to status codes.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const Request& req, Response& res) {
        try {
            f(req, res);
        } catch (const NotFound& e) {
            fail(res, 404, e.what());
        } catch (const Conflict& e) {
            fail(res, 409, e.what());
        } catch (const ConfigError& e) {
            fail(res, 400, e.what());
        } catch (const DataError& e) {
            fail(res, 400, e.what());
        } catch (const Json::exception& e) {
            fail(res, 400, std::string("malformed request: ") + e.what());
        } catch (const std::exception& e) {
            spdlog::error("{} {}: {}", req.method, req.path, e.what());
            fail(res, 500, e.what());
        }
    };
}

Json body_of(const Request& req) {
    Json j = Json::parse(req.body);
    if (!j.is_object()) throw ConfigError("request body must be a JSON object");
    return j;
}

double number_param(const Request& req, const std::string& name, double fallback) {
    if (!req.has_param(name)) return fallback;
    const std::string s = req.get_param_value(name);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw ConfigError("query parameter '" + name + "' is not a number: " + s);
    }
    return v;
}

std::size_t count_param(const Request& req, const std::string& name, std::size_t fallback) {
    if (!req.has_param(name)) return fallback;
    const std::string s = req.get_param_value(name);
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw ConfigError("query parameter '" + name + "' is not a count: " + s);
    }
    return v;
}

bool flag_param(const Request& req, const std::string& name, bool fallback) {
    if (!req.has_param(name)) return fallback;
    const std::string s = req.get_param_value(name);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("query parameter '" + name + "' must be true or false");
}

Json to_json(const DatasetInfo& d) {
    return Json{{"id", d.id}, {"name", d.name}, {"entityCount", d.entity_count}, {"createdAt", d.created_at}};
}

Json to_json(const RunRecord& r) {
    Json j{{"id", r.id}, {"datasetId", r.dataset_id}};
    if (!r.other_dataset_id.empty()) j["otherDatasetId"] = r.other_dataset_id;
    j["state"] = std::string(to_string(r.state));
    j["progress"] = r.state == RunState::done ? 1.0 : r.progress;
    j["createdAt"] = r.created_at;
    if (r.report) j["report"] = *r.report;
    if (!r.error.empty()) j["error"] = r.error;
    j["config"] = r.config;
    return j;
}

Json to_json(const IngestDiagnostics& d) {
    Json rejected = Json::array();
    for (const auto& issue : d.rejected) rejected.push_back({{"line", issue.line}, {"message", issue.message}});
    Json unmapped = Json::object();
    for (const auto& [k, v] : d.unmapped_predicates) unmapped[k] = v;
    return Json{{"rejected", rejected},
                {"unmappedPredicates", unmapped},
                {"skippedTriples", d.skipped_triples},
                {"warnings", d.warnings}};
}

Json labels_json(const GoldStandard& gold) {
    Json items = Json::array();
    std::map<CanonicalPair, const LabelRecord*> latest;
    for (const auto& r : gold.history()) latest.insert_or_assign(r.pair, &r);
    for (const auto& [pair, r] : latest) {
        items.push_back({{"idA", pair.first().str()},
                         {"idB", pair.second().str()},
                         {"verdict", std::string(to_string(r->verdict))},
                         {"labeler", r->labeler},
                         {"timestamp", r->timestamp}});
    }
    return Json{{"version", gold.version()}, {"labels", items}};
}

struct RunContext {
    RunRecord record;
    RunConfig config;
    std::shared_ptr<const std::vector<SameAsAssertion>> results;
    GoldStandard gold;
};

RunContext finished_run(Store& store, const std::string& id) {
    RunContext ctx{store.run(id), {}, nullptr, {}};
    if (ctx.record.state != RunState::done) {
        throw Conflict("run '" + id + "' is " + std::string(to_string(ctx.record.state)));
    }
    ctx.config = parse_run_config(ctx.record.config.dump());
    ctx.results = store.results(id);
    ctx.gold = store.gold(ctx.record.dataset_id);
    return ctx;
}

// Entities of the run's dataset(s); the second dataset's ids are skipped when
// the first already has them.
std::vector<Entity> run_entities(Store& store, const RunRecord& r) {
    std::vector<Entity> out = store.dataset(r.dataset_id)->entities;
    if (!r.other_dataset_id.empty()) {
        std::set<EntityId> seen;
        for (const auto& e : out) seen.insert(e.id);
        for (const auto& e : store.dataset(r.other_dataset_id)->entities) {
            if (seen.insert(e.id).second) out.push_back(e);
        }
    }
    return out;
}

std::vector<EquivalenceSet> run_classes(Store& store, const RunContext& ctx, double threshold) {
    const auto entities = run_entities(store, ctx.record);
    std::vector<EntityId> ids;
    ids.reserve(entities.size());
    for (const auto& e : entities) ids.push_back(e.id);
    const auto pairs = confirmed_pairs(*ctx.results, ctx.gold, threshold);
    return equivalence_classes(ids, pairs);
}

}  // namespace

Server::Server(ServerOptions options)
    : options_(std::move(options)), store_(options_.data_dir), http_(std::make_unique<httplib::Server>()) {
    if (options_.token.empty()) throw ConfigError("the server needs an access token");
    routes();
    worker_ = std::thread([this] { worker_loop(); });
}

Server::~Server() {
    stop();
    {
        std::lock_guard lock(queue_mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

int Server::bind() {
    if (port_ >= 0) return port_;
    if (options_.port == 0) {
        port_ = http_->bind_to_any_port(options_.host);
    } else {
        port_ = http_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
    }
    if (port_ < 0) {
        throw Error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    }
    return port_;
}

void Server::listen() {
    bind();
    spdlog::info("listening on http://{}:{}", options_.host, port_);
    http_->listen_after_bind();
}

void Server::start() {
    bind();
    listener_ = std::thread([this] { http_->listen_after_bind(); });
    http_->wait_until_ready();
}

void Server::stop() {
    http_->stop();
    if (listener_.joinable()) listener_.join();
}

void Server::wait_idle() {
    std::unique_lock lock(queue_mutex_);
    idle_cv_.wait(lock, [this] { return queue_.empty() && !busy_; });
}

void Server::worker_loop() {
    for (;;) {
        std::pair<std::string, std::optional<double>> job;
        {
            std::unique_lock lock(queue_mutex_);
            queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            job = queue_.front();
            queue_.pop_front();
            busy_ = true;
        }
        execute(job.first, job.second);
        {
            std::lock_guard lock(queue_mutex_);
            busy_ = false;
        }
        idle_cv_.notify_all();
    }
}

void Server::execute(const std::string& run_id, std::optional<double> floor) {
    try {
        const RunRecord record = store_.run(run_id);
        store_.update_run(run_id, RunState::running);
        const RunConfig config = parse_run_config(record.config.dump());
        RunOptions options;
        options.record_floor = floor;
        options.progress = [this, &run_id](double p) { store_.set_progress(run_id, p); };
        const auto data = store_.dataset(record.dataset_id);
        RunResult result;
        if (record.other_dataset_id.empty()) {
            result = run_dedup(*data, config.match, options);
        } else {
            result = run_linkage(*data, *store_.dataset(record.other_dataset_id), config.match, options);
        }
        store_.save_results(run_id, result.assertions);
        store_.update_run(run_id, RunState::done, to_json(result.report));
        spdlog::info("{} done: {} candidates, {} accepted", run_id, result.report.candidate_count,
                     result.report.accepted_count);
    } catch (const std::exception& e) {
        spdlog::warn("{} failed: {}", run_id, e.what());
        try {
            store_.update_run(run_id, RunState::failed, std::nullopt, e.what());
        } catch (const std::exception& again) {
            spdlog::error("cannot record failure of {}: {}", run_id, again.what());
        }
    }
}

void Server::routes() {
    auto& s = *http_;

    s.set_pre_routing_handler([this](const Request& req, Response& res) {
        if (req.path.rfind("/api/", 0) != 0 || req.path == "/api/health") {
            return httplib::Server::HandlerResponse::Unhandled;
        }
        if (req.get_header_value("Authorization") != "Bearer " + options_.token) {
            fail(res, 401, "missing or invalid bearer token");
            return httplib::Server::HandlerResponse::Handled;
        }
        return httplib::Server::HandlerResponse::Unhandled;
    });

    s.Get("/api/health", [](const Request&, Response& res) { reply(res, 200, Json{{"status", "ok"}}); });

    s.Post("/api/datasets", guarded([this](const Request& req, Response& res) {
        const Json body = body_of(req);
        const std::string name = body.value("name", "");
        if (body.contains("synthetic")) {
            const Json& sj = body.at("synthetic");
            SyntheticSpec spec;
            spec.entity_count = sj.value("entityCount", spec.entity_count);
            spec.duplicate_count = sj.value("duplicateCount", spec.duplicate_count);
            spec.seed = sj.value("seed", spec.seed);
            spec.validate();
            const SyntheticData data = generate_synthetic(spec);
            const DatasetInfo info = store_.add_dataset(data.dataset, name.empty() ? "synthetic" : name);
            for (const auto& r : data.gold.history()) store_.add_label(info.id, r, true);
            Json out = to_json(info);
            out["goldLabels"] = data.gold.size();
            reply(res, 201, out);
            return;
        }
        const std::string format = body.value("format", "csv");
        const std::string content = body.at("content").get<std::string>();
        const SchemaMapping mapping =
            body.contains("mapping") ? mapping_from_json(body.at("mapping")) : SchemaMapping::standard();
        IngestOptions options;
        options.dataset_id = name.empty() ? "dataset" : name;
        options.source = body.value("source", options.dataset_id);
        options.ingested = now_seconds();
        IngestDiagnostics diag;
        std::istringstream in(content);
        Dataset ds;
        if (format == "csv") {
            ds = parse_csv(in, mapping, options, &diag);
        } else if (format == "ntriples" || format == "turtle") {
            ds = parse_rdf(in, format == "turtle" ? RdfSyntax::turtle : RdfSyntax::ntriples, mapping, options,
                           &diag);
        } else {
            throw ConfigError("unknown format '" + format + "' (csv, ntriples, turtle)");
        }
        if (ds.entities.empty()) throw ValidationError("no entities could be ingested");
        Json out = to_json(store_.add_dataset(std::move(ds), name.empty() ? "dataset" : name));
        out["diagnostics"] = to_json(diag);
        reply(res, 201, out);
    }));

    s.Get("/api/datasets", guarded([this](const Request&, Response& res) {
        Json items = Json::array();
        for (const auto& d : store_.datasets()) items.push_back(to_json(d));
        reply(res, 200, items);
    }));

    s.Get(R"(/api/datasets/([^/]+))", guarded([this](const Request& req, Response& res) {
        const std::string id = req.matches[1];
        Json out = to_json(store_.dataset_info(id));
        const auto ds = store_.dataset(id);
        out["properties"] = ds->property_names();
        out["labelCount"] = store_.gold(id).size();
        reply(res, 200, out);
    }));

    s.Post(R"(/api/datasets/([^/]+)/labels)", guarded([this](const Request& req, Response& res) {
        const std::string id = req.matches[1];
        const Json body = body_of(req);
        const auto verdict = parse_verdict(body.at("verdict").get<std::string>());
        if (!verdict || *verdict == Verdict::unlabeled) {
            throw ValidationError("verdict must be same, different or related");
        }
        const EntityId a(body.at("idA").get<std::string>());
        const EntityId b(body.at("idB").get<std::string>());
        const LabelRecord record{canonical_pair(a, b), *verdict, body.value("labeler", "operator"), now_seconds()};
        const GoldStandard gold = store_.add_label(id, record, body.value("supersede", false));
        reply(res, 200, Json{{"idA", record.pair.first().str()},
                             {"idB", record.pair.second().str()},
                             {"verdict", std::string(to_string(*verdict))},
                             {"version", gold.version()}});
    }));

    s.Get(R"(/api/datasets/([^/]+)/labels)", guarded([this](const Request& req, Response& res) {
        const std::string id = req.matches[1];
        store_.dataset_info(id);
        reply(res, 200, labels_json(store_.gold(id)));
    }));

    s.Get(R"(/api/datasets/([^/]+)/feature-report)", guarded([this](const Request& req, Response& res) {
        const std::string id = req.matches[1];
        const auto ds = store_.dataset(id);
        const auto world = flag_param(req, "closedWorld", false) ? WorldAssumption::closed : WorldAssumption::open;
        Json rows = Json::array();
        for (const auto& row : feature_report(*ds, store_.gold(id), world)) rows.push_back(to_json(row));
        reply(res, 200, rows);
    }));

    s.Post("/api/runs", guarded([this](const Request& req, Response& res) {
        const Json body = body_of(req);
        const std::string dataset_id = body.at("datasetId").get<std::string>();
        const std::string other = body.value("otherDatasetId", "");
        const Json config = body.at("config");
        // Reject bad configs now rather than as a failed run.
        const RunConfig parsed = parse_run_config(config.dump());
        if ((parsed.match.mode == MatchMode::linkage) != !other.empty()) {
            throw ConfigError("linkage runs need otherDatasetId, deduplication runs must not have one");
        }
        std::optional<double> floor;
        if (body.contains("recordFloor")) floor = body.at("recordFloor").get<double>();
        const RunRecord record = store_.create_run(dataset_id, config, other);
        {
            std::lock_guard lock(queue_mutex_);
            queue_.emplace_back(record.id, floor);
        }
        queue_cv_.notify_one();
        reply(res, 202, Json{{"runId", record.id}, {"state", "pending"}});
    }));

    s.Get("/api/runs", guarded([this](const Request&, Response& res) {
        Json items = Json::array();
        for (const auto& r : store_.runs()) {
            Json j = to_json(r);
            j.erase("config");
            items.push_back(std::move(j));
        }
        reply(res, 200, items);
    }));

    s.Get(R"(/api/runs/([^/]+))", guarded([this](const Request& req, Response& res) {
        reply(res, 200, to_json(store_.run(req.matches[1])));
    }));

    s.Get(R"(/api/runs/([^/]+)/candidates)", guarded([this](const Request& req, Response& res) {
        const RunContext ctx = finished_run(store_, req.matches[1]);
        const double min_sim = number_param(req, "minSim", 0.0);
        const std::size_t offset = count_param(req, "offset", 0);
        const std::size_t limit = std::min<std::size_t>(count_param(req, "limit", 50), 1000);
        const bool unlabeled_only = flag_param(req, "unlabeledOnly", false);

        std::vector<SameAsAssertion> rows;
        for (const auto& a : *ctx.results) {
            if (a.sim < min_sim) continue;
            SameAsAssertion row = a;
            if (const auto v = ctx.gold.verdict(a.pair)) {
                if (unlabeled_only) continue;
                row.verdict = *v;
                row.decided_by = DecidedBy::human;
            }
            rows.push_back(std::move(row));
        }
        std::stable_sort(rows.begin(), rows.end(), [](const SameAsAssertion& x, const SameAsAssertion& y) {
            if (x.sim != y.sim) return x.sim > y.sim;
            return x.pair < y.pair;
        });
        Json items = Json::array();
        for (std::size_t i = offset; i < rows.size() && i < offset + limit; ++i) items.push_back(to_json(rows[i]));
        reply(res, 200, Json{{"total", rows.size()}, {"offset", offset}, {"limit", limit}, {"items", items}});
    }));

    s.Get(R"(/api/runs/([^/]+)/eval)", guarded([this](const Request& req, Response& res) {
        const RunContext ctx = finished_run(store_, req.matches[1]);
        const double threshold = number_param(req, "threshold", ctx.config.match.accept_threshold);
        const bool closed = flag_param(req, "closedWorld", ctx.config.world == WorldAssumption::closed);
        const auto accepted = accepted_pairs(*ctx.results, threshold);
        Json out = to_json(score(accepted, ctx.gold, closed ? WorldAssumption::closed : WorldAssumption::open));
        out["threshold"] = threshold;
        out["goldVersion"] = ctx.gold.version();
        reply(res, 200, out);
    }));

    s.Get(R"(/api/runs/([^/]+)/sweep)", guarded([this](const Request& req, Response& res) {
        const RunContext ctx = finished_run(store_, req.matches[1]);
        std::vector<double> thresholds = ctx.config.sweep;
        if (req.has_param("thresholds")) {
            thresholds.clear();
            std::istringstream list(req.get_param_value("thresholds"));
            for (std::string item; std::getline(list, item, ',');) {
                double v = 0.0;
                auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
                if (ec != std::errc{} || p != item.data() + item.size()) {
                    throw ConfigError("bad threshold '" + item + "'");
                }
                thresholds.push_back(v);
            }
        }
        const bool closed = flag_param(req, "closedWorld", ctx.config.world == WorldAssumption::closed);
        Json items = Json::array();
        for (const auto& [t, report] : threshold_sweep(*ctx.results, ctx.gold, thresholds,
                                                       closed ? WorldAssumption::closed : WorldAssumption::open)) {
            Json j = to_json(report);
            j["threshold"] = t;
            items.push_back(std::move(j));
        }
        reply(res, 200, items);
    }));

    s.Get(R"(/api/runs/([^/]+)/classes)", guarded([this](const Request& req, Response& res) {
        const RunContext ctx = finished_run(store_, req.matches[1]);
        const double threshold = number_param(req, "threshold", ctx.config.match.accept_threshold);
        const bool singletons = flag_param(req, "singletons", false);
        Json items = Json::array();
        for (const auto& c : run_classes(store_, ctx, threshold)) {
            if (singletons || c.members.size() > 1) items.push_back(to_json(c));
        }
        reply(res, 200, items);
    }));

    s.Post("/api/fusion-runs", guarded([this](const Request& req, Response& res) {
        const Json body = body_of(req);
        const RunContext ctx = finished_run(store_, body.at("runId").get<std::string>());
        const double threshold = body.value("threshold", ctx.config.match.accept_threshold);
        const FusionPolicy policy = body.contains("policy") ? fusion_from_json(body.at("policy")) : ctx.config.fusion;
        const auto entities = run_entities(store_, ctx.record);
        policy.validate(entities);
        std::vector<FusedEntity> fused;
        for (const auto& c : run_classes(store_, ctx, threshold)) {
            if (c.members.size() > 1) fused.push_back(fuse_class(c, entities, policy));
        }
        const FusionRun run = store_.add_fusion_run(ctx.record.id, threshold, std::move(fused));
        std::size_t unresolved = 0;
        for (const auto& f : run.entities) unresolved += f.unresolved.empty() ? 0 : 1;
        reply(res, 201, Json{{"id", run.id},
                             {"runId", run.run_id},
                             {"threshold", run.threshold},
                             {"entityCount", run.entities.size()},
                             {"unresolvedCount", unresolved}});
    }));

    s.Get(R"(/api/fusion-runs/([^/]+))", guarded([this](const Request& req, Response& res) {
        const FusionRun run = store_.fusion_run(req.matches[1]);
        Json entities = Json::array();
        for (const auto& f : run.entities) entities.push_back(to_json(f));
        reply(res, 200, Json{{"id", run.id},
                             {"runId", run.run_id},
                             {"threshold", run.threshold},
                             {"createdAt", run.created_at},
                             {"entities", entities}});
    }));

    s.Post(R"(/api/fusion-runs/([^/]+)/overrides)", guarded([this](const Request& req, Response& res) {
        const Json body = body_of(req);
        const Override change{body.at("property").get<std::string>(), body.at("chosen").get<std::string>(),
                              body.value("actor", "operator")};
        const FusedEntity f = store_.add_override(req.matches[1], body.at("entity").get<std::string>(), change);
        reply(res, 200, to_json(f));
    }));
}

}  // namespace kgdd
