#pragma once

// HTTP+JSON API over the store. All /api routes except /api/health need
// "Authorization: Bearer <token>". Runs execute on one background worker in
// submission order.
//
//   POST /api/datasets                         {name, format, content[, mapping]} | {name, synthetic}
//   GET  /api/datasets, /api/datasets/{id}
//   POST /api/datasets/{id}/labels             {idA, idB, verdict[, labeler, supersede]}
//   GET  /api/datasets/{id}/labels
//   GET  /api/datasets/{id}/feature-report     ?closedWorld
//   POST /api/runs                             {datasetId[, otherDatasetId], config[, recordFloor]} -> 202
//   GET  /api/runs, /api/runs/{id}
//   GET  /api/runs/{id}/candidates             ?minSim&offset&limit&unlabeledOnly
//   GET  /api/runs/{id}/eval                   ?threshold&closedWorld
//   GET  /api/runs/{id}/sweep                  ?thresholds=0.9,0.8&closedWorld
//   GET  /api/runs/{id}/classes                ?threshold&singletons
//   POST /api/fusion-runs                      {runId[, threshold, policy]}
//   GET  /api/fusion-runs/{id}
//   POST /api/fusion-runs/{id}/overrides       {entity, property, chosen[, actor]}

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "kgdd/store.hpp"

namespace httplib {
class Server;
}

namespace kgdd {

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::string token;
    std::filesystem::path data_dir = "kgdd-data";
};

class Server {
public:
    explicit Server(ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds the socket and returns the port. Throws Error when binding fails.
    int bind();
    // Serves until stop(). Calls bind() first if needed.
    void listen();
    // bind() and listen() on a background thread.
    void start();
    void stop();
    // Blocks until the run queue is empty and no run is executing.
    void wait_idle();

    Store& store() noexcept { return store_; }
    int port() const noexcept { return port_; }

private:
    void routes();
    void worker_loop();
    void execute(const std::string& run_id, std::optional<double> floor);

    ServerOptions options_;
    Store store_;
    std::unique_ptr<httplib::Server> http_;
    int port_ = -1;
    std::thread listener_;

    std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::condition_variable idle_cv_;
    std::deque<std::pair<std::string, std::optional<double>>> queue_;
    bool busy_ = false;
    bool stopping_ = false;
    std::thread worker_;
};

}  // namespace kgdd
