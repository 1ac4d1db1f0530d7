#pragma once

// HTTP routes and CLI. Routing is a pure function of (state, request) so it
// can be exercised without sockets; serve() binds it to a listening port.

#include "spineviz/dataset.hpp"
#include "spineviz/layout.hpp"

#include <atomic>
#include <filesystem>
#include <future>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace spineviz {

// Immutable datasets keyed by id, loaded from `<data_dir>/<id>/manifest.json`
// on first use. Concurrent requests for one id share a single load.
class DatasetCache {
public:
    explicit DatasetCache(std::filesystem::path data_dir);

    const std::filesystem::path& data_dir() const noexcept { return data_dir_; }
    // Throws NotFoundError for ids that are malformed or absent on disk.
    std::shared_ptr<const SimulationDataset> get(const std::string& id);
    // Ids of dataset directories on disk, sorted.
    std::vector<std::string> list() const;
    std::size_t loads() const;  // completed disk loads, for tests

private:
    using Entry = std::shared_future<std::shared_ptr<const SimulationDataset>>;

    std::filesystem::path data_dir_;
    mutable std::mutex mutex_;
    std::map<std::string, Entry> entries_;
    std::size_t loads_ = 0;
};

// [A-Za-z0-9_.-]+, not starting with a dot.
bool valid_dataset_id(std::string_view id);

struct ServerState {
    explicit ServerState(std::filesystem::path data_dir) : cache(std::move(data_dir)) {}

    DatasetCache cache;
    std::atomic<int> port{0};  // bound port once serve() is listening
    ViewConfig defaults;
    std::mutex simulate_mutex;  // serializes writes of new datasets
};

struct Request {
    std::string method = "GET";
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

Response handle(ServerState& state, const Request& request);

// ViewConfig from scene query parameters on top of `defaults`; throws
// QueryError on malformed values.
ViewConfig view_config_from_query(const std::map<std::string, std::string>& query, const ViewConfig& defaults);

// Blocks until stop_server() is called or the listener fails. Port 0 picks
// a free port (published in state.port). Returns false if binding fails.
bool serve(ServerState& state, const std::string& host, int port);
void stop_server();

// Default data directory: $SPINEVIZ_DATA_DIR, else ./data/datasets.
std::filesystem::path default_data_dir();

// Exit codes: 0 ok, 1 validation issues, 2 usage, 3 dataset not found,
// 4 other runtime failure (I/O, divergence, bad input files).
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spineviz
