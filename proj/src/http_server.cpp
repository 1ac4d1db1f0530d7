#include "spineviz/service.hpp"

#include <httplib.h>

#include <atomic>

namespace spineviz {
namespace {

std::atomic<httplib::Server*> g_server{nullptr};

void bind(ServerState& state, httplib::Server& server) {
    auto forward = [&state](const httplib::Request& in, httplib::Response& out) {
        Request req;
        req.method = in.method;
        req.path = in.path;
        for (const auto& [k, v] : in.params) {
            req.query.emplace(k, v);  // first value wins
        }
        req.body = in.body;
        const Response res = handle(state, req);
        out.status = res.status;
        out.set_content(res.body, res.content_type);
    };
    server.Get(R"(/.*)", forward);
    server.Post(R"(/.*)", forward);
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
}

}  // namespace

bool serve(ServerState& state, const std::string& host, int port) {
    httplib::Server server;
    bind(state, server);
    if (port == 0) {
        port = server.bind_to_any_port(host);
        if (port <= 0) {
            return false;
        }
    } else if (!server.bind_to_port(host, port)) {
        return false;
    }
    g_server.store(&server);
    state.port = port;
    const bool ok = server.listen_after_bind();
    g_server.store(nullptr);
    return ok;
}

void stop_server() {
    if (auto* s = g_server.load()) {
        s->stop();
    }
}

}  // namespace spineviz
