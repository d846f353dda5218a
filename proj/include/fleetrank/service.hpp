#pragma once

#include <memory>
#include <string>

#include "fleetrank/pipeline.hpp"

namespace fleetrank {

// HTTP front end over Pipeline::search. POST /search takes
// {"query_text": ..., "query_id": optional} and returns exactly
// search_result_to_json; GET /healthz reports liveness. Malformed requests
// get a 400 with {"error": {"code", "message"}}.
class SearchService {
public:
    explicit SearchService(const Pipeline& pipeline);
    ~SearchService();

    // Binds and serves on a background thread; throws on bind failure.
    // With port 0 an ephemeral port is chosen; see port().
    void start(const std::string& host, int port);

    // Stops accepting and drains in-flight requests. Idempotent.
    void stop();

    int port() const { return port_; }

private:
    struct Impl; // keeps httplib out of this header
    const Pipeline& pipeline_;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

} // namespace fleetrank
