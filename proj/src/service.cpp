#include "fleetrank/service.hpp"

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fleetrank/errors.hpp"

namespace fleetrank {

using nlohmann::json;

struct SearchService::Impl {
    httplib::Server server;
    std::thread runner;
};

namespace {

void fail(httplib::Response& res, int status, const std::string& code,
          const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", {{"code", code}, {"message", message}}}}.dump(),
                    "application/json");
}

} // namespace

SearchService::SearchService(const Pipeline& pipeline)
    : pipeline_(pipeline), impl_(std::make_unique<Impl>()) {
    impl_->server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(json{{"status", "ok"}}.dump(), "application/json");
    });
    impl_->server.Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded()) {
            fail(res, 400, "bad_json", "request body is not valid JSON");
            return;
        }
        if (!body.contains("query_text") || !body["query_text"].is_string()) {
            fail(res, 400, "missing_field", "query_text is required");
            return;
        }
        Query query{body.value("query_id", "adhoc"), body["query_text"].get<std::string>()};
        try {
            SearchResult result = pipeline_.search(query);
            res.set_content(search_result_to_json(result), "application/json");
        } catch (const Error& e) {
            fail(res, 502, "pipeline_error", e.what());
        }
    });
}

SearchService::~SearchService() { stop(); }

void SearchService::start(const std::string& host, int port) {
    if (impl_->runner.joinable()) throw ValidationError("service is already running");
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
        if (port_ < 0) throw IoError("cannot bind " + host + " to an ephemeral port");
    } else {
        if (!impl_->server.bind_to_port(host, port))
            throw IoError("cannot bind " + host + ":" + std::to_string(port));
        port_ = port;
    }
    impl_->runner = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void SearchService::stop() {
    if (!impl_) return;
    if (impl_->server.is_running()) impl_->server.stop();
    if (impl_->runner.joinable()) impl_->runner.join();
}

} // namespace fleetrank
