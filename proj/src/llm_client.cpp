#include "fleetrank/llm_client.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fleetrank/errors.hpp"

namespace fleetrank {

using nlohmann::json;

void LlmProfile::validate() const {
    if (endpoint.empty()) throw ValidationError("llm endpoint must be set");
    if (model_name.empty()) throw ValidationError("llm model_name must be set");
    if (max_reply_tokens < 1) throw ValidationError("max_reply_tokens must be >= 1");
    if (retry_limit < 0) throw ValidationError("retry_limit must be >= 0");
    if (timeout_seconds <= 0) throw ValidationError("timeout_seconds must be positive");
}

namespace {

// scheme://host[:port]/path -> (scheme://host:port, /path)
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos)
        throw ValidationError("endpoint must be an absolute URL: " + url);
    std::size_t slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

} // namespace

LlmClient::LlmClient(LlmProfile profile) : profile_(std::move(profile)) {
    profile_.validate();
    std::tie(base_, path_) = split_endpoint(profile_.endpoint);
    if (!profile_.credentials_env.empty()) {
        const char* value = std::getenv(profile_.credentials_env.c_str());
        if (!value)
            throw ValidationError("credentials environment variable is not set: " +
                                  profile_.credentials_env);
        bearer_ = value;
    }
}

CompletionResult LlmClient::complete(const PromptDoc& prompt) const {
    json messages = json::array();
    if (profile_.mode == LlmProfile::Mode::Completion) {
        messages.push_back({{"role", "user"}, {"content", prompt.flattened()}});
    } else {
        for (const auto& m : prompt.messages)
            messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    json request = {
        {"model", profile_.model_name},
        {"messages", messages},
        {"temperature", 0},
        {"max_tokens", profile_.max_reply_tokens},
    };
    const std::string body = request.dump();

    CompletionResult result;
    std::string last_error;
    bool endpoint_fault = false;
    for (int attempt = 0; attempt <= profile_.retry_limit; ++attempt) {
        if (attempt > 0) {
            double ms = profile_.backoff_initial_ms * static_cast<double>(1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
        }
        ++result.attempts;

        httplib::Client client(base_);
        client.set_connection_timeout(std::chrono::duration<double>(profile_.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(profile_.timeout_seconds));
        httplib::Headers headers;
        if (!bearer_.empty()) headers.emplace("Authorization", "Bearer " + bearer_);

        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            endpoint_fault = false;
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            endpoint_fault = true;
            last_error = "endpoint returned status " + std::to_string(res->status);
            continue;
        }
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded()) {
            endpoint_fault = true;
            last_error = "endpoint returned unparseable JSON";
            continue;
        }
        const json* content = nullptr;
        if (reply.contains("choices") && reply["choices"].is_array() &&
            !reply["choices"].empty()) {
            const json& first = reply["choices"][0];
            if (first.contains("message") && first["message"].contains("content"))
                content = &first["message"]["content"];
            else if (first.contains("text"))
                content = &first["text"];
        }
        if (!content || !content->is_string()) {
            endpoint_fault = true;
            last_error = "endpoint reply carries no text content";
            continue;
        }
        result.text = content->get<std::string>();
        return result;
    }

    std::string what = "llm call failed after " + std::to_string(result.attempts) +
                       " attempt(s): " + last_error;
    if (endpoint_fault) throw EndpointError(what);
    throw TransportError(what);
}

} // namespace fleetrank
