#pragma once

#include <string>

#include "fleetrank/prompts.hpp"

namespace fleetrank {

// Connection settings for a chat-completions style endpoint. Temperature is
// pinned to 0 and sampling stays off; neither is a knob, so neither is a
// field. Credentials travel as the NAME of an environment variable; the
// value itself never appears in config files or logs.
struct LlmProfile {
    std::string endpoint;   // e.g. http://127.0.0.1:8089/v1/chat/completions
    std::string model_name;
    enum class Mode { Completion, Chat } mode = Mode::Chat;
    int max_reply_tokens = 64;
    int retry_limit = 3;         // additional attempts after the first
    std::string credentials_env; // env var holding a bearer token; empty = none
    double timeout_seconds = 30.0;
    double backoff_initial_ms = 100.0; // doubled per retry

    void validate() const;
};

struct CompletionResult {
    std::string text;
    int attempts = 0; // requests actually sent, including the successful one
};

class LlmClient {
public:
    explicit LlmClient(LlmProfile profile);

    // Sends the prompt and returns the reply text. Transport failures and
    // non-success statuses are retried with exponential backoff up to
    // retry_limit; after that, TransportError or EndpointError respectively.
    // Chat mode sends the message list as-is; completion mode sends one user
    // message holding PromptDoc::flattened().
    CompletionResult complete(const PromptDoc& prompt) const;

    const LlmProfile& profile() const { return profile_; }

private:
    LlmProfile profile_;
    std::string base_;   // scheme://host:port
    std::string path_;
    std::string bearer_; // resolved at construction
};

} // namespace fleetrank
