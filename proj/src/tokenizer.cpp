#include "fleetrank/tokenizer.hpp"

#include <cctype>
#include <unordered_set>

namespace fleetrank {

namespace {

inline bool is_alnum_ascii(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline char lower_ascii(unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (is_alnum_ascii(c)) {
            current.push_back(lower_ascii(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::size_t token_count(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        if (is_alnum_ascii(c)) {
            if (!in_token) {
                ++count;
                in_token = true;
            }
        } else {
            in_token = false;
        }
    }
    return count;
}

std::vector<std::string> unique_terms(std::string_view text) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (auto& tok : tokenize(text)) {
        if (seen.insert(tok).second) out.push_back(tok);
    }
    return out;
}

} // namespace fleetrank
