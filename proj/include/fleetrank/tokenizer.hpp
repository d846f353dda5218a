#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fleetrank {

// Tokenizer used for corpus stats and BM25 scoring: lowercase, split on any
// non-alphanumeric byte, drop empty tokens. Alphanumeric means ASCII
// [0-9A-Za-z]; every other byte (including multi-byte UTF-8 sequences)
// separates tokens. No stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view text);

// Token count under the same rules, without materializing the tokens.
std::size_t token_count(std::string_view text);

// Unique query terms in first-occurrence order. BM25 scores each distinct
// term once regardless of how often it repeats in the query.
std::vector<std::string> unique_terms(std::string_view text);

} // namespace fleetrank
