#pragma once

#include <optional>
#include <string>

namespace fleetrank {

// Parsers for LLM replies. A failed parse is a value (nullopt), never an
// exception: the evaluator falls back to a neutral grade and counts it.

// First standalone integer in [0, scale_max], scanning left to right.
// Standalone means the digit run is not glued to letters or other digits.
std::optional<int> parse_graded_reply(const std::string& reply, int scale_max);

// Case-insensitive: earliest of "yes" (-> 1) and "no" (-> 0) wins.
std::optional<int> parse_yesno_reply(const std::string& reply);

enum class PairwiseVerdict { Assistant1, Assistant2 };

// Case-insensitive: earliest of "assistant 1" / "assistant 2" decides; a
// reply that leads with a bare "1" or "2" token is also accepted.
std::optional<PairwiseVerdict> parse_pairwise_reply(const std::string& reply);

} // namespace fleetrank
