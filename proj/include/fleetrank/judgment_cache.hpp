#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "fleetrank/types.hpp"

namespace fleetrank {

struct JudgmentKey {
    std::string model_name;
    std::string strategy_kind;
    std::string query_id;
    std::string passage_id;

    auto operator<=>(const JudgmentKey&) const = default;
};

// Write-once store of per-passage judgments, safe under concurrent readers
// and writers. When constructed with a path, existing records are loaded and
// every accepted insert is appended to the same file (JSON lines), so a
// later run resumes where the previous one stopped.
class JudgmentCache {
public:
    JudgmentCache() = default;
    explicit JudgmentCache(const std::filesystem::path& path);

    std::optional<RelevanceJudgment> lookup(const JudgmentKey& key) const;

    // First write wins: returns false (and changes nothing) when the key is
    // already present, so racing writers can never leave conflicting entries.
    bool insert(const JudgmentKey& key, const RelevanceJudgment& judgment);

    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::map<JudgmentKey, RelevanceJudgment> entries_;
    std::filesystem::path path_; // empty = in-memory only
};

} // namespace fleetrank
