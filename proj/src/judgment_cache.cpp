#include "fleetrank/judgment_cache.hpp"

#include <fstream>

#include <json.hpp>

#include "fleetrank/errors.hpp"

namespace fleetrank {

using nlohmann::json;

JudgmentCache::JudgmentCache(const std::filesystem::path& path) : path_(path) {
    std::ifstream in(path_);
    if (!in) return; // fresh cache; the file appears on first insert
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded())
            throw ParseError("judgment cache holds malformed JSON", line_no);
        try {
            JudgmentKey key{record.at("model").get<std::string>(),
                            record.at("strategy").get<std::string>(),
                            record.at("query_id").get<std::string>(),
                            record.at("passage_id").get<std::string>()};
            RelevanceJudgment judgment{key.query_id, key.passage_id,
                                       record.at("grade").get<int>(),
                                       record.at("scale_max").get<int>(),
                                       record.at("raw_reply").get<std::string>()};
            entries_.emplace(std::move(key), std::move(judgment));
        } catch (const json::exception& e) {
            throw ParseError(std::string("judgment cache record: ") + e.what(), line_no);
        }
    }
}

std::optional<RelevanceJudgment> JudgmentCache::lookup(const JudgmentKey& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

bool JudgmentCache::insert(const JudgmentKey& key, const RelevanceJudgment& judgment) {
    std::lock_guard lock(mu_);
    auto [it, inserted] = entries_.emplace(key, judgment);
    if (!inserted) return false;
    if (!path_.empty()) {
        std::ofstream out(path_, std::ios::app);
        if (!out) throw IoError("cannot append to judgment cache: " + path_.string());
        json record = {
            {"model", key.model_name},   {"strategy", key.strategy_kind},
            {"query_id", key.query_id},  {"passage_id", key.passage_id},
            {"grade", judgment.grade},   {"scale_max", judgment.scale_max},
            {"raw_reply", judgment.raw_reply},
        };
        out << record.dump() << "\n";
    }
    return true;
}

std::size_t JudgmentCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

} // namespace fleetrank
