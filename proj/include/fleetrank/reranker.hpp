#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fleetrank/bm25.hpp"
#include "fleetrank/types.hpp"

namespace fleetrank {

struct RerankerSpec {
    enum class Kind { InProcessBm25, StaticRun, Remote };

    std::string source_id;
    Kind kind = Kind::InProcessBm25;
    std::string endpoint;            // remote only
    std::filesystem::path run_path;  // static-run only
    double timeout_seconds = 30.0;   // remote transport deadline
    int depth = 100;                 // candidates actually reranked; the rest keep their spot

    void validate() const;
};

const char* reranker_kind_name(RerankerSpec::Kind kind);
RerankerSpec::Kind reranker_kind_from_name(const std::string& name);

// The configured rerankers plus everything they need to run: the corpus for
// passage text, the BM25 index for the in-process kind, and the static run
// files preloaded so a missing file fails at startup, not mid-query.
class Fleet {
public:
    Fleet(std::vector<RerankerSpec> specs, const Corpus* corpus, const InvertedIndex* index,
          Bm25Params params);

    // Reorders the candidates per the spec's kind. The output is always a
    // permutation of the input passage ids. Only the top `depth` entries are
    // reranked; later entries are appended in their original order with a
    // score one below the reranked minimum.
    RankedList rerank(const RerankerSpec& spec, const Query& query,
                      const RankedList& candidates) const;

    // Runs every reranker concurrently. Failures are recorded per source and
    // never abort the query; zero survivors raise FleetExhaustedError.
    // Candidates come back sorted by source_id regardless of finish order.
    RunSet fan_out(const Query& query, const RankedList& candidates) const;

    const std::vector<RerankerSpec>& specs() const { return specs_; }

private:
    RankedList rerank_bm25(const RerankerSpec& spec, const Query& query,
                           std::vector<RankedEntry> head) const;
    RankedList rerank_static(const RerankerSpec& spec, const Query& query,
                             std::vector<RankedEntry> head) const;
    RankedList rerank_remote(const RerankerSpec& spec, const Query& query,
                             std::vector<RankedEntry> head) const;

    std::vector<RerankerSpec> specs_;
    const Corpus* corpus_;
    const InvertedIndex* index_;
    Bm25Params params_;
    // source_id -> query_id -> stored ranking
    std::map<std::string, std::map<std::string, RankedList>> static_runs_;
};

} // namespace fleetrank
