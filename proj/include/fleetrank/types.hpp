#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fleetrank {

struct Query {
    std::string id;
    std::string text;
};

struct Passage {
    std::string id;
    std::optional<std::string> title;
    std::string text;

    // Text used for indexing and for reranker/evaluator payloads:
    // title prepended when present, plain text otherwise.
    std::string indexed_text() const {
        if (title && !title->empty()) return *title + " " + text;
        return text;
    }
};

struct CorpusStats {
    std::size_t doc_count = 0;
    std::map<std::string, std::size_t> doc_lengths; // tokens per passage
    double avgdl = 0.0;
};

struct Corpus {
    std::map<std::string, Passage> passages; // keyed by passage id
    CorpusStats stats;

    bool contains(const std::string& id) const { return passages.count(id) > 0; }
    const Passage& at(const std::string& id) const { return passages.at(id); }
    std::size_t size() const { return passages.size(); }
};

// Human relevance grades. Absent pair means grade 0.
struct Qrels {
    std::map<std::pair<std::string, std::string>, int> grades;

    int grade(const std::string& query_id, const std::string& passage_id) const {
        auto it = grades.find({query_id, passage_id});
        return it == grades.end() ? 0 : it->second;
    }
};

struct RankedEntry {
    std::string passage_id;
    double score = 0.0;

    bool operator==(const RankedEntry&) const = default;
};

// One reranker's ordered output for one query. Scores non-increasing,
// passage ids unique.
struct RankedList {
    std::string query_id;
    std::string source_id;
    std::vector<RankedEntry> entries;

    bool operator==(const RankedList&) const = default;
};

// Per-query relevance gains for metric computation. Absent id means 0.
struct GainTable {
    std::map<std::string, double> gains;
    int scale_max = 5;

    double gain(const std::string& passage_id) const {
        auto it = gains.find(passage_id);
        return it == gains.end() ? 0.0 : it->second;
    }
};

// The candidate set entering the evaluator: one RankedList per surviving
// reranker plus a record of which rerankers failed and why.
struct RunSet {
    std::string query_id;
    std::vector<RankedList> candidates;                          // sorted by source_id
    std::vector<std::pair<std::string, std::string>> failures;   // (source_id, error)
};

// Per-query record of candidate scores, the winning reranker, and how the
// decision was made.
struct SelectionOutcome {
    std::string query_id;
    std::string strategy;                               // e.g. "oracle-ndcg@10"
    std::map<std::string, double> per_candidate_scores; // source_id -> score
    std::string winner_source;
    std::int64_t llm_calls = 0;
    std::int64_t parse_failures = 0;
};

// An LLM- or qrels-sourced grade for one (query, passage) pair.
struct RelevanceJudgment {
    std::string query_id;
    std::string passage_id;
    int grade = 0;
    int scale_max = 5;
    std::string raw_reply;
};

} // namespace fleetrank
