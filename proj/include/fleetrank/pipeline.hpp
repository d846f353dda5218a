#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fleetrank/config.hpp"
#include "fleetrank/evaluator.hpp"
#include "fleetrank/metrics.hpp"
#include "fleetrank/reranker.hpp"

namespace fleetrank {

struct SearchResult {
    RankedList list;          // the winning candidate's full ranking
    SelectionOutcome outcome; // how it won
};

// One benchmark query's record: enough to rebuild every analysis offline.
struct QueryDetail {
    std::string query_id;
    std::string winner;
    // source_id -> {"ndcg": x, "map": y, "mrr": z} against the true qrels
    std::map<std::string, std::map<std::string, double>> scores;
    bool no_qrels = false;      // scored 0 by convention, kept in the means
    bool no_candidates = false; // first stage recalled nothing
};

struct BenchmarkRow {
    std::string source;
    double ndcg = 0.0;
    double map = 0.0;
    double mrr = 0.0;
};

// Per-reranker means plus two synthetic rows: "selected" (the configured
// selection mode) and "oracle-best" (per-query max under the true qrels).
struct BenchmarkReport {
    int k = 10;
    std::string mode;
    std::vector<BenchmarkRow> rows;
    std::vector<QueryDetail> details;
};

inline constexpr const char* kSelectedRow = "selected";
inline constexpr const char* kOracleRow = "oracle-best";
inline constexpr const char* kNoCandidates = "no-candidates";

struct BiasReport {
    std::map<std::string, std::int64_t> selection_counts; // across all trials
    int permutation_trials = 0;
    std::size_t query_count = 0;
    // Largest |baseline rate - across-permutation rate| over the sources,
    // where baseline is the identity presentation order.
    double max_rate_delta = 0.0;
};

class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);

    // retrieve -> fan_out -> select. A query recalling nothing returns an
    // empty ranking marked kNoCandidates without touching the fleet or the
    // evaluator.
    SearchResult search(const Query& query) const;

    BenchmarkReport run_benchmark() const;

    // Reruns selection for every query under `permutations` candidate
    // presentation orders. When permutations equals fleet_size! the orders
    // are enumerated exhaustively; otherwise they are seeded shuffles.
    BiasReport analyze_bias(int permutations, unsigned seed) const;

    const PipelineConfig& config() const { return config_; }
    const Corpus& corpus() const { return corpus_; }
    const std::vector<Query>& queries() const { return queries_; }
    const Qrels& qrels() const { return qrels_; }
    const InvertedIndex& index() const { return index_; }

private:
    SelectionOutcome select(const Query& query, const RunSet& runset) const;

    PipelineConfig config_;
    Corpus corpus_;
    std::vector<Query> queries_;
    Qrels qrels_;
    InvertedIndex index_;
    std::unique_ptr<Fleet> fleet_;
    std::unique_ptr<JudgmentCache> cache_;
    std::unique_ptr<LlmClient> client_;    // llm mode only
    std::unique_ptr<Evaluator> evaluator_; // llm mode only
};

// Selection as a function of the runset alone, so bias analysis can probe
// arbitrary selectors (including deliberately order-sensitive mocks).
using Selector = std::function<SelectionOutcome(const RunSet&)>;

// Core of Pipeline::analyze_bias, shared with tests. All runsets must carry
// the same number of candidates.
BiasReport analyze_bias_over(const std::vector<RunSet>& runsets, const Selector& selector,
                             int permutations, unsigned seed);

// Winner-frequency analysis over persisted benchmark details; queries with
// no candidates are skipped.
FrequencyReport frequency_from_details(const std::vector<QueryDetail>& details, Metric metric);

// report.json + report.txt + details.jsonl under dir (created if needed).
void write_benchmark_report(const BenchmarkReport& report, const std::filesystem::path& dir);
std::vector<QueryDetail> read_details(const std::filesystem::path& file);
std::string format_benchmark_table(const BenchmarkReport& report);

// Stable JSON encoding of a search result; the HTTP service returns exactly
// this, which makes service-vs-library equivalence directly checkable.
std::string search_result_to_json(const SearchResult& result);

} // namespace fleetrank
