#include "fleetrank/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "fleetrank/corpus_io.hpp"
#include "fleetrank/errors.hpp"

namespace fleetrank {

using nlohmann::json;

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
    config_.validate();
    corpus_ = parse_corpus(config_.corpus_path.string());
    queries_ = parse_queries(config_.queries_path.string(), config_.query_format);
    if (!config_.qrels_path.empty()) qrels_ = parse_qrels(config_.qrels_path.string());
    index_ = build_index(corpus_);
    fleet_ = std::make_unique<Fleet>(config_.fleet, &corpus_, &index_, config_.bm25);
    if (!config_.cache_path.empty())
        cache_ = std::make_unique<JudgmentCache>(config_.cache_path);
    if (config_.mode == PipelineConfig::Mode::Llm) {
        client_ = std::make_unique<LlmClient>(config_.llm);
        evaluator_ = std::make_unique<Evaluator>(
            *client_, config_.strategy, EvaluatorOptions{config_.concurrency, cache_.get()});
    }
}

SelectionOutcome Pipeline::select(const Query& query, const RunSet& runset) const {
    if (config_.mode == PipelineConfig::Mode::Oracle)
        return oracle_select(runset, gains_from_qrels(qrels_, query.id),
                             config_.strategy.aggregation_metric, config_.strategy.eval_depth);
    try {
        return evaluator_->evaluate(query, runset, corpus_);
    } catch (const TransportError& e) {
        throw TransportError(std::string("evaluate stage: ") + e.what());
    } catch (const EndpointError& e) {
        throw EndpointError(std::string("evaluate stage: ") + e.what());
    }
}

SearchResult Pipeline::search(const Query& query) const {
    RankedList first_stage = retrieve(index_, config_.bm25, query);
    if (first_stage.entries.empty()) {
        SearchResult result;
        result.list = {query.id, kNoCandidates, {}};
        result.outcome.query_id = query.id;
        result.outcome.strategy = config_.mode == PipelineConfig::Mode::Oracle
                                      ? std::string("oracle-") +
                                            metric_name(config_.strategy.aggregation_metric) + "@" +
                                            std::to_string(config_.strategy.eval_depth)
                                      : config_.strategy.describe();
        result.outcome.winner_source = kNoCandidates;
        return result;
    }

    RunSet runset;
    try {
        runset = fleet_->fan_out(query, first_stage);
    } catch (const FleetExhaustedError& e) {
        throw FleetExhaustedError(std::string("rerank stage: ") + e.what());
    }

    SearchResult result;
    result.outcome = select(query, runset);
    for (const auto& candidate : runset.candidates)
        if (candidate.source_id == result.outcome.winner_source) result.list = candidate;
    return result;
}

BenchmarkReport Pipeline::run_benchmark() const {
    BenchmarkReport report;
    report.k = config_.strategy.eval_depth;
    report.mode = mode_name(config_.mode);
    const int k = config_.strategy.eval_depth;

    std::vector<std::string> sources;
    for (const auto& spec : fleet_->specs()) sources.push_back(spec.source_id);
    std::sort(sources.begin(), sources.end());

    std::map<std::string, BenchmarkRow> sums;
    for (const auto& source : sources) sums[source] = {source, 0, 0, 0};
    sums[kSelectedRow] = {kSelectedRow, 0, 0, 0};
    sums[kOracleRow] = {kOracleRow, 0, 0, 0};

    auto metrics_of = [&](const RankedList& list, const GainTable& gains) {
        return std::map<std::string, double>{{"ndcg", ndcg_at_k(list, gains, k)},
                                             {"map", map_at_k(list, gains, k)},
                                             {"mrr", mrr_at_k(list, gains, k)}};
    };
    auto add = [&](BenchmarkRow& row, const std::map<std::string, double>& m) {
        row.ndcg += m.at("ndcg");
        row.map += m.at("map");
        row.mrr += m.at("mrr");
    };

    for (const Query& query : queries_) {
        QueryDetail detail;
        detail.query_id = query.id;
        GainTable gains = gains_from_qrels(qrels_, query.id);
        detail.no_qrels = gains.gains.empty();

        RankedList first_stage = retrieve(index_, config_.bm25, query);
        if (first_stage.entries.empty()) {
            detail.no_candidates = true;
            report.details.push_back(std::move(detail));
            continue; // every row contributes 0 for this query
        }

        RunSet runset = fleet_->fan_out(query, first_stage);
        for (const auto& candidate : runset.candidates) {
            auto m = metrics_of(candidate, gains);
            add(sums.at(candidate.source_id), m);
            detail.scores[candidate.source_id] = std::move(m);
        }

        SelectionOutcome outcome = select(query, runset);
        detail.winner = outcome.winner_source;
        SelectionOutcome oracle = oracle_select(runset, gains, config_.strategy.aggregation_metric, k);
        for (const auto& candidate : runset.candidates) {
            if (candidate.source_id == outcome.winner_source)
                add(sums.at(kSelectedRow), metrics_of(candidate, gains));
            if (candidate.source_id == oracle.winner_source)
                add(sums.at(kOracleRow), metrics_of(candidate, gains));
        }
        report.details.push_back(std::move(detail));
    }

    if (queries_.empty()) throw ValidationError("benchmark needs at least one query");
    const double q = static_cast<double>(queries_.size());
    for (const auto& source : sources) {
        BenchmarkRow row = sums.at(source);
        row.ndcg /= q;
        row.map /= q;
        row.mrr /= q;
        report.rows.push_back(row);
    }
    for (const char* name : {kSelectedRow, kOracleRow}) {
        BenchmarkRow row = sums.at(name);
        row.ndcg /= q;
        row.map /= q;
        row.mrr /= q;
        report.rows.push_back(row);
    }
    return report;
}

BiasReport Pipeline::analyze_bias(int permutations, unsigned seed) const {
    std::map<std::string, Query> by_id;
    for (const Query& query : queries_) by_id[query.id] = query;

    std::vector<RunSet> runsets;
    for (const Query& query : queries_) {
        RankedList first_stage = retrieve(index_, config_.bm25, query);
        if (first_stage.entries.empty()) continue;
        runsets.push_back(fleet_->fan_out(query, first_stage));
    }
    Selector selector = [&](const RunSet& runset) {
        return select(by_id.at(runset.query_id), runset);
    };
    return analyze_bias_over(runsets, selector, permutations, seed);
}

namespace {

// n! without overflow drama; past 12 the exhaustive path is unreachable
// anyway (13! > INT_MAX trials).
long long small_factorial(std::size_t n) {
    if (n > 12) return -1;
    long long f = 1;
    for (std::size_t i = 2; i <= n; ++i) f *= static_cast<long long>(i);
    return f;
}

} // namespace

BiasReport analyze_bias_over(const std::vector<RunSet>& runsets, const Selector& selector,
                             int permutations, unsigned seed) {
    if (permutations < 1) throw ValidationError("permutations must be >= 1");
    if (runsets.empty()) throw ValidationError("bias analysis needs at least one runset");
    const std::size_t n = runsets.front().candidates.size();
    for (const auto& runset : runsets)
        if (runset.candidates.size() != n)
            throw ValidationError("bias analysis needs a uniform candidate count; query " +
                                  runset.query_id + " differs");

    std::map<std::string, std::int64_t> baseline_counts;
    for (const auto& runset : runsets) ++baseline_counts[selector(runset).winner_source];

    BiasReport report;
    report.permutation_trials = permutations;
    report.query_count = runsets.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const bool exhaustive = small_factorial(n) == permutations;
    std::mt19937 rng(seed);

    for (int trial = 0; trial < permutations; ++trial) {
        if (exhaustive) {
            // `order` already holds the trial-th permutation in
            // lexicographic sequence; advanced at the bottom of the loop.
        } else {
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
        }
        for (const auto& runset : runsets) {
            RunSet shuffled;
            shuffled.query_id = runset.query_id;
            for (std::size_t j = 0; j < n; ++j)
                shuffled.candidates.push_back(runset.candidates[order[j]]);
            ++report.selection_counts[selector(shuffled).winner_source];
        }
        if (exhaustive) std::next_permutation(order.begin(), order.end());
    }

    const double denom = static_cast<double>(runsets.size()) * permutations;
    std::set<std::string> all_sources;
    for (const auto& [source, count] : baseline_counts) all_sources.insert(source);
    for (const auto& [source, count] : report.selection_counts) all_sources.insert(source);
    for (const auto& source : all_sources) {
        auto b = baseline_counts.find(source);
        auto a = report.selection_counts.find(source);
        double baseline_rate =
            b == baseline_counts.end()
                ? 0.0
                : static_cast<double>(b->second) / static_cast<double>(runsets.size());
        double aggregate_rate =
            a == report.selection_counts.end() ? 0.0 : static_cast<double>(a->second) / denom;
        report.max_rate_delta = std::max(report.max_rate_delta,
                                         std::abs(baseline_rate - aggregate_rate));
    }
    return report;
}

FrequencyReport frequency_from_details(const std::vector<QueryDetail>& details, Metric metric) {
    std::vector<std::map<std::string, double>> per_query;
    for (const auto& detail : details) {
        if (detail.scores.empty()) continue;
        std::map<std::string, double> scores;
        for (const auto& [source, values] : detail.scores)
            scores[source] = values.at(metric_name(metric));
        per_query.push_back(std::move(scores));
    }
    return frequency_from_scores(per_query);
}

std::string format_benchmark_table(const BenchmarkReport& report) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-24s %10s %10s %10s\n", "source",
                  ("ndcg@" + std::to_string(report.k)).c_str(),
                  ("map@" + std::to_string(report.k)).c_str(),
                  ("mrr@" + std::to_string(report.k)).c_str());
    out += line;
    for (const auto& row : report.rows) {
        std::snprintf(line, sizeof(line), "%-24s %10.4f %10.4f %10.4f\n", row.source.c_str(),
                      row.ndcg, row.map, row.mrr);
        out += line;
    }
    return out;
}

void write_benchmark_report(const BenchmarkReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    json rows = json::array();
    for (const auto& row : report.rows)
        rows.push_back({{"source", row.source}, {"ndcg", row.ndcg}, {"map", row.map},
                        {"mrr", row.mrr}});
    json summary = {{"k", report.k}, {"mode", report.mode}, {"rows", rows}};
    std::ofstream json_out(dir / "report.json");
    if (!json_out) throw IoError("cannot write " + (dir / "report.json").string());
    json_out << summary.dump(2) << "\n";

    std::ofstream table_out(dir / "report.txt");
    if (!table_out) throw IoError("cannot write " + (dir / "report.txt").string());
    table_out << format_benchmark_table(report);

    std::ofstream details_out(dir / "details.jsonl");
    if (!details_out) throw IoError("cannot write " + (dir / "details.jsonl").string());
    for (const auto& detail : report.details) {
        json record = {{"query_id", detail.query_id},
                       {"winner", detail.winner},
                       {"no_qrels", detail.no_qrels},
                       {"no_candidates", detail.no_candidates},
                       {"scores", json::object()}};
        for (const auto& [source, values] : detail.scores) record["scores"][source] = values;
        details_out << record.dump() << "\n";
    }
}

std::vector<QueryDetail> read_details(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open details file: " + file.string());
    std::vector<QueryDetail> details;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded()) throw ParseError("details file holds malformed JSON", line_no);
        QueryDetail detail;
        detail.query_id = record.value("query_id", "");
        detail.winner = record.value("winner", "");
        detail.no_qrels = record.value("no_qrels", false);
        detail.no_candidates = record.value("no_candidates", false);
        if (record.contains("scores"))
            for (const auto& [source, values] : record["scores"].items())
                for (const auto& [name, value] : values.items())
                    detail.scores[source][name] = value.get<double>();
        details.push_back(std::move(detail));
    }
    return details;
}

std::string search_result_to_json(const SearchResult& result) {
    json ranking = json::array();
    for (const auto& entry : result.list.entries)
        ranking.push_back({{"id", entry.passage_id}, {"score", entry.score}});
    json doc = {{"query_id", result.outcome.query_id},
                {"winner_source", result.outcome.winner_source},
                {"strategy", result.outcome.strategy},
                {"ranking", ranking},
                {"per_candidate_scores", result.outcome.per_candidate_scores},
                {"llm_calls", result.outcome.llm_calls},
                {"parse_failures", result.outcome.parse_failures}};
    return doc.dump();
}

} // namespace fleetrank
