#include "fleetrank/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fleetrank/errors.hpp"

namespace fleetrank {

const char* metric_name(Metric m) {
    switch (m) {
    case Metric::Ndcg: return "ndcg";
    case Metric::Map: return "map";
    case Metric::Mrr: return "mrr";
    }
    return "?";
}

Metric metric_from_name(const std::string& name) {
    if (name == "ndcg") return Metric::Ndcg;
    if (name == "map") return Metric::Map;
    if (name == "mrr") return Metric::Mrr;
    throw ValidationError("unknown metric: " + name);
}

namespace {

void require_k(int k) {
    if (k < 1) throw ValidationError("k must be >= 1");
}

inline double discounted_gain(double gain, std::size_t position_1based) {
    return (std::exp2(gain) - 1.0) / std::log2(static_cast<double>(position_1based) + 1.0);
}

} // namespace

double ndcg_at_k(const RankedList& list, const GainTable& gains, int k) {
    require_k(k);
    std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(k), list.entries.size());
    double dcg = 0.0;
    for (std::size_t i = 0; i < depth; ++i)
        dcg += discounted_gain(gains.gain(list.entries[i].passage_id), i + 1);

    std::vector<double> positive;
    for (const auto& [id, g] : gains.gains)
        if (g > 0.0) positive.push_back(g);
    std::sort(positive.begin(), positive.end(), std::greater<>());

    double idcg = 0.0;
    std::size_t ideal_depth = std::min<std::size_t>(static_cast<std::size_t>(k), positive.size());
    for (std::size_t i = 0; i < ideal_depth; ++i) idcg += discounted_gain(positive[i], i + 1);

    if (idcg <= 0.0) return 0.0;
    return dcg / idcg;
}

double map_at_k(const RankedList& list, const GainTable& gains, int k) {
    require_k(k);
    std::size_t total_relevant = 0;
    for (const auto& [id, g] : gains.gains)
        if (g > 0.0) ++total_relevant;
    if (total_relevant == 0) return 0.0;

    std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(k), list.entries.size());
    std::size_t hits = 0;
    double precision_sum = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (gains.gain(list.entries[i].passage_id) > 0.0) {
            ++hits;
            precision_sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    double denom = static_cast<double>(std::min<std::size_t>(total_relevant, static_cast<std::size_t>(k)));
    return precision_sum / denom;
}

double mrr_at_k(const RankedList& list, const GainTable& gains, int k) {
    require_k(k);
    std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(k), list.entries.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (gains.gain(list.entries[i].passage_id) > 0.0)
            return 1.0 / static_cast<double>(i + 1);
    }
    return 0.0;
}

double compute_metric(Metric m, const RankedList& list, const GainTable& gains, int k) {
    switch (m) {
    case Metric::Ndcg: return ndcg_at_k(list, gains, k);
    case Metric::Map: return map_at_k(list, gains, k);
    case Metric::Mrr: return mrr_at_k(list, gains, k);
    }
    throw ValidationError("unknown metric");
}

GainTable gains_from_qrels(const Qrels& qrels, const std::string& query_id) {
    GainTable table;
    int max_grade = 1;
    for (const auto& [key, grade] : qrels.grades) {
        max_grade = std::max(max_grade, grade);
        if (key.first == query_id && grade > 0)
            table.gains[key.second] = static_cast<double>(grade);
    }
    table.scale_max = max_grade;
    return table;
}

SelectionOutcome oracle_select(const RunSet& runset, const GainTable& gains, Metric metric,
                               int k) {
    require_k(k);
    if (runset.candidates.empty()) throw ValidationError("cannot select from an empty runset");

    SelectionOutcome outcome;
    outcome.query_id = runset.query_id;
    outcome.strategy = std::string("oracle-") + metric_name(metric) + "@" + std::to_string(k);

    double best = -1.0;
    std::string best_source;
    for (const auto& candidate : runset.candidates) {
        double score = compute_metric(metric, candidate, gains, k);
        outcome.per_candidate_scores[candidate.source_id] = score;
        if (score > best || (score == best && candidate.source_id < best_source)) {
            best = score;
            best_source = candidate.source_id;
        }
    }
    outcome.winner_source = best_source;
    return outcome;
}

FrequencyReport frequency_from_scores(
    const std::vector<std::map<std::string, double>>& per_query) {
    if (per_query.empty()) throw ValidationError("frequency needs at least one query");
    FrequencyReport report;
    report.query_count = per_query.size();
    for (const auto& scores : per_query) {
        if (scores.empty()) throw ValidationError("frequency needs at least one source per query");
        double best = scores.begin()->second;
        for (const auto& [src, v] : scores) best = std::max(best, v);
        std::size_t tied = 0;
        for (const auto& [src, v] : scores)
            if (v == best) ++tied;
        double credit = 1.0 / static_cast<double>(tied);
        for (const auto& [src, v] : scores) {
            report.proportions.try_emplace(src, 0.0);
            if (v == best) report.proportions[src] += credit;
        }
    }
    for (auto& [src, total] : report.proportions)
        total /= static_cast<double>(report.query_count);
    return report;
}

FrequencyReport frequency(const std::vector<RunSet>& per_query_runsets, const Qrels& qrels,
                          Metric metric, int k) {
    if (per_query_runsets.empty()) throw ValidationError("frequency needs at least one runset");
    std::vector<std::map<std::string, double>> per_query;
    per_query.reserve(per_query_runsets.size());
    for (const auto& runset : per_query_runsets) {
        GainTable gains = gains_from_qrels(qrels, runset.query_id);
        std::map<std::string, double> scores;
        for (const auto& candidate : runset.candidates)
            scores[candidate.source_id] = compute_metric(metric, candidate, gains, k);
        per_query.push_back(std::move(scores));
    }
    return frequency_from_scores(per_query);
}

} // namespace fleetrank
