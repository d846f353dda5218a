#pragma once

#include <map>
#include <string>
#include <vector>

#include "fleetrank/types.hpp"

namespace fleetrank {

enum class Metric { Ndcg, Map, Mrr };

const char* metric_name(Metric m);
Metric metric_from_name(const std::string& name);

// NDCG@k with exponential gain (2^g - 1) and log2(i+1) discount. The ideal
// ordering is taken over every positive-gain passage in the table, not just
// the retrieved ones. 0 when the query has no relevant passages.
double ndcg_at_k(const RankedList& list, const GainTable& gains, int k);

// MAP@k with binarized relevance (gain > 0). Normalized by min(R, k) where
// R counts every relevant passage in the table. 0 when R = 0.
double map_at_k(const RankedList& list, const GainTable& gains, int k);

// Reciprocal rank of the first relevant passage within the top k; 0 if none.
double mrr_at_k(const RankedList& list, const GainTable& gains, int k);

double compute_metric(Metric m, const RankedList& list, const GainTable& gains, int k);

// Builds one query's gain table from qrels. scale_max is the largest grade
// anywhere in the qrels (at least 1).
GainTable gains_from_qrels(const Qrels& qrels, const std::string& query_id);

// Scores every candidate and picks the argmax; ties go to the
// lexicographically smallest source_id.
SelectionOutcome oracle_select(const RunSet& runset, const GainTable& gains, Metric metric, int k);

struct FrequencyReport {
    std::map<std::string, double> proportions; // source_id -> share of queries won
    std::size_t query_count = 0;
};

// Proportion of queries on which each source produces the best metric value.
// Sources tied for the per-query max share the credit equally, so the
// proportions form a probability distribution.
FrequencyReport frequency(const std::vector<RunSet>& per_query_runsets, const Qrels& qrels,
                          Metric metric, int k);

// The same credit rule applied to precomputed per-query score maps
// (source_id -> metric value). frequency() and the offline analysis both
// funnel through here.
FrequencyReport frequency_from_scores(const std::vector<std::map<std::string, double>>& per_query);

} // namespace fleetrank
