#pragma once

#include "fleetrank/judgment_cache.hpp"
#include "fleetrank/llm_client.hpp"
#include "fleetrank/prompts.hpp"
#include "fleetrank/types.hpp"

namespace fleetrank {

struct EvaluatorOptions {
    int concurrency = 4;           // parallel judgment bound within one query
    JudgmentCache* cache = nullptr; // optional; shared across queries and threads
};

// Selects the best candidate ranking for a query by asking an LLM, using one
// of the four prompting strategies. Candidates are always visited in
// ascending source_id order, so the outcome does not depend on the order in
// which rerankers happened to finish.
class Evaluator {
public:
    Evaluator(const LlmClient& client, Strategy strategy, EvaluatorOptions options = {});

    // Dispatches on the strategy kind.
    SelectionOutcome evaluate(const Query& query, const RunSet& runset,
                              const Corpus& corpus) const;

    // Judges each distinct passage in the candidates' top-eval_depth union
    // once (cache first), then scores every candidate with the aggregation
    // metric over those grades. Parse failures grade 0.
    SelectionOutcome evaluate_passage_based(const Query& query, const RunSet& runset,
                                            const Corpus& corpus) const;

    // Scores each distinct top-eval_depth sequence once on the 0-100 scale.
    SelectionOutcome evaluate_rank_pointwise(const Query& query, const RunSet& runset,
                                             const Corpus& corpus) const;

    // Sequential champion knockout: N-1 comparisons, champion presented as
    // Assistant 1. An unparseable verdict keeps the champion.
    SelectionOutcome evaluate_rank_pairwise(const Query& query, const RunSet& runset,
                                            const Corpus& corpus) const;

    const Strategy& strategy() const { return strategy_; }

private:
    const LlmClient& client_;
    Strategy strategy_;
    EvaluatorOptions options_;
};

} // namespace fleetrank
