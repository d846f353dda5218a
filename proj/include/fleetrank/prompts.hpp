#pragma once

#include <string>
#include <vector>

#include "fleetrank/metrics.hpp"
#include "fleetrank/types.hpp"

namespace fleetrank {

enum class StrategyKind {
    PassagePointwiseSimple,
    PassagePointwiseComplex,
    PassagePointwiseChat,
    PassageRelwise,
    RankPointwise,
    RankPairwise,
};

const char* strategy_kind_name(StrategyKind kind);
StrategyKind strategy_kind_from_name(const std::string& name);

// True for the kinds that judge one passage at a time and aggregate with an
// IR metric; false for the kinds that judge whole rankings.
bool strategy_is_passage_based(StrategyKind kind);

// Grading scale of the reply the template asks for: 5 for the pointwise
// passage kinds, 1 for relwise (yes/no), 100 for rank-pointwise.
int strategy_scale_max(StrategyKind kind);

struct Strategy {
    StrategyKind kind = StrategyKind::PassagePointwiseComplex;
    Metric aggregation_metric = Metric::Ndcg; // passage-based kinds only
    int eval_depth = 10;                      // k: passages judged per ranking

    void validate() const;
    std::string describe() const; // e.g. "passage-pointwise-complex/ndcg@10"
};

struct PromptMessage {
    std::string role; // system | user | assistant
    std::string content;

    bool operator==(const PromptMessage&) const = default;
};

// A rendered prompt. Every kind except passage-pointwise-chat produces a
// single user message; the chat kind produces the four-message sequence its
// template prescribes.
struct PromptDoc {
    std::vector<PromptMessage> messages;

    // Message contents joined by blank lines, for completion-mode requests.
    std::string flattened() const;
};

// Renders the template for the given kind with the placeholders filled in.
// Passage-based kinds take exactly one passage; rank-pointwise takes 1 to
// eval_depth passages; rank-pairwise additionally takes the second ranking
// in `pair`. Wrong arity throws ValidationError. Passage text is taken from
// Passage::indexed_text().
PromptDoc render_prompt(const Strategy& strategy, const Query& query,
                        const std::vector<Passage>& passages,
                        const std::vector<Passage>* pair = nullptr);

} // namespace fleetrank
