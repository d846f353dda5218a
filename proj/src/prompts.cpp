#include "fleetrank/prompts.hpp"

#include <map>
#include <string_view>

#include "fleetrank/errors.hpp"

namespace fleetrank {

const char* strategy_kind_name(StrategyKind kind) {
    switch (kind) {
    case StrategyKind::PassagePointwiseSimple: return "passage-pointwise-simple";
    case StrategyKind::PassagePointwiseComplex: return "passage-pointwise-complex";
    case StrategyKind::PassagePointwiseChat: return "passage-pointwise-chat";
    case StrategyKind::PassageRelwise: return "passage-relwise";
    case StrategyKind::RankPointwise: return "rank-pointwise";
    case StrategyKind::RankPairwise: return "rank-pairwise";
    }
    return "?";
}

StrategyKind strategy_kind_from_name(const std::string& name) {
    if (name == "passage-pointwise-simple") return StrategyKind::PassagePointwiseSimple;
    if (name == "passage-pointwise-complex") return StrategyKind::PassagePointwiseComplex;
    if (name == "passage-pointwise-chat") return StrategyKind::PassagePointwiseChat;
    if (name == "passage-relwise") return StrategyKind::PassageRelwise;
    if (name == "rank-pointwise") return StrategyKind::RankPointwise;
    if (name == "rank-pairwise") return StrategyKind::RankPairwise;
    throw ValidationError("unknown strategy kind: " + name);
}

bool strategy_is_passage_based(StrategyKind kind) {
    switch (kind) {
    case StrategyKind::PassagePointwiseSimple:
    case StrategyKind::PassagePointwiseComplex:
    case StrategyKind::PassagePointwiseChat:
    case StrategyKind::PassageRelwise:
        return true;
    default:
        return false;
    }
}

int strategy_scale_max(StrategyKind kind) {
    switch (kind) {
    case StrategyKind::PassageRelwise: return 1;
    case StrategyKind::RankPointwise: return 100;
    default: return 5;
    }
}

void Strategy::validate() const {
    if (eval_depth < 1) throw ValidationError("eval_depth must be >= 1");
}

std::string Strategy::describe() const {
    std::string out = strategy_kind_name(kind);
    if (strategy_is_passage_based(kind))
        out += std::string("/") + metric_name(aggregation_metric);
    out += "@" + std::to_string(eval_depth);
    return out;
}

std::string PromptDoc::flattened() const {
    std::string out;
    for (std::size_t i = 0; i < messages.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += messages[i].content;
    }
    return out;
}

namespace {

// The template texts below are load-bearing: the evaluator's behavior is
// defined against these exact wordings, golden files in tests/golden pin
// every byte. Any edit here must be mirrored there (including the grammar
// slips: "Response with", "Assign a overall score", "ranked responsed").

constexpr std::string_view kPassagePointwiseSimple =
    R"(Given a passage and a query, rate the relevancy level between the passage and the query from 0 to 5, where a higher score indicates larger relevancy.

Passage: {{passage}}

Query: {{query}}

Please rate the relevancy level between the passage and the query from 0 to 5.

Answer:)";

constexpr std::string_view kPassagePointwiseComplex =
    R"(This is the automatic relevancy evaluator of a retriever:
- Consider an input query and a corresponding passage
- Evaluate the passage according to one important quality:
1. Relevancy (0-5): a desired passage quality that requires the passage to include the answer of the query.
- All ratings are between 0-5 where 0 is very poor and 5 is very good.
- The evaluation should be critical and careful, and should closely match the ratings of experts. This evaluation is very important.
- Consider these aspects when evaluating:
    1. Query Understanding - Read the query carefully and understand the request of the query.
    2. Answer Finding - Read the passage and try finding the answer of the query from the passage.
    3. Assign a score for Relevancy on a scale of 0 to 5, where 0 is the lowest (hardest to find the answer of the query) and 5 is the highest (easiest to find the answer of the query) based on the Evaluation Criteria.

Given the passage and query, and prompt you to provide an evaluation. Respond with your integer 0-5 score first, then a rationale.

Passage: {{passage}}
Query: {{query}}
Relevancy Score:)";

constexpr std::string_view kPassagePointwiseChatSystem =
    R"(You are the automatic relevancy evaluator of a retriever:
- You consider an input query and a corresponding passage
- You evaluate the passage according to one important quality:
    1. Relevancy (0-5): a desired passage quality that requires the passage to include the answer of the query.
- All ratings are between 0-5 where 0 is very poor and 5 is very good.
- Your evaluation should be critical and careful, and should closely match the ratings of experts. This evaluation is very important.
- Consider these aspects when evaluating:
    1. Query Understanding - Read the query carefully and understand the request of the query.
    2. Answer Finding - Read the passage and try finding the answer of the query from the passage.
    3. Assign a score for Relevancy on a scale of 0 to 5, where 0 is the lowest (hardest to find the answer of the query) and 5 is the highest (easiest to find the answer of the query) based on the Evaluation Criteria.)";

constexpr std::string_view kPassagePointwiseChatUser1 =
    R"(I will provide you with both the passage and query, and prompt you to provide an evaluation. Response with your integer 0-5 score first, then a rationale.)";

constexpr std::string_view kPassagePointwiseChatAssistant =
    R"(Okay, please provide the passage and query.)";

constexpr std::string_view kPassagePointwiseChatUser2 =
    R"(Passage: {{passage}}
Query: {{query}}
Relevancy Score:)";

constexpr std::string_view kPassageRelwise =
    R"(Given a passage and a query, predict whether the passage includes an answer to the query by producing either 'Yes' or 'No'.

Passage: {{passage}}
Query: {{query}}
Does the passage answer the query?
Answer:)";

constexpr std::string_view kRankPointwise =
    R"(This is the automatic relevancy evaluator of a retriever:
- Consider an input query and a rank of corresponding passages retrieved by the retriever
- Evaluate the rank of passages according to one important quality:
    1. Passage Relevancy: a desired passage quality that requires the passage to include the answer of the query.
    2. Rank Validity: a rank quality that increases the gain of passages ranked higher and reduce the loss of passages ranked lower
- All ratings are between 0-100 where 0 is very poor and 100 is very good.
- The evaluation should be critical and careful, and should closely match the ratings of experts. This evaluation is very important.
- Consider these aspects when evaluating:
    1. Query Understanding - Read the query carefully and understand the request of the query.
    2. Answer Finding - Read the passage and try finding the answer of the query from the passage.
    3. Assign a overall score for Passage Relevancy and Rank Validity on a scale of 0 to 100, where 0 is the lowest (hardest to find the answer of the query) and 100 is the highest (easiest to find the answer of the query) based on the Evaluation Criteria.

The following is the rank of {{rank_size}} passages, each indicated by number identifier <>. The passages are listed in descending order using identifiers, and the most relevant passages should be listed first.

{{passage_lines}}

The search query is: {{query}}

Prompt you to provide an evaluation. Respond with your integer 0-100 score first, then a rationale.

The score of the rank is:)";

constexpr std::string_view kRankPairwise =
    R"(This is RankEvaluator, an automatic evaluator that can evaluate the relevancy and quality of the assistants' ranked responses based on the query.

The following are two assistants' ranked responses, contained in the start and end identifier of respective assistant. In each ranked response, passages are listed in descending order using number identifiers <>, and the most relevant passages considered by respective assistant are listed first. I can evaluate the two ranked responsed based on their relevancy and quality to the query: {{query}}

[The Start of Assistant 1's Ranked Response]

{{passage_lines_1}}

[The End of Assistant 1's Ranked Response]

[The Start of Assistant 2's Ranked Response]

{{passage_lines_2}}

[The End of Assistant 2's Ranked Response]

The search query is: {{query}}

I will critically and carefully compare the quality of the above two assistants' ranked responses based on their relevancy to the search query. Select one assistant whose ranked response is more relevant and effective.

The more effective assistant is:)";

// Single left-to-right pass over the template; substituted values are never
// rescanned, so passage text containing "{{query}}" stays literal.
std::string substitute(std::string_view tpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tpl.size());
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        std::size_t open = tpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tpl.substr(pos));
            break;
        }
        out.append(tpl.substr(pos, open - pos));
        std::size_t close = tpl.find("}}", open + 2);
        if (close == std::string_view::npos) {
            out.append(tpl.substr(open));
            break;
        }
        auto it = values.find(std::string(tpl.substr(open + 2, close - open - 2)));
        if (it == values.end())
            throw ValidationError("template references unknown placeholder: " +
                                  std::string(tpl.substr(open, close - open + 2)));
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

std::string numbered_passage_lines(const std::vector<Passage>& passages) {
    std::string out;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        if (i > 0) out += "\n";
        out += "<" + std::to_string(i + 1) + "> " + passages[i].indexed_text();
    }
    return out;
}

void require_arity(std::size_t got, std::size_t lo, std::size_t hi, const char* what) {
    if (got < lo || got > hi)
        throw ValidationError(std::string(what) + ": got " + std::to_string(got) +
                              " passages, expected " + std::to_string(lo) +
                              (lo == hi ? "" : ".." + std::to_string(hi)));
}

} // namespace

PromptDoc render_prompt(const Strategy& strategy, const Query& query,
                        const std::vector<Passage>& passages,
                        const std::vector<Passage>* pair) {
    strategy.validate();
    if (pair && strategy.kind != StrategyKind::RankPairwise)
        throw ValidationError("second passage list is only valid for rank-pairwise");

    std::size_t depth = static_cast<std::size_t>(strategy.eval_depth);
    PromptDoc doc;

    if (strategy_is_passage_based(strategy.kind)) {
        require_arity(passages.size(), 1, 1, strategy_kind_name(strategy.kind));
        std::map<std::string, std::string> values{
            {"passage", passages[0].indexed_text()},
            {"query", query.text},
        };
        switch (strategy.kind) {
        case StrategyKind::PassagePointwiseSimple:
            doc.messages.push_back({"user", substitute(kPassagePointwiseSimple, values)});
            break;
        case StrategyKind::PassagePointwiseComplex:
            doc.messages.push_back({"user", substitute(kPassagePointwiseComplex, values)});
            break;
        case StrategyKind::PassagePointwiseChat:
            doc.messages.push_back({"system", std::string(kPassagePointwiseChatSystem)});
            doc.messages.push_back({"user", std::string(kPassagePointwiseChatUser1)});
            doc.messages.push_back({"assistant", std::string(kPassagePointwiseChatAssistant)});
            doc.messages.push_back({"user", substitute(kPassagePointwiseChatUser2, values)});
            break;
        default:
            doc.messages.push_back({"user", substitute(kPassageRelwise, values)});
            break;
        }
        return doc;
    }

    if (strategy.kind == StrategyKind::RankPointwise) {
        require_arity(passages.size(), 1, depth, "rank-pointwise");
        std::map<std::string, std::string> values{
            {"rank_size", std::to_string(passages.size())},
            {"passage_lines", numbered_passage_lines(passages)},
            {"query", query.text},
        };
        doc.messages.push_back({"user", substitute(kRankPointwise, values)});
        return doc;
    }

    // rank-pairwise
    if (!pair) throw ValidationError("rank-pairwise requires a second passage list");
    require_arity(passages.size(), 1, depth, "rank-pairwise (assistant 1)");
    require_arity(pair->size(), 1, depth, "rank-pairwise (assistant 2)");
    std::map<std::string, std::string> values{
        {"passage_lines_1", numbered_passage_lines(passages)},
        {"passage_lines_2", numbered_passage_lines(*pair)},
        {"query", query.text},
    };
    doc.messages.push_back({"user", substitute(kRankPairwise, values)});
    return doc;
}

} // namespace fleetrank
