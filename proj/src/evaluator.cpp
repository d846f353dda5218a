#include "fleetrank/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "fleetrank/errors.hpp"
#include "fleetrank/metrics.hpp"
#include "fleetrank/reply_parse.hpp"

namespace fleetrank {

namespace {

std::vector<const RankedList*> by_source_id(const RunSet& runset) {
    if (runset.candidates.empty())
        throw ValidationError("cannot evaluate an empty runset (query " + runset.query_id + ")");
    std::vector<const RankedList*> sorted;
    sorted.reserve(runset.candidates.size());
    for (const auto& c : runset.candidates) sorted.push_back(&c);
    std::sort(sorted.begin(), sorted.end(),
              [](const RankedList* a, const RankedList* b) { return a->source_id < b->source_id; });
    return sorted;
}

std::vector<std::string> top_ids(const RankedList& list, int depth) {
    std::size_t n = std::min<std::size_t>(list.entries.size(), static_cast<std::size_t>(depth));
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back(list.entries[i].passage_id);
    return ids;
}

std::vector<Passage> resolve(const std::vector<std::string>& ids, const Corpus& corpus) {
    std::vector<Passage> passages;
    passages.reserve(ids.size());
    for (const auto& id : ids) {
        if (!corpus.contains(id))
            throw NotFoundError("candidate passage missing from corpus: " + id);
        passages.push_back(corpus.at(id));
    }
    return passages;
}

// Runs fn(i) for i in [0, count) on up to `bound` threads. The first thrown
// exception wins; remaining work is abandoned.
void parallel_for(std::size_t count, int bound, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, bound)));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            {
                std::lock_guard lock(failure_mu);
                if (failure) return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace

Evaluator::Evaluator(const LlmClient& client, Strategy strategy, EvaluatorOptions options)
    : client_(client), strategy_(strategy), options_(options) {
    strategy_.validate();
}

SelectionOutcome Evaluator::evaluate(const Query& query, const RunSet& runset,
                                     const Corpus& corpus) const {
    switch (strategy_.kind) {
    case StrategyKind::RankPointwise: return evaluate_rank_pointwise(query, runset, corpus);
    case StrategyKind::RankPairwise: return evaluate_rank_pairwise(query, runset, corpus);
    default: return evaluate_passage_based(query, runset, corpus);
    }
}

SelectionOutcome Evaluator::evaluate_passage_based(const Query& query, const RunSet& runset,
                                                   const Corpus& corpus) const {
    if (!strategy_is_passage_based(strategy_.kind))
        throw ValidationError("strategy is not passage-based");
    auto sorted = by_source_id(runset);

    // Judged pool: union of every candidate's top-eval_depth passages,
    // first appearance wins, so each passage costs one call at most.
    std::vector<std::string> pool;
    std::set<std::string> seen;
    for (const RankedList* candidate : sorted)
        for (auto& id : top_ids(*candidate, strategy_.eval_depth))
            if (seen.insert(id).second) pool.push_back(std::move(id));

    const int scale = strategy_scale_max(strategy_.kind);
    std::vector<int> grades(pool.size(), 0);
    std::atomic<std::int64_t> llm_calls{0};
    std::atomic<std::int64_t> parse_failures{0};

    parallel_for(pool.size(), options_.concurrency, [&](std::size_t i) {
        const std::string& pid = pool[i];
        JudgmentKey key{client_.profile().model_name, strategy_kind_name(strategy_.kind),
                        query.id, pid};
        if (options_.cache) {
            if (auto hit = options_.cache->lookup(key)) {
                grades[i] = hit->grade;
                return;
            }
        }
        PromptDoc prompt = render_prompt(strategy_, query, resolve({pid}, corpus));
        CompletionResult reply = client_.complete(prompt);
        ++llm_calls;
        std::optional<int> grade = strategy_.kind == StrategyKind::PassageRelwise
                                       ? parse_yesno_reply(reply.text)
                                       : parse_graded_reply(reply.text, scale);
        if (!grade) ++parse_failures;
        grades[i] = grade.value_or(0);
        if (options_.cache)
            options_.cache->insert(key, {query.id, pid, grades[i], scale, reply.text});
    });

    GainTable gains;
    gains.scale_max = scale;
    for (std::size_t i = 0; i < pool.size(); ++i)
        gains.gains[pool[i]] = static_cast<double>(grades[i]);

    SelectionOutcome outcome;
    outcome.query_id = query.id;
    outcome.strategy = strategy_.describe();
    outcome.llm_calls = llm_calls;
    outcome.parse_failures = parse_failures;
    double best = -1.0;
    for (const RankedList* candidate : sorted) {
        double score =
            compute_metric(strategy_.aggregation_metric, *candidate, gains, strategy_.eval_depth);
        outcome.per_candidate_scores[candidate->source_id] = score;
        if (score > best) {
            best = score;
            outcome.winner_source = candidate->source_id;
        }
    }
    return outcome;
}

SelectionOutcome Evaluator::evaluate_rank_pointwise(const Query& query, const RunSet& runset,
                                                    const Corpus& corpus) const {
    if (strategy_.kind != StrategyKind::RankPointwise)
        throw ValidationError("strategy is not rank-pointwise");
    auto sorted = by_source_id(runset);

    // Identical top-k sequences always score the same, so judge each
    // distinct sequence once and fan the score back out.
    std::map<std::vector<std::string>, std::vector<const RankedList*>> groups;
    for (const RankedList* candidate : sorted)
        groups[top_ids(*candidate, strategy_.eval_depth)].push_back(candidate);

    std::vector<const std::vector<std::string>*> sequences;
    sequences.reserve(groups.size());
    for (const auto& [sequence, members] : groups) sequences.push_back(&sequence);

    std::vector<int> scores(sequences.size(), 0);
    std::atomic<std::int64_t> parse_failures{0};
    parallel_for(sequences.size(), options_.concurrency, [&](std::size_t i) {
        PromptDoc prompt = render_prompt(strategy_, query, resolve(*sequences[i], corpus));
        CompletionResult reply = client_.complete(prompt);
        std::optional<int> score = parse_graded_reply(reply.text, strategy_scale_max(strategy_.kind));
        if (!score) ++parse_failures;
        scores[i] = score.value_or(0);
    });

    std::map<std::string, double> by_source;
    for (std::size_t i = 0; i < sequences.size(); ++i)
        for (const RankedList* member : groups.at(*sequences[i]))
            by_source[member->source_id] = static_cast<double>(scores[i]);

    SelectionOutcome outcome;
    outcome.query_id = query.id;
    outcome.strategy = strategy_.describe();
    outcome.llm_calls = static_cast<std::int64_t>(sequences.size());
    outcome.parse_failures = parse_failures;
    outcome.per_candidate_scores = std::move(by_source);
    double best = -1.0;
    for (const RankedList* candidate : sorted) {
        double score = outcome.per_candidate_scores.at(candidate->source_id);
        if (score > best) {
            best = score;
            outcome.winner_source = candidate->source_id;
        }
    }
    return outcome;
}

SelectionOutcome Evaluator::evaluate_rank_pairwise(const Query& query, const RunSet& runset,
                                                   const Corpus& corpus) const {
    if (strategy_.kind != StrategyKind::RankPairwise)
        throw ValidationError("strategy is not rank-pairwise");
    auto sorted = by_source_id(runset);

    SelectionOutcome outcome;
    outcome.query_id = query.id;
    outcome.strategy = strategy_.describe();
    for (const RankedList* candidate : sorted)
        outcome.per_candidate_scores[candidate->source_id] = 0.0;

    const RankedList* champion = sorted.front();
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const RankedList* challenger = sorted[i];
        std::vector<Passage> first = resolve(top_ids(*champion, strategy_.eval_depth), corpus);
        std::vector<Passage> second = resolve(top_ids(*challenger, strategy_.eval_depth), corpus);
        PromptDoc prompt = render_prompt(strategy_, query, first, &second);
        CompletionResult reply = client_.complete(prompt);
        ++outcome.llm_calls;
        std::optional<PairwiseVerdict> verdict = parse_pairwise_reply(reply.text);
        if (verdict == PairwiseVerdict::Assistant2) {
            champion = challenger;
        } else if (!verdict) {
            ++outcome.parse_failures; // champion holds the title by default
        }
        outcome.per_candidate_scores[champion->source_id] += 1.0;
    }
    outcome.winner_source = champion->source_id;
    return outcome;
}

} // namespace fleetrank
