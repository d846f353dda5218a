#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "fleetrank/errors.hpp"
#include "fleetrank/evaluator.hpp"
#include "fleetrank/metrics.hpp"
#include "support/fixtures.hpp"
#include "support/mock_llm.hpp"

using namespace fleetrank;
using fleetrank::testing::make_corpus;
using fleetrank::testing::make_list;
using fleetrank::testing::MockLlm;
using fleetrank::testing::TempDir;

namespace {

// Corpus where every passage's text is its own id; mocks can then read the
// passage id straight out of the rendered prompt.
Corpus id_corpus(const std::vector<std::string>& ids) {
    std::map<std::string, std::string> texts;
    for (const auto& id : ids) texts[id] = id;
    return make_corpus(texts);
}

Strategy passage_strategy(StrategyKind kind = StrategyKind::PassagePointwiseComplex,
                          Metric metric = Metric::Ndcg, int depth = 10) {
    Strategy s;
    s.kind = kind;
    s.aggregation_metric = metric;
    s.eval_depth = depth;
    return s;
}

LlmProfile profile_for(const MockLlm& mock) {
    LlmProfile profile;
    profile.endpoint = mock.endpoint();
    profile.model_name = "mock-model";
    profile.backoff_initial_ms = 1.0;
    return profile;
}

// Replies with the grade stored for the passage named in the prompt.
MockLlm::Handler grade_by_passage(std::map<std::string, std::string> grades) {
    return [grades = std::move(grades)](const nlohmann::json& request) {
        auto pid = MockLlm::passage_of(request);
        auto it = grades.find(pid);
        return it == grades.end() ? std::string("0") : it->second;
    };
}

} // namespace

TEST_CASE("hand-evaluated passage-based selection") {
    // judged grades {p1:3, p2:0, p3:1}
    MockLlm mock(grade_by_passage({{"p1", "3"}, {"p2", "0"}, {"p3", "1"}}));
    LlmClient client(profile_for(mock));
    Evaluator evaluator(client, passage_strategy(StrategyKind::PassagePointwiseComplex,
                                                 Metric::Ndcg, 3));

    auto corpus = id_corpus({"p1", "p2", "p3"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "A", {"p1", "p3", "p2"}));
    runset.candidates.push_back(make_list("q", "B", {"p2", "p1", "p3"}));

    auto outcome = evaluator.evaluate({"q", "toy"}, runset, corpus);
    CHECK(outcome.winner_source == "A");
    CHECK(outcome.per_candidate_scores.at("A") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(outcome.per_candidate_scores.at("B") ==
          doctest::Approx(4.916508 / 7.630930).epsilon(1e-6));
    CHECK(outcome.llm_calls == 3);
    CHECK(outcome.parse_failures == 0);
    CHECK(outcome.query_id == "q");
    CHECK(outcome.strategy == "passage-pointwise-complex/ndcg@3");
}

TEST_CASE("identical candidates tie to the smallest source id") {
    MockLlm mock(grade_by_passage({{"p1", "2"}, {"p2", "1"}}));
    LlmClient client(profile_for(mock));
    Evaluator evaluator(client, passage_strategy());

    auto corpus = id_corpus({"p1", "p2"});
    RunSet runset;
    runset.query_id = "q";
    for (const char* source : {"gamma", "alpha", "beta"})
        runset.candidates.push_back(make_list("q", source, {"p1", "p2"}));

    auto outcome = evaluator.evaluate({"q", "toy"}, runset, corpus);
    CHECK(outcome.winner_source == "alpha");
    CHECK(outcome.llm_calls == 2); // unique passages judged once
    CHECK(mock.requests() == 2);
    CHECK(outcome.per_candidate_scores.at("alpha") ==
          outcome.per_candidate_scores.at("gamma"));
}

TEST_CASE("only the top eval_depth of each candidate is judged") {
    MockLlm mock(grade_by_passage({{"p1", "1"}, {"p2", "1"}, {"p3", "1"}, {"p4", "1"}}));
    LlmClient client(profile_for(mock));
    Evaluator evaluator(client, passage_strategy(StrategyKind::PassagePointwiseComplex,
                                                 Metric::Ndcg, 2));

    auto corpus = id_corpus({"p1", "p2", "p3", "p4"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "A", {"p1", "p2", "p3", "p4"}));
    runset.candidates.push_back(make_list("q", "B", {"p2", "p1", "p4", "p3"}));

    auto outcome = evaluator.evaluate({"q", "toy"}, runset, corpus);
    CHECK(outcome.llm_calls == 2); // union of top-2 is {p1, p2}
}

TEST_CASE("parse failures grade zero and are counted") {
    MockLlm mock(grade_by_passage({{"p1", "grade three"}, {"p2", "2"}}));
    LlmClient client(profile_for(mock));
    Evaluator evaluator(client, passage_strategy());

    auto corpus = id_corpus({"p1", "p2"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "A", {"p1", "p2"}));
    runset.candidates.push_back(make_list("q", "B", {"p2", "p1"}));

    auto outcome = evaluator.evaluate({"q", "toy"}, runset, corpus);
    CHECK(outcome.parse_failures == 1);
    CHECK(outcome.winner_source == "B"); // p2 is the only positive grade
}

TEST_CASE("relwise judgments binarize yes/no replies") {
    MockLlm mock([](const nlohmann::json& request) {
        auto pid = MockLlm::passage_of(request);
        return std::string(pid == "hit" ? "Yes, it answers the query." : "No.");
    });
    LlmClient client(profile_for(mock));
    Evaluator evaluator(client,
                        passage_strategy(StrategyKind::PassageRelwise, Metric::Mrr, 10));

    auto corpus = id_corpus({"hit", "m1", "m2"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "late", {"m1", "m2", "hit"}));
    runset.candidates.push_back(make_list("q", "early", {"hit", "m1", "m2"}));

    auto outcome = evaluator.evaluate({"q", "toy"}, runset, corpus);
    CHECK(outcome.winner_source == "early");
    CHECK(outcome.per_candidate_scores.at("early") == 1.0);
    CHECK(outcome.per_candidate_scores.at("late") ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("chat strategy speaks the four-message protocol end to end") {
    MockLlm mock([](const nlohmann::json& request) {
        CHECK(request.at("messages").size() == 4);
        auto pid = MockLlm::passage_of(request);
        return std::string(pid == "good" ? "5" : "1");
    });
    LlmClient client(profile_for(mock));
    Evaluator evaluator(client, passage_strategy(StrategyKind::PassagePointwiseChat));

    auto corpus = id_corpus({"good", "bad"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "A", {"good", "bad"}));
    runset.candidates.push_back(make_list("q", "B", {"bad", "good"}));

    auto outcome = evaluator.evaluate({"q", "toy"}, runset, corpus);
    CHECK(outcome.winner_source == "A");
}

TEST_CASE("qrels-echoing mock reproduces the oracle winner") {
    Qrels qrels;
    std::mt19937 rng(1234);
    std::vector<std::string> pool;
    for (int i = 0; i < 10; ++i) {
        std::string pid = "d" + std::to_string(i);
        pool.push_back(pid);
        for (int q = 0; q < 8; ++q) {
            int grade = static_cast<int>(rng() % 4);
            if (grade > 0) qrels.grades[{"q" + std::to_string(q), pid}] = grade;
        }
    }
    auto corpus = id_corpus(pool);

    MockLlm mock([&qrels](const nlohmann::json& request) {
        auto qid = MockLlm::query_of(request);
        auto pid = MockLlm::passage_of(request);
        return std::to_string(qrels.grade(qid, pid));
    });
    LlmClient client(profile_for(mock));
    Evaluator evaluator(client, passage_strategy());

    for (int q = 0; q < 8; ++q) {
        std::string qid = "q" + std::to_string(q);
        RunSet runset;
        runset.query_id = qid;
        for (int c = 0; c < 4; ++c) {
            auto ids = pool;
            std::shuffle(ids.begin(), ids.end(), rng);
            ids.resize(6);
            runset.candidates.push_back(make_list(qid, "s" + std::to_string(c), ids));
        }
        // the query text carries the query id so the mock can look it up
        auto outcome = evaluator.evaluate({qid, qid}, runset, corpus);

        auto gains = gains_from_qrels(qrels, qid);
        auto oracle = oracle_select(runset, gains, Metric::Ndcg, 10);
        double got = ndcg_at_k(*std::find_if(runset.candidates.begin(),
                                             runset.candidates.end(),
                                             [&](const RankedList& c) {
                                                 return c.source_id == outcome.winner_source;
                                             }),
                               gains, 10);
        double want = ndcg_at_k(*std::find_if(runset.candidates.begin(),
                                              runset.candidates.end(),
                                              [&](const RankedList& c) {
                                                  return c.source_id == oracle.winner_source;
                                              }),
                                gains, 10);
        CHECK(got == want);
    }
}

TEST_CASE("rank-pointwise scores whole rankings") {
    MockLlm mock([](const nlohmann::json& request) {
        auto passages = MockLlm::numbered_passages(MockLlm::last_user_content(request));
        REQUIRE(!passages.empty());
        return std::string(passages[0] == "p1" ? "85" : "60");
    });
    LlmClient client(profile_for(mock));
    Strategy strategy;
    strategy.kind = StrategyKind::RankPointwise;
    strategy.eval_depth = 3;
    Evaluator evaluator(client, strategy);

    auto corpus = id_corpus({"p1", "p2", "p3"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "A", {"p1", "p2", "p3"}));
    runset.candidates.push_back(make_list("q", "B", {"p2", "p1", "p3"}));

    auto outcome = evaluator.evaluate({"q", "toy"}, runset, corpus);
    CHECK(outcome.winner_source == "A");
    CHECK(outcome.per_candidate_scores.at("A") == 85.0);
    CHECK(outcome.per_candidate_scores.at("B") == 60.0);
    CHECK(outcome.llm_calls == 2);
    CHECK(outcome.strategy == "rank-pointwise@3");
}

TEST_CASE("identical rank sequences are judged once") {
    MockLlm mock([](const nlohmann::json&) { return std::string("50"); });
    LlmClient client(profile_for(mock));
    Strategy strategy;
    strategy.kind = StrategyKind::RankPointwise;
    strategy.eval_depth = 2;
    Evaluator evaluator(client, strategy);

    auto corpus = id_corpus({"p1", "p2", "p3", "p4"});
    RunSet runset;
    runset.query_id = "q";
    // 8 candidates, 3 distinct top-2 sequences
    runset.candidates.push_back(make_list("q", "s1", {"p1", "p2", "p3"}));
    runset.candidates.push_back(make_list("q", "s2", {"p1", "p2", "p4"}));
    runset.candidates.push_back(make_list("q", "s3", {"p2", "p1", "p3"}));
    runset.candidates.push_back(make_list("q", "s4", {"p2", "p1", "p4"}));
    runset.candidates.push_back(make_list("q", "s5", {"p3", "p4"}));
    runset.candidates.push_back(make_list("q", "s6", {"p1", "p2"}));
    runset.candidates.push_back(make_list("q", "s7", {"p2", "p1"}));
    runset.candidates.push_back(make_list("q", "s8", {"p3", "p4", "p1"}));

    auto outcome = evaluator.evaluate({"q", "toy"}, runset, corpus);
    CHECK(outcome.llm_calls == 3);
    CHECK(mock.requests() == 3);
    // every candidate still gets a score
    CHECK(outcome.per_candidate_scores.size() == 8);
}

TEST_CASE("unparseable rank scores fall back to zero") {
    MockLlm mock([](const nlohmann::json&) { return std::string("excellent ranking!"); });
    LlmClient client(profile_for(mock));
    Strategy strategy;
    strategy.kind = StrategyKind::RankPointwise;
    strategy.eval_depth = 2;
    Evaluator evaluator(client, strategy);

    auto corpus = id_corpus({"p1", "p2"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "beta", {"p1", "p2"}));
    runset.candidates.push_back(make_list("q", "alpha", {"p2", "p1"}));

    auto outcome = evaluator.evaluate({"q", "toy"}, runset, corpus);
    CHECK(outcome.winner_source == "alpha");
    CHECK(outcome.per_candidate_scores.at("alpha") == 0.0);
    CHECK(outcome.per_candidate_scores.at("beta") == 0.0);
    CHECK(outcome.parse_failures == 2);
}

TEST_CASE("pairwise knockout walks the fleet in source order") {
    MockLlm mock([](const nlohmann::json&) { return std::string("Assistant 2"); });
    LlmClient client(profile_for(mock));
    Strategy strategy;
    strategy.kind = StrategyKind::RankPairwise;
    strategy.eval_depth = 2;
    Evaluator evaluator(client, strategy);

    auto corpus = id_corpus({"p1", "p2", "p3"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "A", {"p1", "p2"}));
    runset.candidates.push_back(make_list("q", "B", {"p2", "p3"}));
    runset.candidates.push_back(make_list("q", "C", {"p3", "p1"}));

    auto outcome = evaluator.evaluate({"q", "toy"}, runset, corpus);
    CHECK(outcome.winner_source == "C"); // challenger always wins
    CHECK(outcome.llm_calls == 2);
    CHECK(outcome.strategy == "rank-pairwise@2");
    // win counts: B beat A, C beat B
    CHECK(outcome.per_candidate_scores.at("A") == 0.0);
    CHECK(outcome.per_candidate_scores.at("B") == 1.0);
    CHECK(outcome.per_candidate_scores.at("C") == 1.0);
}

TEST_CASE("a single candidate wins without any calls") {
    MockLlm mock([](const nlohmann::json&) { return std::string("Assistant 2"); });
    LlmClient client(profile_for(mock));
    Strategy strategy;
    strategy.kind = StrategyKind::RankPairwise;
    Evaluator evaluator(client, strategy);

    auto corpus = id_corpus({"p1"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "only", {"p1"}));

    auto outcome = evaluator.evaluate({"q", "toy"}, runset, corpus);
    CHECK(outcome.winner_source == "only");
    CHECK(outcome.llm_calls == 0);
    CHECK(mock.requests() == 0);
}

TEST_CASE("unparseable verdicts retain the champion") {
    MockLlm mock([](const nlohmann::json&) { return std::string("They are both fine."); });
    LlmClient client(profile_for(mock));
    Strategy strategy;
    strategy.kind = StrategyKind::RankPairwise;
    strategy.eval_depth = 2;
    Evaluator evaluator(client, strategy);

    auto corpus = id_corpus({"p1", "p2"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "first", {"p1", "p2"}));
    runset.candidates.push_back(make_list("q", "second", {"p2", "p1"}));
    runset.candidates.push_back(make_list("q", "third", {"p1"}));

    auto outcome = evaluator.evaluate({"q", "toy"}, runset, corpus);
    CHECK(outcome.winner_source == "first");
    CHECK(outcome.parse_failures == 2);
    CHECK(outcome.llm_calls == 2);
}

TEST_CASE("pairwise prompts carry champion as assistant 1") {
    // Champion text should appear in the Assistant 1 block each round.
    std::vector<std::pair<std::string, std::string>> seen; // (a1 first pid, a2 first pid)
    std::mutex mu;
    MockLlm mock([&](const nlohmann::json& request) {
        auto content = MockLlm::last_user_content(request);
        auto a1 = MockLlm::numbered_passages(MockLlm::block_of(content, "Assistant 1"));
        auto a2 = MockLlm::numbered_passages(MockLlm::block_of(content, "Assistant 2"));
        REQUIRE(!a1.empty());
        REQUIRE(!a2.empty());
        {
            std::lock_guard<std::mutex> lock(mu);
            seen.push_back({a1[0], a2[0]});
        }
        return std::string("Assistant 2");
    });
    LlmClient client(profile_for(mock));
    Strategy strategy;
    strategy.kind = StrategyKind::RankPairwise;
    strategy.eval_depth = 1;
    Evaluator evaluator(client, strategy);

    auto corpus = id_corpus({"pa", "pb", "pc"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "A", {"pa"}));
    runset.candidates.push_back(make_list("q", "B", {"pb"}));
    runset.candidates.push_back(make_list("q", "C", {"pc"}));

    evaluator.evaluate({"q", "toy"}, runset, corpus);
    REQUIRE(seen.size() == 2);
    CHECK(seen[0] == std::pair<std::string, std::string>{"pa", "pb"});
    // B won round one, so round two presents B as Assistant 1
    CHECK(seen[1] == std::pair<std::string, std::string>{"pb", "pc"});
}

TEST_CASE("cache makes the second pass free and identical") {
    MockLlm mock(grade_by_passage({{"p1", "3"}, {"p2", "1"}, {"p3", "0"}}));
    LlmClient client(profile_for(mock));
    JudgmentCache cache;
    EvaluatorOptions options;
    options.cache = &cache;
    Evaluator evaluator(client, passage_strategy(), options);

    auto corpus = id_corpus({"p1", "p2", "p3"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "A", {"p1", "p2", "p3"}));
    runset.candidates.push_back(make_list("q", "B", {"p3", "p2", "p1"}));

    auto first = evaluator.evaluate({"q", "toy"}, runset, corpus);
    CHECK(first.llm_calls == 3);
    auto second = evaluator.evaluate({"q", "toy"}, runset, corpus);
    CHECK(second.llm_calls == 0);
    CHECK(mock.requests() == 3);
    CHECK(second.winner_source == first.winner_source);
    CHECK(second.per_candidate_scores == first.per_candidate_scores);
    CHECK(second.parse_failures == 0);
}

TEST_CASE("a persisted cache survives into a new evaluator") {
    TempDir dir;
    auto corpus = id_corpus({"p1", "p2"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "A", {"p1", "p2"}));

    SelectionOutcome first;
    {
        MockLlm mock(grade_by_passage({{"p1", "4"}, {"p2", "2"}}));
        LlmClient client(profile_for(mock));
        JudgmentCache cache(dir.file("j.jsonl"));
        EvaluatorOptions options;
        options.cache = &cache;
        Evaluator evaluator(client, passage_strategy(), options);
        first = evaluator.evaluate({"q", "toy"}, runset, corpus);
        CHECK(first.llm_calls == 2);
    }
    {
        // new mock that would answer differently; cache must win
        MockLlm mock(grade_by_passage({{"p1", "0"}, {"p2", "0"}}));
        LlmClient client(profile_for(mock));
        JudgmentCache cache(dir.file("j.jsonl"));
        EvaluatorOptions options;
        options.cache = &cache;
        Evaluator evaluator(client, passage_strategy(), options);
        auto second = evaluator.evaluate({"q", "toy"}, runset, corpus);
        CHECK(second.llm_calls == 0);
        CHECK(mock.requests() == 0);
        CHECK(second.per_candidate_scores == first.per_candidate_scores);
    }
}

TEST_CASE("candidate arrival order never changes the outcome") {
    MockLlm mock(grade_by_passage({{"p1", "3"}, {"p2", "2"}, {"p3", "1"}, {"p4", "0"}}));
    LlmClient client(profile_for(mock));
    Evaluator evaluator(client, passage_strategy());

    auto corpus = id_corpus({"p1", "p2", "p3", "p4"});
    RunSet forward;
    forward.query_id = "q";
    forward.candidates.push_back(make_list("q", "A", {"p1", "p4", "p2"}));
    forward.candidates.push_back(make_list("q", "B", {"p2", "p3", "p1"}));
    forward.candidates.push_back(make_list("q", "C", {"p4", "p3", "p2"}));

    RunSet reversed = forward;
    std::reverse(reversed.candidates.begin(), reversed.candidates.end());

    auto a = evaluator.evaluate({"q", "toy"}, forward, corpus);
    auto b = evaluator.evaluate({"q", "toy"}, reversed, corpus);
    CHECK(a.winner_source == b.winner_source);
    CHECK(a.per_candidate_scores == b.per_candidate_scores);
}

TEST_CASE("outcome is identical under any concurrency bound") {
    std::map<std::string, std::string> grades;
    std::vector<std::string> ids;
    for (int i = 0; i < 30; ++i) {
        std::string pid = "p" + std::to_string(i);
        ids.push_back(pid);
        grades[pid] = std::to_string(i % 6);
    }
    auto corpus = id_corpus(ids);
    RunSet runset;
    runset.query_id = "q";
    std::mt19937 rng(5);
    for (int c = 0; c < 4; ++c) {
        auto shuffled = ids;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        shuffled.resize(10);
        runset.candidates.push_back(make_list("q", "s" + std::to_string(c), shuffled));
    }

    SelectionOutcome outcomes[2];
    int bounds[2] = {1, 8};
    for (int i = 0; i < 2; ++i) {
        MockLlm mock(grade_by_passage(grades));
        LlmClient client(profile_for(mock));
        EvaluatorOptions options;
        options.concurrency = bounds[i];
        Evaluator evaluator(client, passage_strategy(), options);
        outcomes[i] = evaluator.evaluate({"q", "toy"}, runset, corpus);
    }
    CHECK(outcomes[0].winner_source == outcomes[1].winner_source);
    CHECK(outcomes[0].per_candidate_scores == outcomes[1].per_candidate_scores);
    CHECK(outcomes[0].llm_calls == outcomes[1].llm_calls);
}

TEST_CASE("endpoint faults propagate out of evaluation") {
    MockLlm mock([](const nlohmann::json&) { return std::string("5"); });
    mock.fail_next(100);
    auto profile = profile_for(mock);
    profile.retry_limit = 1;
    LlmClient client(profile);
    Evaluator evaluator(client, passage_strategy());

    auto corpus = id_corpus({"p1"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "A", {"p1"}));
    CHECK_THROWS_AS(evaluator.evaluate({"q", "toy"}, runset, corpus), EndpointError);
}

TEST_CASE("an empty runset cannot be evaluated") {
    MockLlm mock([](const nlohmann::json&) { return std::string("5"); });
    LlmClient client(profile_for(mock));
    Evaluator evaluator(client, passage_strategy());
    RunSet runset;
    runset.query_id = "q";
    Corpus corpus = id_corpus({"p1"});
    CHECK_THROWS_AS(evaluator.evaluate({"q", "toy"}, runset, corpus), ValidationError);
}

TEST_CASE("candidates referencing unknown passages are an error") {
    MockLlm mock([](const nlohmann::json&) { return std::string("5"); });
    LlmClient client(profile_for(mock));
    Evaluator evaluator(client, passage_strategy());
    auto corpus = id_corpus({"p1"});
    RunSet runset;
    runset.query_id = "q";
    runset.candidates.push_back(make_list("q", "A", {"p1", "ghost"}));
    CHECK_THROWS_AS(evaluator.evaluate({"q", "toy"}, runset, corpus), NotFoundError);
}
