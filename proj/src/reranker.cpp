#include "fleetrank/reranker.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <set>

#include <httplib.h>
#include <json.hpp>

#include "fleetrank/corpus_io.hpp"
#include "fleetrank/errors.hpp"

namespace fleetrank {

using nlohmann::json;

void RerankerSpec::validate() const {
    if (source_id.empty()) throw ValidationError("reranker source_id must be set");
    if (depth < 1) throw ValidationError("reranker depth must be >= 1: " + source_id);
    if (timeout_seconds <= 0)
        throw ValidationError("reranker timeout must be positive: " + source_id);
    switch (kind) {
    case Kind::Remote:
        if (endpoint.empty())
            throw ValidationError("remote reranker needs an endpoint: " + source_id);
        break;
    case Kind::StaticRun:
        if (run_path.empty())
            throw ValidationError("static-run reranker needs a run_path: " + source_id);
        break;
    case Kind::InProcessBm25:
        break;
    }
}

const char* reranker_kind_name(RerankerSpec::Kind kind) {
    switch (kind) {
    case RerankerSpec::Kind::InProcessBm25: return "in-process-bm25";
    case RerankerSpec::Kind::StaticRun: return "static-run";
    case RerankerSpec::Kind::Remote: return "remote";
    }
    return "?";
}

RerankerSpec::Kind reranker_kind_from_name(const std::string& name) {
    if (name == "in-process-bm25") return RerankerSpec::Kind::InProcessBm25;
    if (name == "static-run") return RerankerSpec::Kind::StaticRun;
    if (name == "remote") return RerankerSpec::Kind::Remote;
    throw ValidationError("unknown reranker kind: " + name);
}

Fleet::Fleet(std::vector<RerankerSpec> specs, const Corpus* corpus, const InvertedIndex* index,
             Bm25Params params)
    : specs_(std::move(specs)), corpus_(corpus), index_(index), params_(params) {
    if (specs_.empty()) throw ValidationError("fleet must contain at least one reranker");
    std::set<std::string> ids;
    for (const auto& spec : specs_) {
        spec.validate();
        if (!ids.insert(spec.source_id).second)
            throw ValidationError("duplicate reranker source_id: " + spec.source_id);
        if (spec.kind == RerankerSpec::Kind::StaticRun) {
            auto parsed = parse_run(spec.run_path.string());
            auto& per_query = static_runs_[spec.source_id];
            for (auto& list : parsed.lists) per_query.emplace(list.query_id, std::move(list));
        }
    }
}

namespace {

// Entries past the rerank depth keep their relative order and slot in below
// everything the reranker touched.
void append_tail(RankedList& out, const std::vector<RankedEntry>& input, std::size_t head_size) {
    if (head_size >= input.size()) return;
    double floor = out.entries.empty() ? 0.0 : out.entries.back().score;
    for (std::size_t i = head_size; i < input.size(); ++i)
        out.entries.push_back({input[i].passage_id, floor - 1.0});
}

} // namespace

RankedList Fleet::rerank(const RerankerSpec& spec, const Query& query,
                         const RankedList& candidates) const {
    if (candidates.entries.empty())
        throw ValidationError("rerank needs a non-empty candidate list (query " + query.id + ")");
    std::size_t head_size =
        std::min<std::size_t>(candidates.entries.size(), static_cast<std::size_t>(spec.depth));
    std::vector<RankedEntry> head(candidates.entries.begin(),
                                  candidates.entries.begin() + static_cast<long>(head_size));

    RankedList out;
    switch (spec.kind) {
    case RerankerSpec::Kind::InProcessBm25: out = rerank_bm25(spec, query, std::move(head)); break;
    case RerankerSpec::Kind::StaticRun: out = rerank_static(spec, query, std::move(head)); break;
    case RerankerSpec::Kind::Remote: out = rerank_remote(spec, query, std::move(head)); break;
    }
    append_tail(out, candidates.entries, head_size);
    return out;
}

RankedList Fleet::rerank_bm25(const RerankerSpec& spec, const Query& query,
                              std::vector<RankedEntry> head) const {
    for (auto& entry : head) entry.score = bm25_score(*index_, params_, query, entry.passage_id);
    std::stable_sort(head.begin(), head.end(), [](const RankedEntry& a, const RankedEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.passage_id < b.passage_id;
    });
    return {query.id, spec.source_id, std::move(head)};
}

RankedList Fleet::rerank_static(const RerankerSpec& spec, const Query& query,
                                std::vector<RankedEntry> head) const {
    const auto& per_query = static_runs_.at(spec.source_id);
    auto it = per_query.find(query.id);
    if (it == per_query.end())
        throw NotFoundError("static run " + spec.run_path.string() + " lacks query " + query.id);
    const RankedList& stored = it->second;

    std::map<std::string, std::size_t> position;
    double stored_min = stored.entries.front().score;
    for (std::size_t i = 0; i < stored.entries.size(); ++i) {
        position.emplace(stored.entries[i].passage_id, i);
        stored_min = std::min(stored_min, stored.entries[i].score);
    }

    // Candidates the stored run knows about, in stored order with stored
    // scores; the rest follow in their original order one notch below the
    // stored minimum.
    std::vector<RankedEntry> known;
    std::vector<RankedEntry> unknown;
    for (const auto& entry : head) {
        auto pos = position.find(entry.passage_id);
        if (pos == position.end())
            unknown.push_back({entry.passage_id, stored_min - 1.0});
        else
            known.push_back({entry.passage_id, stored.entries[pos->second].score});
    }
    std::stable_sort(known.begin(), known.end(),
                     [&](const RankedEntry& a, const RankedEntry& b) {
                         return position.at(a.passage_id) < position.at(b.passage_id);
                     });
    known.insert(known.end(), unknown.begin(), unknown.end());
    return {query.id, spec.source_id, std::move(known)};
}

RankedList Fleet::rerank_remote(const RerankerSpec& spec, const Query& query,
                                std::vector<RankedEntry> head) const {
    json request = {{"query_id", query.id}, {"query", query.text}, {"candidates", json::array()}};
    for (const auto& entry : head) {
        if (!corpus_->contains(entry.passage_id))
            throw NotFoundError("candidate passage missing from corpus: " + entry.passage_id);
        request["candidates"].push_back(
            {{"id", entry.passage_id}, {"text", corpus_->at(entry.passage_id).indexed_text()}});
    }

    std::size_t scheme = spec.endpoint.find("://");
    if (scheme == std::string::npos)
        throw ValidationError("remote endpoint must be an absolute URL: " + spec.endpoint);
    std::size_t slash = spec.endpoint.find('/', scheme + 3);
    std::string base = slash == std::string::npos ? spec.endpoint : spec.endpoint.substr(0, slash);
    std::string path = slash == std::string::npos ? "/" : spec.endpoint.substr(slash);

    httplib::Client client(base);
    client.set_connection_timeout(std::chrono::duration<double>(spec.timeout_seconds));
    client.set_read_timeout(std::chrono::duration<double>(spec.timeout_seconds));
    auto res = client.Post(path, request.dump(), "application/json");
    if (!res) {
        if (res.error() == httplib::Error::ConnectionTimeout || res.error() == httplib::Error::Read)
            throw TimeoutError("reranker " + spec.source_id + " timed out after " +
                               std::to_string(spec.timeout_seconds) + "s");
        throw TransportError("reranker " + spec.source_id +
                             " transport failure: " + httplib::to_string(res.error()));
    }
    if (res->status != 200)
        throw ProtocolError("reranker " + spec.source_id + " returned status " +
                            std::to_string(res->status));

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("ranking") || !reply["ranking"].is_array())
        throw ProtocolError("reranker " + spec.source_id + " reply is not a ranking object");

    std::set<std::string> expected;
    for (const auto& entry : head) expected.insert(entry.passage_id);

    std::vector<RankedEntry> entries;
    double previous = 0.0;
    for (const auto& item : reply["ranking"]) {
        if (!item.contains("id") || !item["id"].is_string() || !item.contains("score") ||
            !item["score"].is_number())
            throw ProtocolError("reranker " + spec.source_id + " reply entry is malformed");
        std::string id = item["id"].get<std::string>();
        double score = item["score"].get<double>();
        if (expected.erase(id) == 0)
            throw ProtocolError("reranker " + spec.source_id +
                                " reply is not a permutation: unexpected or duplicate id " + id);
        if (!entries.empty() && score > previous)
            throw ProtocolError("reranker " + spec.source_id + " reply scores increase at " + id);
        entries.push_back({std::move(id), score});
        previous = score;
    }
    if (!expected.empty())
        throw ProtocolError("reranker " + spec.source_id + " reply dropped " +
                            std::to_string(expected.size()) + " candidate(s)");
    return {query.id, spec.source_id, std::move(entries)};
}

RunSet Fleet::fan_out(const Query& query, const RankedList& candidates) const {
    std::vector<std::future<RankedList>> futures;
    futures.reserve(specs_.size());
    for (std::size_t i = 0; i < specs_.size(); ++i)
        futures.push_back(std::async(std::launch::async, [this, i, &query, &candidates] {
            return rerank(specs_[i], query, candidates);
        }));

    RunSet runset;
    runset.query_id = query.id;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        try {
            runset.candidates.push_back(futures[i].get());
        } catch (const std::exception& e) {
            runset.failures.emplace_back(specs_[i].source_id, e.what());
        }
    }
    std::sort(runset.candidates.begin(), runset.candidates.end(),
              [](const RankedList& a, const RankedList& b) { return a.source_id < b.source_id; });
    if (runset.candidates.empty()) {
        std::string detail;
        for (const auto& [source, error] : runset.failures)
            detail += "\n  " + source + ": " + error;
        throw FleetExhaustedError("every reranker failed for query " + query.id + detail);
    }
    return runset;
}

} // namespace fleetrank
