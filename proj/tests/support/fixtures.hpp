#pragma once

// Shared test scaffolding: tiny corpora, temp directories, and the on-disk
// toy dataset used by the pipeline, service, and CLI tests.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fleetrank/corpus_io.hpp"
#include "fleetrank/prompts.hpp"
#include "fleetrank/types.hpp"

namespace fleetrank::testing {

inline Corpus make_corpus(const std::map<std::string, std::string>& texts) {
    Corpus corpus;
    for (const auto& [id, text] : texts) {
        Passage p;
        p.id = id;
        p.text = text;
        corpus.passages.emplace(id, std::move(p));
    }
    corpus.stats = compute_stats(corpus.passages);
    return corpus;
}

inline RankedList make_list(std::string query_id, std::string source_id,
                            const std::vector<std::string>& ids, double top_score = 10.0) {
    RankedList list;
    list.query_id = std::move(query_id);
    list.source_id = std::move(source_id);
    double score = top_score;
    for (const auto& id : ids) {
        list.entries.push_back({id, score});
        score -= 1.0;
    }
    return list;
}

// Unique scratch directory per call, removed by the guard's destructor.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        auto base = std::filesystem::temp_directory_path();
        path_ = base / ("fleetrank_test_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Canonical text form of a rendered prompt, shared by the golden tests and
// the acceptance gate. A single-message prompt is its content; a multi-turn
// prompt becomes "[role]\n<content>" blocks separated by blank lines.
inline std::string serialize_prompt(const PromptDoc& doc) {
    if (doc.messages.size() == 1) return doc.messages[0].content;
    std::string out;
    for (std::size_t i = 0; i < doc.messages.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += "[" + doc.messages[i].role + "]\n" + doc.messages[i].content;
    }
    return out;
}

// A small searchable world: 8 passages about two topics, 3 queries, graded
// qrels, and two static run files that disagree about query q1 so selection
// has something to do. Returns the path of a ready-to-load config.
struct ToyDataset {
    std::filesystem::path config_path;
    std::filesystem::path corpus_path;
    std::filesystem::path queries_path;
    std::filesystem::path qrels_path;
    std::filesystem::path run_good_path;
    std::filesystem::path run_bad_path;
};

inline ToyDataset write_toy_dataset(const std::filesystem::path& dir,
                                    const std::string& extra_config_fields = "") {
    ToyDataset ds;
    ds.corpus_path = dir / "corpus.jsonl";
    ds.queries_path = dir / "queries.tsv";
    ds.qrels_path = dir / "qrels.txt";
    ds.run_good_path = dir / "run_good.trec";
    ds.run_bad_path = dir / "run_bad.trec";
    ds.config_path = dir / "config.json";

    write_file(ds.corpus_path,
               R"({"_id": "d1", "title": "grain bowls", "text": "brown rice bowl with roasted squash"})"
               "\n"
               R"({"_id": "d2", "text": "rice cooker instructions for white rice"})"
               "\n"
               R"({"_id": "d3", "text": "fried rice with egg and scallions"})"
               "\n"
               R"({"_id": "d4", "text": "bicycle chain cleaning and lube guide"})"
               "\n"
               R"({"_id": "d5", "text": "fixing a slipped bicycle chain on the road"})"
               "\n"
               R"({"_id": "d6", "text": "rice noodles are not rice grains"})"
               "\n"
               R"({"_id": "d7", "text": "sourdough starter feeding schedule"})"
               "\n"
               R"({"_id": "d8", "text": "mountain bicycle tire pressure chart"})"
               "\n");
    // q3 matches nothing in the corpus; q4 recalls d7 but has no qrels
    write_file(ds.queries_path,
               "q1\tcooking rice\n"
               "q2\tbicycle chain repair\n"
               "q3\tquantum entanglement\n"
               "q4\tsourdough starter\n");
    write_file(ds.qrels_path,
               "q1 0 d2 3\n"
               "q1 0 d3 2\n"
               "q1 0 d1 1\n"
               "q1 0 d6 0\n"
               "q2 0 d5 3\n"
               "q2 0 d4 2\n"
               "q2 0 d8 1\n");
    // run_good orders q1 by descending qrels grade; run_bad inverts it.
    write_file(ds.run_good_path,
               "q1 Q0 d2 1 9.000000 run-good\n"
               "q1 Q0 d3 2 8.000000 run-good\n"
               "q1 Q0 d1 3 7.000000 run-good\n"
               "q1 Q0 d6 4 6.000000 run-good\n"
               "q2 Q0 d5 1 9.000000 run-good\n"
               "q2 Q0 d4 2 8.000000 run-good\n"
               "q2 Q0 d8 3 7.000000 run-good\n"
               "q4 Q0 d7 1 9.000000 run-good\n");
    write_file(ds.run_bad_path,
               "q1 Q0 d6 1 9.000000 run-bad\n"
               "q1 Q0 d1 2 8.000000 run-bad\n"
               "q1 Q0 d3 3 7.000000 run-bad\n"
               "q1 Q0 d2 4 6.000000 run-bad\n"
               "q2 Q0 d8 1 9.000000 run-bad\n"
               "q2 Q0 d4 2 8.000000 run-bad\n"
               "q2 Q0 d5 3 7.000000 run-bad\n"
               "q4 Q0 d7 1 9.000000 run-bad\n");

    std::string config = R"({
  "corpus": "corpus.jsonl",
  "queries": "queries.tsv",
  "query_format": "tsv",
  "qrels": "qrels.txt",
  "mode": "oracle",
  "bm25": {"k1": 0.9, "b": 0.4, "top_k": 100},
  "strategy": {"kind": "passage-pointwise-complex", "metric": "ndcg", "eval_depth": 10},
  "fleet": [
    {"source_id": "bm25-local", "kind": "in-process-bm25"},
    {"source_id": "run-bad", "kind": "static-run", "run_path": "run_bad.trec"},
    {"source_id": "run-good", "kind": "static-run", "run_path": "run_good.trec"}
  ],
  "output_dir": "out")";
    if (!extra_config_fields.empty()) config += ",\n  " + extra_config_fields;
    config += "\n}\n";
    write_file(ds.config_path, config);
    return ds;
}

} // namespace fleetrank::testing
