#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fleetrank/types.hpp"

namespace fleetrank {

struct Bm25Params {
    double k1 = 0.9;   // term-frequency saturation
    double b = 0.4;    // length-normalization strength, in [0,1]
    int top_k = 100;   // recall depth

    void validate() const;
};

struct Posting {
    std::string passage_id;
    std::uint32_t tf = 0;
};

// Immutable after build; scoring and retrieval are pure reads.
struct InvertedIndex {
    std::map<std::string, std::vector<Posting>> postings; // term -> postings, doc id ascending
    std::map<std::string, std::size_t> doc_lengths;
    double avgdl = 0.0;
    std::size_t doc_count = 0;
};

InvertedIndex build_index(const Corpus& corpus);

// Lucene-style IDF: ln(1 + (N - df + 0.5) / (df + 0.5)). Always >= 0.
double bm25_idf(std::size_t doc_count, std::size_t df);

// Score of one document for one query; unique query terms each contribute
// idf(t) * tf*(k1+1) / (tf + k1*(1 - b + b*dl/avgdl)).
double bm25_score(const InvertedIndex& index, const Bm25Params& params, const Query& query,
                  const std::string& passage_id);

// Top-k recall over the whole index. Scores non-increasing, ties broken by
// ascending passage id, zero-score documents excluded. source_id is
// "bm25-first-stage".
RankedList retrieve(const InvertedIndex& index, const Bm25Params& params, const Query& query);

inline constexpr const char* kFirstStageSourceId = "bm25-first-stage";

// Versioned single-file snapshot. Loading a file with a different format
// version fails.
void save_index(const InvertedIndex& index, const std::string& path);
InvertedIndex load_index(const std::string& path);
void save_index(const InvertedIndex& index, std::ostream& out);
InvertedIndex load_index(std::istream& in);

} // namespace fleetrank
