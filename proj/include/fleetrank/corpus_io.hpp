#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fleetrank/types.hpp"

namespace fleetrank {

enum class QueryFormat {
    Tsv,        // one "id<TAB>text" record per line
    TrecTopics, // <top> blocks with <num> and <title> tags
};

// Parses a query file. Duplicate ids and malformed lines are errors.
std::vector<Query> parse_queries(const std::string& path, QueryFormat format = QueryFormat::Tsv);
std::vector<Query> parse_queries(std::istream& in, QueryFormat format = QueryFormat::Tsv);

// Parses a line-delimited corpus: one JSON record per line with fields
// _id (string), title (optional string), text (string). Stats are computed
// on load over the indexed text (title + " " + text).
Corpus parse_corpus(const std::string& path);
Corpus parse_corpus(std::istream& in);

// Recomputes CorpusStats from the passages alone. parse_corpus uses this;
// exposed so stats can be verified to be a pure function of the passages.
CorpusStats compute_stats(const std::map<std::string, Passage>& passages);

// Parses 4-column whitespace-separated qrels: query_id iteration passage_id
// grade. The iteration column is ignored. Negative grades are invalid.
Qrels parse_qrels(const std::string& path);
Qrels parse_qrels(std::istream& in);

struct RunParseResult {
    std::vector<RankedList> lists; // ordered by (query_id, source_id)
    std::size_t repaired_lists = 0; // lists re-sorted because scores disagreed with ranks
};

// Parses a 6-column run file: query_id Q0 passage_id rank score tag.
// One RankedList per (query_id, tag). Within a list, ranks must be 1..n
// without gaps. Lists whose scores increase down the ranking are repaired
// by re-sorting on score descending (rank ascending as tiebreak) and
// counted in repaired_lists.
RunParseResult parse_run(const std::string& path);
RunParseResult parse_run(std::istream& in);

// Writes lists in the same 6-column format, scores with 6 decimal places.
// parse_run(write_run(x)) reproduces x for scores representable at that
// precision. Ids containing whitespace cannot be serialized and are
// rejected.
void write_run(const std::vector<RankedList>& lists, const std::string& path);
void write_run(const std::vector<RankedList>& lists, std::ostream& out);

// Enforces the RankedList invariants (non-increasing scores, unique ids);
// throws ValidationError when violated.
void validate_ranked_list(const RankedList& list);

} // namespace fleetrank
