#include "fleetrank/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "fleetrank/errors.hpp"
#include "fleetrank/tokenizer.hpp"

namespace fleetrank {

namespace {
constexpr const char* kIndexMagic = "fleetrank-bm25-index";
constexpr int kIndexVersion = 1;
} // namespace

void Bm25Params::validate() const {
    if (!(k1 > 0.0)) throw ValidationError("k1 must be > 0");
    if (!(b >= 0.0 && b <= 1.0)) throw ValidationError("b must be in [0,1]");
    if (top_k < 1) throw ValidationError("top_k must be >= 1");
}

InvertedIndex build_index(const Corpus& corpus) {
    if (corpus.passages.empty()) throw ValidationError("cannot index an empty corpus");
    InvertedIndex index;
    index.doc_count = corpus.passages.size();
    std::size_t total_len = 0;
    for (const auto& [id, passage] : corpus.passages) {
        std::unordered_map<std::string, std::uint32_t> tf;
        std::size_t dl = 0;
        for (auto& term : tokenize(passage.indexed_text())) {
            ++tf[term];
            ++dl;
        }
        index.doc_lengths[id] = dl;
        total_len += dl;
        for (auto& [term, count] : tf) index.postings[term].push_back({id, count});
    }
    // passages is id-ordered, so postings come out id-ordered per term
    index.avgdl = static_cast<double>(total_len) / static_cast<double>(index.doc_count);
    return index;
}

double bm25_idf(std::size_t doc_count, std::size_t df) {
    double n = static_cast<double>(doc_count);
    double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

namespace {

// Shared by the single-document scorer and the term-at-a-time accumulator
// so both routes compute bit-identical per-term contributions.
inline double term_contribution(double idf, std::uint32_t tf, double k1, double b, double dl,
                                double avgdl) {
    double tfd = static_cast<double>(tf);
    return idf * tfd * (k1 + 1.0) / (tfd + k1 * (1.0 - b + b * dl / avgdl));
}

} // namespace

double bm25_score(const InvertedIndex& index, const Bm25Params& params, const Query& query,
                  const std::string& passage_id) {
    params.validate();
    auto dl_it = index.doc_lengths.find(passage_id);
    if (dl_it == index.doc_lengths.end())
        throw NotFoundError("passage not in index: " + passage_id);
    double dl = static_cast<double>(dl_it->second);

    double score = 0.0;
    for (const auto& term : unique_terms(query.text)) {
        auto post_it = index.postings.find(term);
        if (post_it == index.postings.end()) continue;
        const auto& postings = post_it->second;
        auto doc_it = std::lower_bound(postings.begin(), postings.end(), passage_id,
                                       [](const Posting& p, const std::string& id) {
                                           return p.passage_id < id;
                                       });
        if (doc_it == postings.end() || doc_it->passage_id != passage_id) continue;
        double idf = bm25_idf(index.doc_count, postings.size());
        score += term_contribution(idf, doc_it->tf, params.k1, params.b, dl, index.avgdl);
    }
    return score;
}

RankedList retrieve(const InvertedIndex& index, const Bm25Params& params, const Query& query) {
    params.validate();
    // Term-at-a-time accumulation. Accumulator keyed by doc id keeps the
    // per-document term order identical to the single-document scorer, so
    // retrieve() and brute-force scoring agree bit for bit.
    std::map<std::string, double> acc;
    for (const auto& term : unique_terms(query.text)) {
        auto post_it = index.postings.find(term);
        if (post_it == index.postings.end()) continue;
        const auto& postings = post_it->second;
        double idf = bm25_idf(index.doc_count, postings.size());
        for (const auto& posting : postings) {
            double dl = static_cast<double>(index.doc_lengths.at(posting.passage_id));
            acc[posting.passage_id] +=
                term_contribution(idf, posting.tf, params.k1, params.b, dl, index.avgdl);
        }
    }

    std::vector<RankedEntry> entries;
    entries.reserve(acc.size());
    for (const auto& [id, score] : acc) {
        if (score > 0.0) entries.push_back({id, score});
    }
    std::stable_sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.passage_id < b.passage_id;
    });
    if (entries.size() > static_cast<std::size_t>(params.top_k))
        entries.resize(static_cast<std::size_t>(params.top_k));

    RankedList list;
    list.query_id = query.id;
    list.source_id = kFirstStageSourceId;
    list.entries = std::move(entries);
    return list;
}

void save_index(const InvertedIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + path);
    save_index(index, out);
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

void save_index(const InvertedIndex& index, std::ostream& out) {
    char buf[64];
    out << kIndexMagic << " v" << kIndexVersion << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", index.avgdl);
    out << "doc_count " << index.doc_count << "\n";
    out << "avgdl " << buf << "\n";
    out << "docs " << index.doc_lengths.size() << "\n";
    for (const auto& [id, dl] : index.doc_lengths) out << id << "\t" << dl << "\n";
    out << "terms " << index.postings.size() << "\n";
    for (const auto& [term, postings] : index.postings) {
        out << term << "\t" << postings.size();
        for (const auto& p : postings) out << "\t" << p.passage_id << ":" << p.tf;
        out << "\n";
    }
}

InvertedIndex load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for reading: " + path);
    return load_index(in);
}

InvertedIndex load_index(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw ParseError("empty index file");
    std::string expected = std::string(kIndexMagic) + " v" + std::to_string(kIndexVersion);
    if (header != expected)
        throw ValidationError("index format version mismatch: got '" + header + "', expected '" +
                              expected + "'");

    InvertedIndex index;
    std::string key;
    if (!(in >> key >> index.doc_count) || key != "doc_count")
        throw ParseError("bad index file: doc_count");
    if (!(in >> key >> index.avgdl) || key != "avgdl") throw ParseError("bad index file: avgdl");
    std::size_t n_docs = 0;
    if (!(in >> key >> n_docs) || key != "docs") throw ParseError("bad index file: docs");
    for (std::size_t i = 0; i < n_docs; ++i) {
        std::string id;
        std::size_t dl;
        if (!(in >> id >> dl)) throw ParseError("bad index file: doc length record");
        index.doc_lengths[id] = dl;
    }
    std::size_t n_terms = 0;
    if (!(in >> key >> n_terms) || key != "terms") throw ParseError("bad index file: terms");
    in.ignore(); // rest of the "terms N" line
    for (std::size_t i = 0; i < n_terms; ++i) {
        std::string line;
        if (!std::getline(in, line)) throw ParseError("bad index file: postings record");
        std::istringstream ls(line);
        std::string term;
        std::size_t df = 0;
        if (!(ls >> term >> df)) throw ParseError("bad index file: postings header");
        auto& postings = index.postings[term];
        postings.reserve(df);
        std::string cell;
        while (ls >> cell) {
            auto colon = cell.rfind(':');
            if (colon == std::string::npos) throw ParseError("bad index file: posting cell");
            Posting p;
            p.passage_id = cell.substr(0, colon);
            p.tf = static_cast<std::uint32_t>(std::stoul(cell.substr(colon + 1)));
            postings.push_back(std::move(p));
        }
        if (postings.size() != df) throw ParseError("bad index file: df mismatch for " + term);
    }
    return index;
}

} // namespace fleetrank
