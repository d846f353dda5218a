#include "fleetrank/corpus_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fleetrank/errors.hpp"
#include "fleetrank/tokenizer.hpp"

namespace fleetrank {

namespace {

using nlohmann::json;

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for reading: " + path);
    return in;
}

// All text inputs are required to be valid UTF-8.
bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        std::size_t extra;
        unsigned min_cp;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            extra = 1;
            min_cp = 0x80;
        } else if ((c & 0xF0) == 0xE0) {
            extra = 2;
            min_cp = 0x800;
        } else if ((c & 0xF8) == 0xF0) {
            extra = 3;
            min_cp = 0x10000;
        } else {
            return false;
        }
        if (i + extra >= s.size()) return false;
        unsigned cp = c & (0x3F >> extra);
        for (std::size_t j = 1; j <= extra; ++j) {
            unsigned char cc = static_cast<unsigned char>(s[i + j]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
        i += extra + 1;
    }
    return true;
}

void require_utf8(std::string_view s, long line) {
    if (!valid_utf8(s)) throw ParseError("invalid UTF-8 byte sequence", line);
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool has_whitespace(std::string_view s) {
    return std::any_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

std::vector<Query> parse_queries_tsv(std::istream& in) {
    std::vector<Query> queries;
    std::set<std::string> seen;
    std::string raw;
    long line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = strip_cr(std::move(raw));
        if (line.empty()) continue;
        require_utf8(line, line_no);
        auto first_tab = line.find('\t');
        if (first_tab == std::string::npos)
            throw ParseError("expected id<TAB>text", line_no);
        if (line.find('\t', first_tab + 1) != std::string::npos)
            throw ParseError("expected exactly 2 tab-separated fields", line_no);
        Query q{line.substr(0, first_tab), line.substr(first_tab + 1)};
        if (q.id.empty()) throw ParseError("empty query id", line_no);
        if (q.text.empty()) throw ParseError("empty query text", line_no);
        if (!seen.insert(q.id).second)
            throw ValidationError("duplicate query id: " + q.id);
        queries.push_back(std::move(q));
    }
    return queries;
}

// Classic topic format: <top> blocks containing <num> Number: ... and
// <title> ... tags. Only num and title are consumed.
std::vector<Query> parse_queries_trec(std::istream& in) {
    std::vector<Query> queries;
    std::set<std::string> seen;
    std::string raw;
    long line_no = 0;
    std::string current_id;
    std::string current_title;
    bool in_title = false;

    auto flush = [&](long at_line) {
        if (current_id.empty() && current_title.empty()) return;
        if (current_id.empty()) throw ParseError("topic without <num>", at_line);
        if (current_title.empty()) throw ParseError("topic without <title>", at_line);
        if (!seen.insert(current_id).second)
            throw ValidationError("duplicate query id: " + current_id);
        queries.push_back({current_id, trim(current_title)});
        current_id.clear();
        current_title.clear();
    };

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = strip_cr(std::move(raw));
        require_utf8(line, line_no);
        std::string t = trim(line);
        if (t.rfind("<top>", 0) == 0) {
            in_title = false;
            continue;
        }
        if (t.rfind("</top>", 0) == 0) {
            in_title = false;
            flush(line_no);
            continue;
        }
        if (t.rfind("<num>", 0) == 0) {
            in_title = false;
            std::string rest = trim(t.substr(5));
            if (rest.rfind("Number:", 0) == 0) rest = trim(rest.substr(7));
            current_id = rest;
            continue;
        }
        if (t.rfind("<title>", 0) == 0) {
            current_title = trim(t.substr(7));
            in_title = true;
            continue;
        }
        if (t.rfind("<desc>", 0) == 0 || t.rfind("<narr>", 0) == 0) {
            in_title = false;
            continue;
        }
        if (in_title && !t.empty()) {
            if (!current_title.empty()) current_title += " ";
            current_title += t;
        }
    }
    flush(line_no);
    return queries;
}

} // namespace

std::vector<Query> parse_queries(const std::string& path, QueryFormat format) {
    auto in = open_input(path);
    return parse_queries(in, format);
}

std::vector<Query> parse_queries(std::istream& in, QueryFormat format) {
    switch (format) {
    case QueryFormat::Tsv:
        return parse_queries_tsv(in);
    case QueryFormat::TrecTopics:
        return parse_queries_trec(in);
    }
    throw ValidationError("unknown query format");
}

CorpusStats compute_stats(const std::map<std::string, Passage>& passages) {
    CorpusStats stats;
    stats.doc_count = passages.size();
    std::size_t total = 0;
    for (const auto& [id, p] : passages) {
        std::size_t len = token_count(p.indexed_text());
        stats.doc_lengths[id] = len;
        total += len;
    }
    stats.avgdl = passages.empty()
                      ? 0.0
                      : static_cast<double>(total) / static_cast<double>(passages.size());
    return stats;
}

Corpus parse_corpus(const std::string& path) {
    auto in = open_input(path);
    return parse_corpus(in);
}

Corpus parse_corpus(std::istream& in) {
    Corpus corpus;
    std::string raw;
    long line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = strip_cr(std::move(raw));
        if (trim(line).empty()) continue;
        require_utf8(line, line_no);
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object())
            throw ParseError("malformed corpus record", line_no);
        if (!rec.contains("_id") || !rec["_id"].is_string())
            throw ParseError("corpus record missing _id", line_no);
        if (!rec.contains("text") || !rec["text"].is_string())
            throw ParseError("corpus record missing text", line_no);
        Passage p;
        p.id = rec["_id"].get<std::string>();
        p.text = rec["text"].get<std::string>();
        if (rec.contains("title") && rec["title"].is_string()) {
            auto title = rec["title"].get<std::string>();
            if (!title.empty()) p.title = std::move(title);
        }
        if (p.id.empty()) throw ParseError("empty _id", line_no);
        if (!corpus.passages.emplace(p.id, p).second)
            throw ValidationError("duplicate passage _id: " + p.id);
    }
    corpus.stats = compute_stats(corpus.passages);
    return corpus;
}

Qrels parse_qrels(const std::string& path) {
    auto in = open_input(path);
    return parse_qrels(in);
}

Qrels parse_qrels(std::istream& in) {
    Qrels qrels;
    std::string raw;
    long line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = strip_cr(std::move(raw));
        if (trim(line).empty()) continue;
        require_utf8(line, line_no);
        std::istringstream ls(line);
        std::string qid, iteration, pid, grade_str, extra;
        if (!(ls >> qid >> iteration >> pid >> grade_str))
            throw ParseError("expected 4 columns: query_id iteration passage_id grade", line_no);
        if (ls >> extra) throw ParseError("unexpected extra column", line_no);
        int grade = 0;
        try {
            std::size_t pos = 0;
            grade = std::stoi(grade_str, &pos);
            if (pos != grade_str.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError("non-integer grade '" + grade_str + "'", line_no);
        }
        if (grade < 0) throw ValidationError("negative grade for (" + qid + ", " + pid + ")");
        qrels.grades[{qid, pid}] = grade;
    }
    return qrels;
}

void validate_ranked_list(const RankedList& list) {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        const auto& e = list.entries[i];
        if (!ids.insert(e.passage_id).second)
            throw ValidationError("duplicate passage id '" + e.passage_id + "' in list for query " +
                                  list.query_id);
        if (i > 0 && e.score > list.entries[i - 1].score)
            throw ValidationError("scores not non-increasing in list for query " + list.query_id);
    }
}

RunParseResult parse_run(const std::string& path) {
    auto in = open_input(path);
    return parse_run(in);
}

RunParseResult parse_run(std::istream& in) {
    struct Row {
        long rank;
        double score;
        std::string pid;
    };
    // Group rows by (query_id, tag), preserving first-appearance order for
    // deterministic output ordering.
    std::map<std::pair<std::string, std::string>, std::vector<Row>> groups;
    std::vector<std::pair<std::string, std::string>> order;

    std::string raw;
    long line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = strip_cr(std::move(raw));
        if (trim(line).empty()) continue;
        require_utf8(line, line_no);
        std::istringstream ls(line);
        std::string qid, q0, pid, rank_str, score_str, tag, extra;
        if (!(ls >> qid >> q0 >> pid >> rank_str >> score_str >> tag))
            throw ParseError("expected 6 columns: qid Q0 docid rank score tag", line_no);
        if (ls >> extra) throw ParseError("unexpected extra column", line_no);
        long rank = 0;
        double score = 0.0;
        try {
            std::size_t pos = 0;
            rank = std::stol(rank_str, &pos);
            if (pos != rank_str.size()) throw std::invalid_argument("trailing");
            pos = 0;
            score = std::stod(score_str, &pos);
            if (pos != score_str.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError("bad rank or score field", line_no);
        }
        if (rank < 1) throw ParseError("rank must be >= 1", line_no);
        auto key = std::make_pair(qid, tag);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back({rank, score, pid});
    }

    RunParseResult result;
    for (const auto& key : order) {
        auto& rows = groups[key];
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.rank < b.rank; });
        std::set<std::string> ids;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].rank != static_cast<long>(i) + 1)
                throw ValidationError("ranks for query " + key.first + " tag " + key.second +
                                      " are not 1..n without gaps");
            if (!ids.insert(rows[i].pid).second)
                throw ValidationError("duplicate (query, passage) pair (" + key.first + ", " +
                                      rows[i].pid + ") under tag " + key.second);
        }
        bool monotone = true;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].score > rows[i - 1].score) {
                monotone = false;
                break;
            }
        }
        if (!monotone) {
            // Repair by trusting the scores; the rank column breaks ties.
            std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.rank < b.rank;
            });
            ++result.repaired_lists;
        }
        RankedList list;
        list.query_id = key.first;
        list.source_id = key.second;
        list.entries.reserve(rows.size());
        for (const auto& row : rows) list.entries.push_back({row.pid, row.score});
        result.lists.push_back(std::move(list));
    }
    return result;
}

void write_run(const std::vector<RankedList>& lists, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + path);
    write_run(lists, out);
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

void write_run(const std::vector<RankedList>& lists, std::ostream& out) {
    char score_buf[64];
    for (const auto& list : lists) {
        validate_ranked_list(list);
        if (has_whitespace(list.query_id) || has_whitespace(list.source_id))
            throw ValidationError("query_id/source_id with whitespace cannot be serialized");
        for (std::size_t i = 0; i < list.entries.size(); ++i) {
            const auto& e = list.entries[i];
            if (has_whitespace(e.passage_id))
                throw ValidationError("passage id with whitespace cannot be serialized: " +
                                      e.passage_id);
            std::snprintf(score_buf, sizeof(score_buf), "%.6f", e.score);
            out << list.query_id << " Q0 " << e.passage_id << " " << (i + 1) << " " << score_buf
                << " " << list.source_id << "\n";
        }
    }
}

} // namespace fleetrank
