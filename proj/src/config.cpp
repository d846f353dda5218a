#include "fleetrank/config.hpp"

#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "fleetrank/errors.hpp"

namespace fleetrank {

using nlohmann::json;

void PipelineConfig::validate() const {
    if (corpus_path.empty()) throw ValidationError("config needs a corpus path");
    if (queries_path.empty()) throw ValidationError("config needs a queries path");
    if (fleet.empty()) throw ValidationError("config needs at least one reranker");
    bm25.validate();
    strategy.validate();
    for (const auto& spec : fleet) spec.validate();
    if (mode == Mode::Oracle && qrels_path.empty())
        throw ValidationError("oracle mode requires a qrels path");
    if (mode == Mode::Llm) llm.validate();
    if (concurrency < 1) throw ValidationError("concurrency must be >= 1");
}

const char* mode_name(PipelineConfig::Mode mode) {
    return mode == PipelineConfig::Mode::Oracle ? "oracle" : "llm";
}

PipelineConfig::Mode mode_from_name(const std::string& name) {
    if (name == "oracle") return PipelineConfig::Mode::Oracle;
    if (name == "llm") return PipelineConfig::Mode::Llm;
    throw ValidationError("unknown mode: " + name);
}

std::string interpolate_env(const std::string& value) {
    std::string out;
    out.reserve(value.size());
    std::size_t pos = 0;
    while (pos < value.size()) {
        std::size_t dollar = value.find("${", pos);
        if (dollar == std::string::npos) {
            out.append(value, pos, std::string::npos);
            break;
        }
        if (dollar > pos && value[dollar - 1] == '$') {
            out.append(value, pos, dollar - pos - 1);
            out += "${";
            pos = dollar + 2;
            continue;
        }
        out.append(value, pos, dollar - pos);
        std::size_t close = value.find('}', dollar + 2);
        if (close == std::string::npos)
            throw ValidationError("unterminated ${...} reference in: " + value);
        std::string name = value.substr(dollar + 2, close - dollar - 2);
        const char* resolved = std::getenv(name.c_str());
        if (!resolved)
            throw ValidationError("environment variable referenced by config is not set: " + name);
        out += resolved;
        pos = close + 1;
    }
    return out;
}

namespace {

std::string get_string(const json& node, const char* key, const std::string& fallback = "") {
    if (!node.contains(key)) return fallback;
    if (!node[key].is_string())
        throw ValidationError(std::string("config field must be a string: ") + key);
    return interpolate_env(node[key].get<std::string>());
}

std::filesystem::path resolve_path(const std::string& value, const std::filesystem::path& root) {
    if (value.empty()) return {};
    std::filesystem::path p(value);
    return p.is_absolute() ? p : root / p;
}

} // namespace

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    json root = json::parse(in, nullptr, false);
    if (root.is_discarded()) throw ParseError("config is not valid JSON: " + path.string());

    const std::filesystem::path base = path.has_parent_path() ? path.parent_path()
                                                              : std::filesystem::path(".");
    PipelineConfig config;
    config.corpus_path = resolve_path(get_string(root, "corpus"), base);
    config.queries_path = resolve_path(get_string(root, "queries"), base);
    config.qrels_path = resolve_path(get_string(root, "qrels"), base);
    config.cache_path = resolve_path(get_string(root, "cache"), base);
    config.output_dir = resolve_path(get_string(root, "output_dir", "out"), base);

    std::string format = get_string(root, "query_format", "tsv");
    if (format == "tsv") config.query_format = QueryFormat::Tsv;
    else if (format == "trec-topics") config.query_format = QueryFormat::TrecTopics;
    else throw ValidationError("unknown query_format: " + format);

    config.mode = mode_from_name(get_string(root, "mode", "oracle"));
    if (root.contains("concurrency")) config.concurrency = root["concurrency"].get<int>();

    if (root.contains("bm25")) {
        const json& b = root["bm25"];
        if (b.contains("k1")) config.bm25.k1 = b["k1"].get<double>();
        if (b.contains("b")) config.bm25.b = b["b"].get<double>();
        if (b.contains("top_k")) config.bm25.top_k = b["top_k"].get<int>();
    }

    if (root.contains("strategy")) {
        const json& s = root["strategy"];
        config.strategy.kind = strategy_kind_from_name(get_string(s, "kind", "passage-pointwise-complex"));
        config.strategy.aggregation_metric = metric_from_name(get_string(s, "metric", "ndcg"));
        if (s.contains("eval_depth")) config.strategy.eval_depth = s["eval_depth"].get<int>();
    }

    if (root.contains("fleet")) {
        if (!root["fleet"].is_array()) throw ValidationError("config fleet must be an array");
        for (const json& f : root["fleet"]) {
            RerankerSpec spec;
            spec.source_id = get_string(f, "source_id");
            spec.kind = reranker_kind_from_name(get_string(f, "kind", "in-process-bm25"));
            spec.endpoint = get_string(f, "endpoint");
            spec.run_path = resolve_path(get_string(f, "run_path"), base);
            if (f.contains("timeout_seconds"))
                spec.timeout_seconds = f["timeout_seconds"].get<double>();
            if (f.contains("depth")) spec.depth = f["depth"].get<int>();
            config.fleet.push_back(std::move(spec));
        }
    }

    if (root.contains("llm")) {
        const json& l = root["llm"];
        config.llm.endpoint = get_string(l, "endpoint");
        config.llm.model_name = get_string(l, "model_name");
        std::string llm_mode = get_string(l, "mode", "chat");
        if (llm_mode == "chat") config.llm.mode = LlmProfile::Mode::Chat;
        else if (llm_mode == "completion") config.llm.mode = LlmProfile::Mode::Completion;
        else throw ValidationError("unknown llm mode: " + llm_mode);
        if (l.contains("max_reply_tokens"))
            config.llm.max_reply_tokens = l["max_reply_tokens"].get<int>();
        if (l.contains("retry_limit")) config.llm.retry_limit = l["retry_limit"].get<int>();
        config.llm.credentials_env = get_string(l, "credentials_env");
        if (l.contains("timeout_seconds"))
            config.llm.timeout_seconds = l["timeout_seconds"].get<double>();
        if (l.contains("backoff_initial_ms"))
            config.llm.backoff_initial_ms = l["backoff_initial_ms"].get<double>();
    }

    config.validate();
    return config;
}

} // namespace fleetrank
