#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fleetrank/bm25.hpp"
#include "fleetrank/corpus_io.hpp"
#include "fleetrank/llm_client.hpp"
#include "fleetrank/prompts.hpp"
#include "fleetrank/reranker.hpp"

namespace fleetrank {

// Everything a pipeline run needs, loaded from one JSON file. String values
// may reference environment variables as ${NAME}; the substitution happens
// at load time so secrets stay out of files. Relative paths are resolved
// against the config file's directory.
struct PipelineConfig {
    enum class Mode { Oracle, Llm };

    std::filesystem::path corpus_path;
    std::filesystem::path queries_path;
    QueryFormat query_format = QueryFormat::Tsv;
    std::filesystem::path qrels_path; // required in oracle mode
    Bm25Params bm25;
    std::vector<RerankerSpec> fleet;
    Strategy strategy;
    LlmProfile llm; // required in llm mode
    Mode mode = Mode::Oracle;
    std::filesystem::path output_dir = "out";
    std::filesystem::path cache_path; // optional judgment cache
    int concurrency = 4;

    void validate() const;
};

const char* mode_name(PipelineConfig::Mode mode);
PipelineConfig::Mode mode_from_name(const std::string& name);

PipelineConfig load_config(const std::filesystem::path& path);

// ${NAME} -> value of environment variable NAME. Unknown variable -> error.
// "$${" escapes a literal "${".
std::string interpolate_env(const std::string& value);

} // namespace fleetrank
