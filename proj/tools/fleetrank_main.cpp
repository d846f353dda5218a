#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fleetrank/config.hpp"
#include "fleetrank/corpus_io.hpp"
#include "fleetrank/cost.hpp"
#include "fleetrank/errors.hpp"
#include "fleetrank/pipeline.hpp"
#include "fleetrank/service.hpp"

using namespace fleetrank;
using nlohmann::json;

namespace {

// Flags shared by the pipeline-backed subcommands; each one overrides the
// corresponding config field when given.
struct CommonFlags {
    std::string config;
    std::string output_dir;
    std::string mode;
    std::string strategy;
    std::string metric;
    int k = 0;

    void attach(CLI::App* cmd, bool config_required = true) {
        auto* opt = cmd->add_option("--config", config, "pipeline config JSON");
        if (config_required) opt->required();
        cmd->add_option("--output-dir", output_dir, "where reports land");
        cmd->add_option("--mode", mode, "oracle or llm");
        cmd->add_option("--strategy", strategy, "prompting strategy kind");
        cmd->add_option("--metric", metric, "ndcg, map or mrr");
        cmd->add_option("--k", k, "evaluation depth");
    }

    PipelineConfig load() const {
        PipelineConfig cfg = load_config(config);
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        if (!mode.empty()) cfg.mode = mode_from_name(mode);
        if (!strategy.empty()) cfg.strategy.kind = strategy_kind_from_name(strategy);
        if (!metric.empty()) cfg.strategy.aggregation_metric = metric_from_name(metric);
        if (k > 0) cfg.strategy.eval_depth = k;
        cfg.validate();
        return cfg;
    }
};

int run(int argc, char** argv) {
    CLI::App app{"Collaborative retrieval: BM25 recall, a reranker fleet, per-query selection"};
    app.require_subcommand(1);

    CommonFlags index_flags;
    std::string index_output;
    auto* index_cmd = app.add_subcommand("index", "build the BM25 index and save it");
    index_flags.attach(index_cmd);
    index_cmd->add_option("--output", index_output, "index snapshot path")->required();

    CommonFlags retrieve_flags;
    std::string retrieve_output;
    auto* retrieve_cmd =
        app.add_subcommand("retrieve", "run first-stage recall for every query, write a run file");
    retrieve_flags.attach(retrieve_cmd);
    retrieve_cmd->add_option("--output", retrieve_output, "run file path (default stdout)");

    CommonFlags search_flags;
    std::string search_text, search_id = "adhoc";
    auto* search_cmd = app.add_subcommand("search", "answer one query end to end");
    search_flags.attach(search_cmd);
    search_cmd->add_option("--query", search_text, "query text")->required();
    search_cmd->add_option("--query-id", search_id, "query id for the result");

    CommonFlags bench_flags;
    auto* bench_cmd = app.add_subcommand("benchmark", "score the fleet and both selection rows");
    bench_flags.attach(bench_cmd);

    auto* analyze_cmd = app.add_subcommand("analyze", "offline analyses over benchmark details");
    analyze_cmd->require_subcommand(1);

    std::string freq_details, freq_metric = "ndcg", freq_output;
    auto* freq_cmd = analyze_cmd->add_subcommand("frequency", "how often each source wins");
    freq_cmd->add_option("--details", freq_details, "details.jsonl from a benchmark run")
        ->required();
    freq_cmd->add_option("--metric", freq_metric, "ndcg, map or mrr");
    freq_cmd->add_option("--output", freq_output, "write the table as JSON here too");

    CommonFlags bias_flags;
    int bias_permutations = 24;
    unsigned bias_seed = 7;
    auto* bias_cmd =
        analyze_cmd->add_subcommand("bias", "selection-rate drift under candidate reordering");
    bias_flags.attach(bias_cmd);
    bias_cmd->add_option("--permutations", bias_permutations, "presentation orders to try");
    bias_cmd->add_option("--seed", bias_seed, "shuffle seed");

    std::string cost_method = "passage-based";
    CostParams cost_params;
    auto* cost_cmd = app.add_subcommand("cost", "inference-cost estimate for a judging method");
    cost_cmd->add_option("--method", cost_method,
                         "passage-based, rank-pointwise, rank-pairwise, rankgpt or listt5");
    cost_cmd->add_option("--lp", cost_params.l_p, "average passage length in tokens");
    cost_cmd->add_option("--k", cost_params.k, "passages per ranking");
    cost_cmd->add_option("--nranks", cost_params.n_ranks, "candidate rankings");
    cost_cmd->add_option("--nstep", cost_params.n_step, "sliding-window steps");
    cost_cmd->add_option("--swindows", cost_params.s_windows, "window size");
    cost_cmd->add_option("--n", cost_params.n, "candidate pool size");
    cost_cmd->add_option("--tllm", cost_params.t_llm, "seconds per token-unit");

    CommonFlags serve_flags;
    std::string serve_host = "127.0.0.1";
    int serve_port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "HTTP search service");
    serve_flags.attach(serve_cmd);
    serve_cmd->add_option("--host", serve_host, "bind address");
    serve_cmd->add_option("--port", serve_port, "bind port");

    CLI11_PARSE(app, argc, argv);

    if (*index_cmd) {
        PipelineConfig cfg = index_flags.load();
        Corpus corpus = parse_corpus(cfg.corpus_path.string());
        InvertedIndex index = build_index(corpus);
        save_index(index, index_output);
        std::cout << "indexed " << index.doc_count << " passages, "
                  << index.postings.size() << " terms -> " << index_output << "\n";
        return 0;
    }
    if (*retrieve_cmd) {
        PipelineConfig cfg = retrieve_flags.load();
        Corpus corpus = parse_corpus(cfg.corpus_path.string());
        InvertedIndex index = build_index(corpus);
        std::vector<Query> queries = parse_queries(cfg.queries_path.string(), cfg.query_format);
        std::vector<RankedList> lists;
        for (const Query& query : queries) {
            RankedList list = retrieve(index, cfg.bm25, query);
            if (!list.entries.empty()) lists.push_back(std::move(list));
        }
        if (retrieve_output.empty()) {
            write_run(lists, std::cout);
        } else {
            write_run(lists, retrieve_output);
            std::cout << "wrote " << lists.size() << " rankings -> " << retrieve_output << "\n";
        }
        return 0;
    }
    if (*search_cmd) {
        Pipeline pipeline(search_flags.load());
        SearchResult result = pipeline.search({search_id, search_text});
        std::cout << json::parse(search_result_to_json(result)).dump(2) << "\n";
        return 0;
    }
    if (*bench_cmd) {
        PipelineConfig cfg = bench_flags.load();
        Pipeline pipeline(cfg);
        BenchmarkReport report = pipeline.run_benchmark();
        write_benchmark_report(report, cfg.output_dir);
        std::cout << format_benchmark_table(report)
                  << "reports -> " << cfg.output_dir.string() << "\n";
        return 0;
    }
    if (*freq_cmd) {
        FrequencyReport report =
            frequency_from_details(read_details(freq_details), metric_from_name(freq_metric));
        json doc = {{"metric", freq_metric},
                    {"query_count", report.query_count},
                    {"proportions", report.proportions}};
        std::printf("%-24s %10s\n", "source", "share");
        for (const auto& [source, share] : report.proportions)
            std::printf("%-24s %10.4f\n", source.c_str(), share);
        if (!freq_output.empty()) {
            std::ofstream out(freq_output);
            if (!out) throw IoError("cannot write " + freq_output);
            out << doc.dump(2) << "\n";
        }
        return 0;
    }
    if (*bias_cmd) {
        PipelineConfig cfg = bias_flags.load();
        Pipeline pipeline(cfg);
        BiasReport report = pipeline.analyze_bias(bias_permutations, bias_seed);
        json doc = {{"permutation_trials", report.permutation_trials},
                    {"query_count", report.query_count},
                    {"max_rate_delta", report.max_rate_delta},
                    {"selection_counts", report.selection_counts}};
        std::cout << doc.dump(2) << "\n";
        std::filesystem::create_directories(cfg.output_dir);
        std::ofstream out(cfg.output_dir / "bias.json");
        if (!out) throw IoError("cannot write " + (cfg.output_dir / "bias.json").string());
        out << doc.dump(2) << "\n";
        return 0;
    }
    if (*cost_cmd) {
        CostEstimate estimate = estimate_cost(cost_params, cost_method_from_name(cost_method));
        std::printf("%s: %.6g units, %.6g seconds\n", cost_method.c_str(), estimate.units,
                    estimate.seconds);
        return 0;
    }
    if (*serve_cmd) {
        Pipeline pipeline(serve_flags.load());
        SearchService service(pipeline);
        service.start(serve_host, serve_port);
        std::cout << "serving on " << serve_host << ":" << service.port()
                  << " (POST /search, GET /healthz)\n";
        // Runs until the process is stopped; stop() drains in-flight work.
        std::promise<void>().get_future().wait();
        return 0;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
