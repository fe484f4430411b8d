#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "refactor/config.hpp"
#include "refactor/errors.hpp"
#include "refactor/pipeline.hpp"

namespace {

using refactor::pipeline::Pipeline;
using refactor::pipeline::PipelineOptions;

struct GlobalArgs {
    std::string config_file;
    std::string run_dir = "run";
    std::uint64_t seed = 1;
    std::string backend = "replay";
    std::string catalog_dir = "catalog";
    std::string endpoint;
    std::string api_key;
    int abort_after_items = 0;
};

PipelineOptions make_options(const GlobalArgs& g) {
    PipelineOptions opts;
    if (!g.config_file.empty()) opts.config = refactor::load_config(g.config_file);
    opts.run_dir = g.run_dir;
    opts.seed = g.seed;
    opts.backend = refactor::parse_backend(g.backend);
    opts.catalog_dir = g.catalog_dir;
    opts.endpoint = g.endpoint;
    opts.api_key = g.api_key;
    opts.abort_after_items = g.abort_after_items;
    return opts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LLM-assisted refactoring pipeline over judged program corpora"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_file, "key=value config file");
    app.add_option("--run-dir", g.run_dir, "run state directory")->capture_default_str();
    app.add_option("--seed", g.seed, "sampling seed")->capture_default_str();
    app.add_option("--backend", g.backend, "gateway backend: live, record, replay")
        ->capture_default_str();
    app.add_option("--catalog", g.catalog_dir, "refactoring example catalog directory")
        ->capture_default_str();
    app.add_option("--endpoint", g.endpoint, "model endpoint URL (overrides environment)");
    app.add_option("--api-key", g.api_key, "endpoint API key (overrides environment)");
    app.add_option("--abort-after-items", g.abort_after_items,
                   "exit(3) after N generation items (testing hook)")
        ->group("");

    std::string raw_file, problems_dir;
    int n_override = 0;
    auto* pre = app.add_subcommand("preprocess", "ingest, dedup, filter, sample the corpus");
    pre->add_option("--raw", raw_file, "raw submissions JSONL")->required();
    pre->add_option("--problems", problems_dir, "problems directory")->required();
    pre->add_option("--n", n_override, "programs kept per problem (overrides config)");

    auto* eval = app.add_subcommand("evaluate-examples",
                                    "one-shot evaluation of every catalog example");
    int select_k = 0;
    auto* sel = app.add_subcommand("select", "print top-k example ids per problem");
    sel->add_option("--k", select_k, "examples per problem (defaults to configured mode)");
    auto* ref = app.add_subcommand("refactor", "generate and judge refactoring candidates");
    auto* rep = app.add_subcommand("report", "aggregate refactor records into reports");
    std::string formatter_override;
    auto* fmt = app.add_subcommand("format-distance",
                                   "distance of programs to their formatted form");
    fmt->add_option("--formatter", formatter_override,
                    "formatter command reading a file path argument");

    CLI11_PARSE(app, argc, argv);

    try {
        auto opts = make_options(g);
        if (*pre && n_override > 0) opts.config.n_per_problem = n_override;
        if (*fmt && !formatter_override.empty())
            opts.config.formatter_command = formatter_override;
        Pipeline pipeline(std::move(opts));

        if (*pre) {
            pipeline.preprocess(raw_file, problems_dir);
            std::printf("preprocess done: %s\n", pipeline.paths().corpus_file.c_str());
        } else if (*eval) {
            pipeline.evaluate_examples();
            std::printf("score matrix: %s\n", pipeline.paths().matrix_file.c_str());
        } else if (*sel) {
            const auto& mode = pipeline.config().prompt_mode;
            int k = select_k;
            if (k == 0)
                k = mode.kind == refactor::PromptMode::Kind::Few
                        ? mode.few_k
                        : (mode.kind == refactor::PromptMode::Kind::One ? 1 : 0);
            if (k < 1)
                throw refactor::ConfigError(
                    "k must be >= 1; zero-shot needs no example selection");
            nlohmann::json out;
            for (const auto& [pid, ids] : pipeline.select(k)) out[pid] = ids;
            std::printf("%s\n", out.dump(2).c_str());
        } else if (*ref) {
            pipeline.refactor();
            std::printf("refactor records: %s\n",
                        pipeline.paths().refactor_records.c_str());
        } else if (*rep) {
            pipeline.report();
            std::printf("report bundle: %s\n", pipeline.paths().report_dir.c_str());
        } else if (*fmt) {
            if (pipeline.config().formatter_command.empty()) {
                std::printf("format-distance skipped: no formatter_command configured\n");
                return 0;
            }
            pipeline.format_distance();
            std::printf("format distance bundle: %s\n",
                        pipeline.paths().report_dir.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
