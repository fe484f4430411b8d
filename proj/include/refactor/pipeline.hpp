#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "refactor/code_metrics.hpp"
#include "refactor/config.hpp"
#include "refactor/corpus.hpp"
#include "refactor/eval_metrics.hpp"
#include "refactor/example_bank.hpp"
#include "refactor/judge.hpp"
#include "refactor/llm_gateway.hpp"

namespace refactor::pipeline {

/// One generated candidate with everything later phases need. metrics and
/// pair_stats are present only when extraction succeeded; pair_stats is
/// always against the input program's source.
struct CandidateRecord {
    std::string phase;  // "example_eval" | "refactor"
    std::string problem_id;
    std::string submission_id;
    std::vector<int> example_ids;
    int sample_index = 0;
    std::optional<std::string> extracted_source;
    bool unfenced = false;
    bool multi_block = false;
    std::optional<judge::Verdict> verdict;
    std::optional<metrics::SourceMetrics> metrics;
    std::optional<evalm::PairStats> pair_stats;
    std::string error;  // generation or extraction failure note

    nlohmann::json to_json() const;
    static CandidateRecord from_json(const nlohmann::json& j);

    /// Resume identity: (phase, example_ids, problem_id, submission_id,
    /// sample_index).
    std::string key() const;
};

struct RunPaths {
    explicit RunPaths(std::filesystem::path root_dir);

    std::filesystem::path root;
    std::filesystem::path manifest;
    std::filesystem::path corpus_file;
    std::filesystem::path preprocess_stats_base;  // + .json/.csv/.txt
    std::filesystem::path example_records;
    std::filesystem::path refactor_records;
    std::filesystem::path language_records;
    std::filesystem::path matrix_file;
    std::filesystem::path replay_file;
    std::filesystem::path report_dir;
};

struct PipelineOptions {
    std::filesystem::path run_dir;
    Config config;
    BackendKind backend = BackendKind::Replay;
    std::uint64_t seed = 1;
    std::filesystem::path catalog_dir = "catalog";
    int abort_after_items = 0;  // test hook: hard-exit after N processed items
    std::string endpoint;       // gateway override; empty = environment
    std::string api_key;
};

/// Reads a records file, repairing a torn final line (the file is rewritten
/// without it) so an interrupted run can resume.
std::vector<CandidateRecord> load_records(const std::filesystem::path& file);

class Pipeline {
public:
    explicit Pipeline(PipelineOptions opts);
    ~Pipeline();

    /// Ingest -> dedup -> outlier filter -> seeded sample; writes the
    /// selected corpus, a Collected/Unique/Filtered/Selected stats table,
    /// and the run manifest.
    void preprocess(const std::filesystem::path& raw_file,
                    const std::filesystem::path& problems_dir);

    /// One-shot evaluation of every catalog example over the selected
    /// corpus; persists candidate records and the score matrix.
    void evaluate_examples();

    /// Top-k example ids per problem from the stored matrix.
    std::map<std::string, std::vector<int>> select(int k) const;

    /// Few-shot (or zero-/one-shot per config) refactoring generation and
    /// judging over the selected corpus.
    void refactor();

    /// Aggregates persisted refactor records into report.{json,csv,txt}
    /// plus suggestions.jsonl.
    void report() const;

    /// Levenshtein distance of each program to its externally formatted
    /// form, for inputs and validated candidates separately.
    void format_distance() const;

    const RunPaths& paths() const { return paths_; }
    const Config& config() const { return opts_.config; }

private:
    struct WorkItem {
        std::vector<int> example_ids;
        const corpus::SubjectProgram* program = nullptr;
        const corpus::ProblemSpec* problem = nullptr;
    };

    nlohmann::json load_manifest() const;
    void save_manifest(const nlohmann::json& m) const;
    corpus::ProblemSet load_problem_set() const;
    corpus::Corpus load_selected(const corpus::ProblemSet& problems) const;
    llm::Gateway& gateway();
    judge::Judge& judge_instance();
    void run_generation_phase(const std::string& phase, const std::vector<WorkItem>& items,
                              const std::filesystem::path& records_file);
    CandidateRecord build_candidate(const std::string& phase, const WorkItem& item,
                                    int sample_index, const std::string& response_text);

    PipelineOptions opts_;
    RunPaths paths_;
    std::unique_ptr<llm::Gateway> gateway_;
    std::unique_ptr<judge::Judge> judge_;
};

}  // namespace refactor::pipeline
