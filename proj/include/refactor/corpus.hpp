#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace refactor::corpus {

struct SubjectProgram {
    std::string problem_id;
    std::string submission_id;
    std::string source_text;
    std::string verdict_of_record;
};

struct TestCase {
    std::string input_text;
    std::string expected_output_text;
};

struct ProblemSpec {
    std::string problem_id;
    std::vector<TestCase> test_cases;
};

using ProblemSet = std::map<std::string, ProblemSpec>;

struct DropCounts {
    int not_accepted = 0;
    int unknown_problem = 0;
    int malformed = 0;
    std::vector<std::string> messages;

    int total() const { return not_accepted + unknown_problem + malformed; }
};

/// Programs grouped per problem. Within a problem the order is canonical:
/// ascending submission_id, fixed at ingest. Later stages only ever remove
/// elements, so the pipeline is invariant to input record permutations.
struct Corpus {
    std::map<std::string, std::vector<SubjectProgram>> by_problem;
    std::string stage = "ingested";

    int program_count() const {
        int n = 0;
        for (const auto& [_, progs] : by_problem) n += static_cast<int>(progs.size());
        return n;
    }
};

struct CorpusStats {
    int program_count = 0;
    bool defined = false;  // false for an empty corpus; means are then 0
    double mean_loc = 0;
    double mean_chars = 0;
    double mean_tokens = 0;
    double mean_cc = 0;
};

using TokenCounter = std::function<int(const std::string&)>;

/// Admits records with verdict "Accepted" and a known problem_id; collects
/// malformed records (missing fields, invalid UTF-8, empty source) and
/// other drops per reason without aborting.
Corpus ingest(const std::vector<std::string>& jsonl_lines, const ProblemSet& problems,
              DropCounts* drops = nullptr);

/// Collapses byte-identical sources within each problem, keeping the
/// canonically first (smallest submission_id). Cross-problem duplicates
/// stay.
Corpus dedup(const Corpus& in);

/// Removes programs whose token count strictly exceeds mu + 2*sigma of
/// their problem (population moments over that problem's counts).
Corpus filter_outliers(const Corpus& in, const TokenCounter& count_tokens);

/// Seeded draw without replacement of min(n_per_problem, available)
/// programs per problem; output keeps canonical order. n_per_problem = 0
/// is an error.
Corpus sample(const Corpus& in, int n_per_problem, std::uint64_t seed);

CorpusStats stats(const Corpus& in);

/// Problems directory: one subdirectory per problem_id holding paired
/// testN.in / testN.out files.
ProblemSet load_problems(const std::filesystem::path& dir);

/// JSONL round trip; write emits one record per program with the stage tag.
void write_corpus(const Corpus& in, const std::filesystem::path& file);
Corpus read_corpus(const std::filesystem::path& file, const ProblemSet& problems,
                   DropCounts* drops = nullptr);

/// Deterministic per-problem RNG stream id for the seeded draw.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace refactor::corpus
