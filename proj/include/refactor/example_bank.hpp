#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace refactor::examples {

struct RefactoringExample {
    int id = 0;
    std::string title;
    std::string original_source;
    std::string refactored_source;
};

/// One judged candidate from the example-evaluation phase, reduced to the
/// bits scoring needs.
struct CandidateVerdict {
    int example_id = 0;
    std::string problem_id;
    std::string submission_id;
    int sample_index = 0;
    bool accepted = false;
};

struct ScoreMatrix {
    // s_ep[example_id][problem_id]: Accepted-candidate count for that cell.
    std::map<int, std::map<std::string, long long>> s_ep;
    // s_e[example_id]: cumulative score over all problems.
    std::map<int, long long> s_e;

    nlohmann::json to_json() const;
    static ScoreMatrix from_json(const nlohmann::json& j);
};

/// Loads catalog.json from `dir`: entries {id, title, original_file,
/// refactored_file}. Ids must be exactly 0..N-1; both sources must be
/// compilable and distinct. Violations raise ConfigError naming the file.
std::vector<RefactoringExample> load_catalog(const std::filesystem::path& dir);

/// Builds the score matrix from judged candidates. Every (example,
/// problem, program) cell must contain exactly sample_indices 0..n-1;
/// missing cells raise Error listing the absent (e, P, x) triples.
ScoreMatrix score_example_problem(
    const std::vector<CandidateVerdict>& results, const std::vector<int>& example_ids,
    const std::map<std::string, std::vector<std::string>>& programs_by_problem,
    int samples_per_input);

/// Top-k example ids for a problem by descending 1000*s_ep + s_e, ties by
/// ascending id; the returned order is the prompt order.
std::vector<int> select_examples(const ScoreMatrix& matrix, const std::string& problem_id,
                                 int k);

}  // namespace refactor::examples
