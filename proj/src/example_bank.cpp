#include "refactor/example_bank.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "refactor/code_metrics.hpp"
#include "refactor/errors.hpp"

namespace refactor::examples {

namespace {

using nlohmann::json;

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot open example source: " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

json ScoreMatrix::to_json() const {
    json cells = json::object();
    for (const auto& [eid, row] : s_ep) {
        json r = json::object();
        for (const auto& [pid, score] : row) r[pid] = score;
        cells[std::to_string(eid)] = std::move(r);
    }
    json totals = json::object();
    for (const auto& [eid, score] : s_e) totals[std::to_string(eid)] = score;
    return json{{"s_ep", std::move(cells)}, {"s_e", std::move(totals)}};
}

ScoreMatrix ScoreMatrix::from_json(const json& j) {
    ScoreMatrix m;
    for (const auto& [eid, row] : j.at("s_ep").items()) {
        for (const auto& [pid, score] : row.items()) {
            m.s_ep[std::stoi(eid)][pid] = score.get<long long>();
        }
    }
    for (const auto& [eid, score] : j.at("s_e").items()) {
        m.s_e[std::stoi(eid)] = score.get<long long>();
    }
    return m;
}

std::vector<RefactoringExample> load_catalog(const std::filesystem::path& dir) {
    auto index_path = dir / "catalog.json";
    std::ifstream f(index_path);
    if (!f) throw ConfigError("cannot open example catalog: " + index_path.string());
    json index = json::parse(f, nullptr, false);
    if (index.is_discarded() || !index.is_array()) {
        throw ConfigError("catalog is not a JSON array: " + index_path.string());
    }
    if (index.empty()) throw ConfigError("catalog is empty: " + index_path.string());

    std::vector<RefactoringExample> out;
    for (const auto& entry : index) {
        RefactoringExample ex;
        ex.id = entry.at("id").get<int>();
        ex.title = entry.at("title").get<std::string>();
        auto orig_file = dir / entry.at("original_file").get<std::string>();
        auto refa_file = dir / entry.at("refactored_file").get<std::string>();
        ex.original_source = slurp(orig_file);
        ex.refactored_source = slurp(refa_file);
        auto check_orig = metrics::check_compilable(ex.original_source);
        if (!check_orig.ok) {
            throw ConfigError("example source does not compile: " + orig_file.string() + ": " +
                              check_orig.diagnostic);
        }
        auto check_refa = metrics::check_compilable(ex.refactored_source);
        if (!check_refa.ok) {
            throw ConfigError("example source does not compile: " + refa_file.string() + ": " +
                              check_refa.diagnostic);
        }
        if (ex.original_source == ex.refactored_source) {
            throw ConfigError("example " + std::to_string(ex.id) +
                              " has identical original and refactored sources");
        }
        out.push_back(std::move(ex));
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].id != static_cast<int>(i)) {
            throw ConfigError("catalog ids must be exactly 0.." +
                              std::to_string(out.size() - 1) + "; found id " +
                              std::to_string(out[i].id));
        }
    }
    return out;
}

ScoreMatrix score_example_problem(
    const std::vector<CandidateVerdict>& results, const std::vector<int>& example_ids,
    const std::map<std::string, std::vector<std::string>>& programs_by_problem,
    int samples_per_input) {
    if (samples_per_input <= 0) throw Error("samples_per_input must be positive");

    // (e, P, x) -> multiset of sample indices seen.
    std::map<std::tuple<int, std::string, std::string>, std::set<int>> seen;
    std::map<std::tuple<int, std::string, std::string>, long long> accepted;
    for (const auto& r : results) {
        auto key = std::make_tuple(r.example_id, r.problem_id, r.submission_id);
        if (r.sample_index < 0 || r.sample_index >= samples_per_input) {
            throw Error("sample_index " + std::to_string(r.sample_index) +
                        " out of range for (" + std::to_string(r.example_id) + ", " +
                        r.problem_id + ", " + r.submission_id + ")");
        }
        if (!seen[key].insert(r.sample_index).second) {
            throw Error("duplicate sample_index " + std::to_string(r.sample_index) +
                        " for (" + std::to_string(r.example_id) + ", " + r.problem_id + ", " +
                        r.submission_id + ")");
        }
        if (r.accepted) ++accepted[key];
    }

    std::vector<std::string> missing;
    for (int eid : example_ids) {
        for (const auto& [pid, programs] : programs_by_problem) {
            for (const auto& sid : programs) {
                auto it = seen.find(std::make_tuple(eid, pid, sid));
                int have = it == seen.end() ? 0 : static_cast<int>(it->second.size());
                if (have != samples_per_input) {
                    missing.push_back("(" + std::to_string(eid) + ", " + pid + ", " + sid +
                                      "): " + std::to_string(have) + "/" +
                                      std::to_string(samples_per_input));
                }
            }
        }
    }
    if (!missing.empty()) {
        std::string msg = "incomplete validation results; absent cells:";
        for (const auto& m : missing) msg += "\n  " + m;
        throw Error(msg);
    }

    ScoreMatrix out;
    for (int eid : example_ids) {
        long long total = 0;
        for (const auto& [pid, programs] : programs_by_problem) {
            long long cell = 0;
            for (const auto& sid : programs) {
                auto it = accepted.find(std::make_tuple(eid, pid, sid));
                if (it != accepted.end()) cell += it->second;
            }
            out.s_ep[eid][pid] = cell;
            total += cell;
        }
        out.s_e[eid] = total;
    }
    return out;
}

std::vector<int> select_examples(const ScoreMatrix& matrix, const std::string& problem_id,
                                 int k) {
    if (k <= 0) throw Error("select_examples requires k >= 1");
    if (k > static_cast<int>(matrix.s_e.size())) {
        throw Error("select_examples: k=" + std::to_string(k) + " exceeds |E|=" +
                    std::to_string(matrix.s_e.size()));
    }
    struct Scored {
        long long key;
        int id;
    };
    std::vector<Scored> scored;
    scored.reserve(matrix.s_e.size());
    for (const auto& [eid, cumulative] : matrix.s_e) {
        auto row = matrix.s_ep.find(eid);
        if (row == matrix.s_ep.end() || row->second.find(problem_id) == row->second.end()) {
            throw Error("score matrix has no cell for example " + std::to_string(eid) +
                        ", problem " + problem_id);
        }
        scored.push_back(Scored{1000 * row->second.at(problem_id) + cumulative, eid});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.key != b.key) return a.key > b.key;
        return a.id < b.id;
    });
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) out.push_back(scored[static_cast<std::size_t>(i)].id);
    return out;
}

}  // namespace refactor::examples
