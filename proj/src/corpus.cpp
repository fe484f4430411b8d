#include "refactor/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>
#include "refactor/code_metrics.hpp"
#include "refactor/errors.hpp"
#include "refactor/jsonl.hpp"
#include "refactor/utf8.hpp"

namespace refactor::corpus {

namespace {

using nlohmann::json;

std::optional<std::string> get_string(const json& rec, const char* field) {
    auto it = rec.find(field);
    if (it == rec.end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw Error("cannot open file: " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t bound) {
    // Rejection sampling keeps the draw unbiased and identical across
    // platforms (uniform_int_distribution is implementation-defined).
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                          std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v = gen();
    while (v >= limit) v = gen();
    return v % bound;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Corpus ingest(const std::vector<std::string>& jsonl_lines, const ProblemSet& problems,
              DropCounts* drops) {
    DropCounts local;
    DropCounts& d = drops ? *drops : local;
    Corpus out;
    int lineno = 0;
    for (const auto& line : jsonl_lines) {
        ++lineno;
        std::string where = "record " + std::to_string(lineno);
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            ++d.malformed;
            d.messages.push_back(where + ": not a JSON object");
            continue;
        }
        auto problem_id = get_string(rec, "problem_id");
        auto submission_id = get_string(rec, "submission_id");
        auto source = get_string(rec, "source");
        auto verdict = get_string(rec, "verdict");
        if (!problem_id || !submission_id || !source || !verdict) {
            ++d.malformed;
            d.messages.push_back(where + ": missing or non-string field");
            continue;
        }
        if (source->empty()) {
            ++d.malformed;
            d.messages.push_back(where + ": empty source");
            continue;
        }
        if (!utf8::is_valid(*source)) {
            ++d.malformed;
            d.messages.push_back(where + ": source is not valid UTF-8");
            continue;
        }
        if (*verdict != "Accepted") {
            ++d.not_accepted;
            continue;
        }
        if (problems.find(*problem_id) == problems.end()) {
            ++d.unknown_problem;
            d.messages.push_back(where + ": unknown_problem " + *problem_id);
            continue;
        }
        out.by_problem[*problem_id].push_back(
            SubjectProgram{*problem_id, *submission_id, *source, *verdict});
    }
    for (auto& [_, progs] : out.by_problem) {
        std::sort(progs.begin(), progs.end(), [](const auto& a, const auto& b) {
            return a.submission_id < b.submission_id;
        });
    }
    out.stage = "ingested";
    return out;
}

Corpus dedup(const Corpus& in) {
    Corpus out;
    out.stage = "deduped";
    for (const auto& [pid, progs] : in.by_problem) {
        std::set<std::string_view> seen;
        auto& kept = out.by_problem[pid];
        for (const auto& p : progs) {
            if (seen.insert(p.source_text).second) kept.push_back(p);
        }
    }
    return out;
}

Corpus filter_outliers(const Corpus& in, const TokenCounter& count_tokens) {
    Corpus out;
    out.stage = "filtered";
    for (const auto& [pid, progs] : in.by_problem) {
        std::vector<double> counts;
        counts.reserve(progs.size());
        for (const auto& p : progs) counts.push_back(count_tokens(p.source_text));
        double n = static_cast<double>(counts.size());
        double mu = 0;
        for (double c : counts) mu += c;
        mu /= n;
        double var = 0;
        for (double c : counts) var += (c - mu) * (c - mu);
        var /= n;  // population variance
        double threshold = mu + 2.0 * std::sqrt(var);
        auto& kept = out.by_problem[pid];
        for (std::size_t i = 0; i < progs.size(); ++i) {
            if (counts[i] <= threshold) kept.push_back(progs[i]);
        }
    }
    return out;
}

Corpus sample(const Corpus& in, int n_per_problem, std::uint64_t seed) {
    if (n_per_problem <= 0) throw Error("sample: n_per_problem must be positive");
    Corpus out;
    out.stage = "selected";
    for (const auto& [pid, progs] : in.by_problem) {
        auto& kept = out.by_problem[pid];
        if (static_cast<int>(progs.size()) <= n_per_problem) {
            kept = progs;
            continue;
        }
        std::mt19937_64 gen(seed ^ fnv1a64(pid));
        std::vector<std::size_t> idx(progs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (int i = 0; i < n_per_problem; ++i) {
            std::size_t j = static_cast<std::size_t>(i) +
                            static_cast<std::size_t>(bounded(gen, idx.size() - i));
            std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
        }
        idx.resize(static_cast<std::size_t>(n_per_problem));
        std::sort(idx.begin(), idx.end());
        for (std::size_t i : idx) kept.push_back(progs[i]);
    }
    return out;
}

CorpusStats stats(const Corpus& in) {
    CorpusStats s;
    s.program_count = in.program_count();
    if (s.program_count == 0) return s;
    s.defined = true;
    double loc = 0, chars = 0, tokens = 0, cc = 0;
    int n_tokens = 0, n_cc = 0;
    for (const auto& [_, progs] : in.by_problem) {
        for (const auto& p : progs) {
            auto m = metrics::measure(p.source_text);
            loc += m.loc;
            chars += static_cast<double>(m.chars);
            if (m.tokens) {
                tokens += *m.tokens;
                ++n_tokens;
            }
            if (m.cc) {
                cc += *m.cc;
                ++n_cc;
            }
        }
    }
    s.mean_loc = loc / s.program_count;
    s.mean_chars = chars / s.program_count;
    s.mean_tokens = n_tokens ? tokens / n_tokens : 0;
    s.mean_cc = n_cc ? cc / n_cc : 0;
    return s;
}

ProblemSet load_problems(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw Error("problems directory not found: " + dir.string());
    ProblemSet out;
    static const std::regex in_name(R"(test(\d+)\.in)");
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_directory()) continue;
        std::string pid = entry.path().filename().string();
        std::vector<std::pair<long, fs::path>> inputs;
        for (const auto& f : fs::directory_iterator(entry.path())) {
            std::smatch m;
            std::string name = f.path().filename().string();
            if (std::regex_match(name, m, in_name)) {
                inputs.emplace_back(std::stol(m[1].str()), f.path());
            }
        }
        std::sort(inputs.begin(), inputs.end());
        ProblemSpec spec;
        spec.problem_id = pid;
        for (const auto& [num, in_path] : inputs) {
            fs::path out_path = in_path;
            out_path.replace_extension(".out");
            if (!fs::exists(out_path)) {
                throw Error("missing expected output for " + in_path.string());
            }
            spec.test_cases.push_back(TestCase{slurp(in_path), slurp(out_path)});
        }
        if (spec.test_cases.empty()) {
            throw Error("problem '" + pid + "' has no test cases in " + entry.path().string());
        }
        out.emplace(pid, std::move(spec));
    }
    if (out.empty()) throw Error("no problems found under " + dir.string());
    return out;
}

void write_corpus(const Corpus& in, const std::filesystem::path& file) {
    jsonl::Writer w(file);
    for (const auto& [_, progs] : in.by_problem) {
        for (const auto& p : progs) {
            json rec{{"problem_id", p.problem_id},
                     {"submission_id", p.submission_id},
                     {"source", p.source_text},
                     {"verdict", p.verdict_of_record},
                     {"stage", in.stage}};
            w.write(rec);
        }
    }
}

Corpus read_corpus(const std::filesystem::path& file, const ProblemSet& problems,
                   DropCounts* drops) {
    std::ifstream f(file, std::ios::binary);
    if (!f) throw Error("cannot open corpus file: " + file.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    return ingest(lines, problems, drops);
}

}  // namespace refactor::corpus
