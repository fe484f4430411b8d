#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "refactor/code_metrics.hpp"
#include "refactor/corpus.hpp"
#include "refactor/errors.hpp"

using namespace refactor;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string rec(const char* pid, const char* sid, const std::string& src,
                const char* verdict = "Accepted") {
    return json{{"problem_id", pid},
                {"submission_id", sid},
                {"source", src},
                {"verdict", verdict}}
        .dump();
}

corpus::ProblemSet fake_problems() {
    corpus::ProblemSet ps;
    for (const char* pid : {"p1", "p2"}) {
        corpus::ProblemSpec spec;
        spec.problem_id = pid;
        spec.test_cases.push_back({"1\n", "1\n"});
        ps.emplace(pid, spec);
    }
    return ps;
}

int token_count(const std::string& s) {
    return metrics::measure(s).tokens.value_or(0);
}

}  // namespace

TEST_CASE("ingest admits accepted records and tallies drops by reason") {
    auto problems = fake_problems();
    std::vector<std::string> lines{
        rec("p1", "s2", "print(2)"),
        rec("p1", "s1", "print(1)"),
        rec("p1", "s3", "print(3)", "Wrong Answer"),
        rec("p9", "s4", "print(4)"),
        rec("p2", "s5", ""),
        "not json at all",
        rec("p2", "s6", "print(6)"),
    };
    corpus::DropCounts drops;
    auto c = corpus::ingest(lines, problems, &drops);
    CHECK(c.program_count() == 3);
    CHECK(drops.not_accepted == 1);
    CHECK(drops.unknown_problem == 1);
    CHECK(drops.malformed == 2);
    // canonical order within a problem
    REQUIRE(c.by_problem.at("p1").size() == 2);
    CHECK(c.by_problem.at("p1")[0].submission_id == "s1");
    CHECK(c.by_problem.at("p1")[1].submission_id == "s2");
}

TEST_CASE("ingest is invariant to input permutation") {
    auto problems = fake_problems();
    std::vector<std::string> lines;
    for (int i = 0; i < 12; ++i)
        lines.push_back(rec("p1", ("s" + std::to_string(100 + i)).c_str(),
                            "print(" + std::to_string(i) + ")"));
    auto a = corpus::ingest(lines, problems);
    std::mt19937_64 rng(3);
    std::shuffle(lines.begin(), lines.end(), rng);
    auto b = corpus::ingest(lines, problems);
    REQUIRE(a.by_problem.at("p1").size() == b.by_problem.at("p1").size());
    for (std::size_t i = 0; i < a.by_problem.at("p1").size(); ++i)
        CHECK(a.by_problem.at("p1")[i].submission_id ==
              b.by_problem.at("p1")[i].submission_id);
}

TEST_CASE("dedup keeps the canonically first copy and is idempotent") {
    auto problems = fake_problems();
    auto c = corpus::ingest(
        {
            rec("p1", "s3", "print(7)"),
            rec("p1", "s1", "print(7)"),
            rec("p1", "s2", "print(8)"),
            rec("p2", "s1", "print(7)"),  // cross-problem duplicate stays
        },
        problems);
    auto d = corpus::dedup(c);
    REQUIRE(d.by_problem.at("p1").size() == 2);
    CHECK(d.by_problem.at("p1")[0].submission_id == "s1");
    CHECK(d.by_problem.at("p1")[1].submission_id == "s2");
    CHECK(d.by_problem.at("p2").size() == 1);

    auto dd = corpus::dedup(d);
    CHECK(dd.program_count() == d.program_count());
}

TEST_CASE("outlier filter removes only strict mu+2sigma exceeders") {
    auto problems = fake_problems();
    std::vector<std::string> lines;
    for (int i = 0; i < 9; ++i)
        lines.push_back(rec("p1", ("s" + std::to_string(10 + i)).c_str(),
                            "v = " + std::to_string(i) + "\nprint(v)"));
    const std::string big = "data = [" + [] {
        std::string s;
        for (int i = 0; i < 200; ++i) s += "1, ";
        return s;
    }() + "]\nprint(len(data))";
    lines.push_back(rec("p1", "s99", big));
    auto c = corpus::ingest(lines, problems);
    auto f = corpus::filter_outliers(c, token_count);
    CHECK(f.by_problem.at("p1").size() == 9);
    for (const auto& p : f.by_problem.at("p1")) CHECK(p.submission_id != "s99");

    // all-equal counts: sigma 0, strict > keeps everybody
    auto f2 = corpus::filter_outliers(f, token_count);
    CHECK(f2.by_problem.at("p1").size() == 9);
}

TEST_CASE("sampling is seeded, capped, and canonical") {
    auto problems = fake_problems();
    std::vector<std::string> lines;
    for (int i = 0; i < 26; ++i)
        lines.push_back(rec("p1", ("s" + std::to_string(100 + i)).c_str(),
                            "print(" + std::to_string(i) + ")"));
    auto c = corpus::ingest(lines, problems);

    auto s1 = corpus::sample(c, 10, 42);
    auto s2 = corpus::sample(c, 10, 42);
    auto s3 = corpus::sample(c, 10, 43);
    REQUIRE(s1.by_problem.at("p1").size() == 10);
    CHECK(std::is_sorted(s1.by_problem.at("p1").begin(), s1.by_problem.at("p1").end(),
                         [](const auto& a, const auto& b) {
                             return a.submission_id < b.submission_id;
                         }));
    std::vector<std::string> ids1, ids2, ids3;
    for (const auto& p : s1.by_problem.at("p1")) ids1.push_back(p.submission_id);
    for (const auto& p : s2.by_problem.at("p1")) ids2.push_back(p.submission_id);
    for (const auto& p : s3.by_problem.at("p1")) ids3.push_back(p.submission_id);
    CHECK(ids1 == ids2);
    CHECK(ids1 != ids3);  // overwhelmingly likely for C(26,10)

    auto all = corpus::sample(c, 100, 42);
    CHECK(all.by_problem.at("p1").size() == 26);
    CHECK_THROWS_AS((void)corpus::sample(c, 0, 1), Error);
}

TEST_CASE("corpus files round trip") {
    auto problems = fake_problems();
    auto c = corpus::ingest({rec("p1", "s1", "print(1)"), rec("p2", "s2", "print(2)")},
                            problems);
    c.stage = "selected";
    auto file = fs::temp_directory_path() / "corpus_rt.jsonl";
    corpus::write_corpus(c, file);
    corpus::DropCounts drops;
    auto back = corpus::read_corpus(file, problems, &drops);
    CHECK(drops.total() == 0);
    CHECK(back.program_count() == 2);
    CHECK(back.by_problem.at("p1")[0].source_text == "print(1)");
    fs::remove(file);
}
