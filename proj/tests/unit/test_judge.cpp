#include <doctest.h>

#include <filesystem>
#include <string>

#include "refactor/config.hpp"
#include "refactor/corpus.hpp"
#include "refactor/judge.hpp"

using namespace refactor;
using judge::VerdictKind;

namespace {

corpus::ProblemSpec echo_sum_problem() {
    corpus::ProblemSpec p;
    p.problem_id = "sum";
    p.test_cases.push_back({"1 2\n", "3\n"});
    p.test_cases.push_back({"10 -3\n", "7\n"});
    return p;
}

JudgeConfig quick_config() {
    JudgeConfig cfg;
    cfg.time_limit_seconds = 2.0;
    cfg.memory_limit_bytes = 256ull * 1024 * 1024;
    cfg.comparison_mode = ComparisonMode::TrailingNormalized;
    return cfg;
}

judge::Judge& shared_judge() {
    static judge::Judge j(quick_config(), 2);
    return j;
}

}  // namespace

TEST_CASE("verdict and outcome names round trip") {
    CHECK(judge::verdict_name(VerdictKind::Accepted) == "Accepted");
    CHECK(judge::verdict_name(VerdictKind::WrongAnswer) == "WrongAnswer");
    CHECK(judge::verdict_name(VerdictKind::RuntimeError) == "RuntimeError");
    CHECK(judge::verdict_name(VerdictKind::TimeLimitExceeded) == "TimeLimitExceeded");
    CHECK(judge::verdict_name(VerdictKind::MemoryLimitExceeded) ==
          "MemoryLimitExceeded");
    CHECK(judge::verdict_name(VerdictKind::CompileError) == "CompileError");
    for (auto k : {VerdictKind::Accepted, VerdictKind::WrongAnswer,
                   VerdictKind::RuntimeError, VerdictKind::TimeLimitExceeded,
                   VerdictKind::MemoryLimitExceeded, VerdictKind::CompileError})
        CHECK(judge::parse_verdict(judge::verdict_name(k)) == k);

    CHECK(judge::outcome_name(judge::TestOutcome::Pass) == "pass");
    CHECK(judge::outcome_name(judge::TestOutcome::WrongOutput) == "wrong_output");
    CHECK(judge::outcome_name(judge::TestOutcome::RuntimeError) == "runtime_error");
    CHECK(judge::outcome_name(judge::TestOutcome::Timeout) == "timeout");
    CHECK(judge::outcome_name(judge::TestOutcome::Oom) == "oom");
}

TEST_CASE("output comparison distinguishes exact from trailing-normalized") {
    CHECK(judge::outputs_match("3\n", "3\n", ComparisonMode::Exact));
    CHECK_FALSE(judge::outputs_match("3", "3\n", ComparisonMode::Exact));
    CHECK_FALSE(judge::outputs_match("3 \n", "3\n", ComparisonMode::Exact));

    CHECK(judge::outputs_match("3", "3\n", ComparisonMode::TrailingNormalized));
    CHECK(judge::outputs_match("3 \n", "3\n", ComparisonMode::TrailingNormalized));
    CHECK(judge::outputs_match("a \nb\t\n\n\n", "a\nb\n",
                               ComparisonMode::TrailingNormalized));
    // interior whitespace still counts
    CHECK_FALSE(judge::outputs_match("a  b\n", "a b\n",
                                     ComparisonMode::TrailingNormalized));
    CHECK_FALSE(judge::outputs_match("1\n\n2\n", "1\n2\n",
                                     ComparisonMode::TrailingNormalized));

    CHECK(judge::normalize_trailing("a \nb\t\n\n") == "a\nb");
    CHECK(judge::normalize_trailing("") == "");
}

TEST_CASE("accepted program passes every test in order") {
    auto v = shared_judge().validate(
        "a, b = map(int, input().split())\nprint(a + b)", echo_sum_problem());
    CHECK(v.kind == VerdictKind::Accepted);
    REQUIRE(v.per_test.size() == 2);
    CHECK(v.per_test[0].test_index == 0);
    CHECK(v.per_test[0].outcome == judge::TestOutcome::Pass);
    CHECK(v.per_test[1].outcome == judge::TestOutcome::Pass);
}

TEST_CASE("wrong output stops at the first failing test") {
    // passes "1 2" -> 3 but fails "10 -3" (prints 13 instead of 7)
    auto v = shared_judge().validate(
        "a, b = map(int, input().split())\nprint(a + abs(b))", echo_sum_problem());
    CHECK(v.kind == VerdictKind::WrongAnswer);
    REQUIRE(v.per_test.size() == 2);
    CHECK(v.per_test[0].outcome == judge::TestOutcome::Pass);
    CHECK(v.per_test[1].outcome == judge::TestOutcome::WrongOutput);
}

TEST_CASE("crashes become runtime errors with the exit code") {
    auto v = shared_judge().validate("print(1 / 0)", echo_sum_problem());
    CHECK(v.kind == VerdictKind::RuntimeError);
    REQUIRE(v.per_test.size() == 1);
    CHECK(v.per_test[0].outcome == judge::TestOutcome::RuntimeError);
    CHECK(v.per_test[0].exit_code != 0);
    CHECK(v.diagnostic.find("ZeroDivisionError") != std::string::npos);
}

TEST_CASE("unparsable source is a compile error without running tests") {
    auto v = shared_judge().validate("def f(:\n    pass", echo_sum_problem());
    CHECK(v.kind == VerdictKind::CompileError);
    CHECK(v.per_test.empty());
    CHECK_FALSE(v.diagnostic.empty());
}

TEST_CASE("spinning program times out near the limit") {
    auto v = shared_judge().validate("while True:\n    pass", echo_sum_problem());
    CHECK(v.kind == VerdictKind::TimeLimitExceeded);
    REQUIRE(v.per_test.size() == 1);
    CHECK(v.per_test[0].outcome == judge::TestOutcome::Timeout);
    CHECK(v.per_test[0].elapsed_seconds >= 1.9);
    CHECK(v.per_test[0].elapsed_seconds < 4.0);
}

TEST_CASE("allocation beyond the limit is an oom verdict") {
    auto v = shared_judge().validate(
        "x = bytearray(1 << 30)\nprint(len(x))", echo_sum_problem());
    CHECK(v.kind == VerdictKind::MemoryLimitExceeded);
    REQUIRE(!v.per_test.empty());
    CHECK(v.per_test[0].outcome == judge::TestOutcome::Oom);
}

TEST_CASE("sandbox blocks the network") {
    auto v = shared_judge().validate(
        "import socket\n"
        "s = socket.socket()\n"
        "s.settimeout(1)\n"
        "s.connect(('127.0.0.1', 9))\n"
        "print('reached')",
        echo_sum_problem());
    // any failure mode is fine as long as the connection never succeeds
    CHECK(v.kind != VerdictKind::Accepted);
    for (const auto& t : v.per_test) CHECK(t.outcome != judge::TestOutcome::Pass);
}

TEST_CASE("sandbox blocks writes outside the scratch directory") {
    auto v = shared_judge().validate(
        "try:\n"
        "    open('/etc/judge_probe', 'w').write('x')\n"
        "    print('wrote')\n"
        "except OSError:\n"
        "    print('denied')",
        echo_sum_problem());
    if (!v.per_test.empty() && v.per_test[0].outcome == judge::TestOutcome::WrongOutput) {
        // program ran and printed; it must have been denied, and the file
        // must not exist afterwards
        CHECK_FALSE(std::filesystem::exists("/etc/judge_probe"));
    }
    CHECK_FALSE(std::filesystem::exists("/etc/judge_probe"));
}

TEST_CASE("exact comparison mode changes the verdict") {
    JudgeConfig cfg = quick_config();
    cfg.comparison_mode = ComparisonMode::Exact;
    judge::Judge exact(cfg, 1);
    // print() appends a newline; sys.stdout.write does not
    auto v = exact.validate(
        "import sys\na, b = map(int, input().split())\nsys.stdout.write(str(a + b))",
        echo_sum_problem());
    CHECK(v.kind == VerdictKind::WrongAnswer);

    auto v2 = shared_judge().validate(
        "import sys\na, b = map(int, input().split())\nsys.stdout.write(str(a + b))",
        echo_sum_problem());
    CHECK(v2.kind == VerdictKind::Accepted);
}
