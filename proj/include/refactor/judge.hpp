#pragma once

#include <condition_variable>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "refactor/config.hpp"
#include "refactor/corpus.hpp"

namespace refactor::judge {

enum class VerdictKind {
    Accepted,
    WrongAnswer,
    RuntimeError,
    TimeLimitExceeded,
    MemoryLimitExceeded,
    CompileError,
};

enum class TestOutcome { Pass, WrongOutput, RuntimeError, Timeout, Oom };

std::string_view verdict_name(VerdictKind kind);
std::string_view outcome_name(TestOutcome outcome);
VerdictKind parse_verdict(std::string_view name);

struct TestResult {
    int test_index = 0;
    TestOutcome outcome = TestOutcome::Pass;
    std::string actual_output_digest;  // sha256 of raw captured stdout
    double elapsed_seconds = 0;
    int exit_code = 0;  // meaningful for RuntimeError
};

struct Verdict {
    VerdictKind kind = VerdictKind::Accepted;
    std::vector<TestResult> per_test;  // prefix of the test list, stops at first failure
    std::string diagnostic;            // compile or runtime stderr excerpt
    bool accepted() const { return kind == VerdictKind::Accepted; }
};

/// Output comparison per JudgeConfig::comparison_mode. Trailing-normalized
/// strips trailing whitespace on each line and trailing final newlines.
bool outputs_match(std::string_view actual, std::string_view expected, ComparisonMode mode);
std::string normalize_trailing(std::string_view text);

/// Executes untrusted candidates in a sandbox: private mount namespace with
/// a read-only view of the filesystem outside the per-run scratch directory,
/// no network namespace, dropped uid, and rlimits on cpu, address space,
/// file size, and process count. A global semaphore caps concurrent runs.
class Judge {
public:
    Judge(JudgeConfig config, int concurrency, std::filesystem::path work_root = {});
    ~Judge();
    Judge(const Judge&) = delete;
    Judge& operator=(const Judge&) = delete;

    /// The validator: compile check first (CompileError short-circuits),
    /// then tests in order, stopping at the first failure. Sandbox setup
    /// problems raise JudgeError, never a verdict.
    Verdict validate(const std::string& source, const corpus::ProblemSpec& problem);

    const JudgeConfig& config() const { return config_; }

private:
    struct RunResult {
        bool spawn_failed = false;
        std::string spawn_error;
        bool timed_out = false;
        bool signaled = false;
        int term_signal = 0;
        int exit_code = 0;
        double wall_seconds = 0;
        long long max_rss_bytes = 0;
        std::string stdout_text;
        std::string stderr_text;
    };

    RunResult run_sandboxed(const std::filesystem::path& job_dir,
                            const std::vector<std::string>& argv,
                            const std::string& stdin_text, double wall_limit_seconds);
    std::filesystem::path make_job_dir();

    JudgeConfig config_;
    std::string interpreter_path_;
    std::filesystem::path work_root_;
    std::filesystem::path ctl_root_;
    bool owns_work_root_ = false;

    std::mutex slots_mu_;
    std::condition_variable slots_cv_;
    int free_slots_ = 1;
    unsigned long long job_counter_ = 0;
};

}  // namespace refactor::judge
