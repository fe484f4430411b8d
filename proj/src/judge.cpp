#include "refactor/judge.hpp"

#include <fcntl.h>
#include <sched.h>
#include <signal.h>
#include <sys/mount.h>
#include <sys/prctl.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <grp.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include "refactor/errors.hpp"
#include "refactor/sha256.hpp"

namespace refactor::judge {

std::string_view verdict_name(VerdictKind kind) {
    switch (kind) {
        case VerdictKind::Accepted: return "Accepted";
        case VerdictKind::WrongAnswer: return "WrongAnswer";
        case VerdictKind::RuntimeError: return "RuntimeError";
        case VerdictKind::TimeLimitExceeded: return "TimeLimitExceeded";
        case VerdictKind::MemoryLimitExceeded: return "MemoryLimitExceeded";
        case VerdictKind::CompileError: return "CompileError";
    }
    return "Accepted";
}

std::string_view outcome_name(TestOutcome outcome) {
    switch (outcome) {
        case TestOutcome::Pass: return "pass";
        case TestOutcome::WrongOutput: return "wrong_output";
        case TestOutcome::RuntimeError: return "runtime_error";
        case TestOutcome::Timeout: return "timeout";
        case TestOutcome::Oom: return "oom";
    }
    return "pass";
}

VerdictKind parse_verdict(std::string_view name) {
    for (VerdictKind k : {VerdictKind::Accepted, VerdictKind::WrongAnswer,
                          VerdictKind::RuntimeError, VerdictKind::TimeLimitExceeded,
                          VerdictKind::MemoryLimitExceeded, VerdictKind::CompileError})
        if (name == verdict_name(k)) return k;
    throw JudgeError("unknown verdict kind: " + std::string(name));
}

std::string normalize_trailing(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    std::string out;
    for (auto& line : lines) {
        std::size_t end = line.size();
        while (end > 0 && (line[end - 1] == ' ' || line[end - 1] == '\t' || line[end - 1] == '\r'))
            --end;
        out.append(line.substr(0, end));
        out.push_back('\n');
    }
    while (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

bool outputs_match(std::string_view actual, std::string_view expected, ComparisonMode mode) {
    if (mode == ComparisonMode::Exact) return actual == expected;
    return normalize_trailing(actual) == normalize_trailing(expected);
}

namespace {

constexpr long long kOutputLimitBytes = 64LL * 1024 * 1024;
constexpr long long kAddressSpaceHeadroom = 64LL * 1024 * 1024;
constexpr double kWallGraceSeconds = 0.25;
constexpr uid_t kNobodyUid = 65534;
constexpr gid_t kNobodyGid = 65534;

const char* const kChildEnv[] = {
    "PATH=/usr/local/bin:/usr/bin:/bin",
    "HOME=/tmp",
    "TMPDIR=/tmp",
    "LC_ALL=C.UTF-8",
    "PYTHONIOENCODING=utf-8",
    "PYTHONDONTWRITEBYTECODE=1",
    "PYTHONHASHSEED=0",
    nullptr,
};

// Everything the child touches after fork: plain buffers, no allocation.
struct ChildPlan {
    char box_dir[4096];
    char argv_store[8][4096];
    char* argv[9];
    int in_fd = -1;
    int out_fd = -1;
    int err_fd = -1;
    int status_w = -1;
    long long as_limit_bytes = 0;
    long cpu_soft_seconds = 0;
    bool sandbox = true;
    bool started_as_root = false;
    char uid_map[64];
    char gid_map[64];
};

void copy_path(char (&dst)[4096], const std::string& src) {
    if (src.size() + 1 > sizeof(dst)) throw JudgeError("path too long: " + src);
    std::memcpy(dst, src.c_str(), src.size() + 1);
}

// ---- child-side helpers: syscalls and stack buffers only ----

size_t c_strlen(const char* s) {
    size_t n = 0;
    while (s[n]) ++n;
    return n;
}

void c_write_all(int fd, const char* data, size_t len) {
    while (len > 0) {
        ssize_t w = ::write(fd, data, len);
        if (w <= 0) return;
        data += w;
        len -= static_cast<size_t>(w);
    }
}

void c_itoa(long long value, char* out) {
    char tmp[24];
    int i = 0;
    bool neg = value < 0;
    unsigned long long v = neg ? 0ULL - static_cast<unsigned long long>(value)
                               : static_cast<unsigned long long>(value);
    do {
        tmp[i++] = static_cast<char>('0' + v % 10);
        v /= 10;
    } while (v);
    int j = 0;
    if (neg) out[j++] = '-';
    while (i > 0) out[j++] = tmp[--i];
    out[j] = 0;
}

[[noreturn]] void c_die(const ChildPlan& plan, const char* msg) {
    char num[24];
    c_itoa(errno, num);
    c_write_all(plan.status_w, msg, c_strlen(msg));
    c_write_all(plan.status_w, " (errno ", 8);
    c_write_all(plan.status_w, num, c_strlen(num));
    c_write_all(plan.status_w, ")", 1);
    ::_exit(127);
}

bool c_write_file(const char* path, const char* data) {
    int fd = ::open(path, O_WRONLY | O_CLOEXEC);
    if (fd < 0) return false;
    c_write_all(fd, data, c_strlen(data));
    ::close(fd);
    return true;
}

// Remounts every reachable mount point read-only, best effort. Mount points
// holding our open io fds fail with EBUSY; those are exactly the ones the
// scratch box gets bound over next, so they end up unreachable instead.
void c_remount_all_ro() {
    int fd = ::open("/proc/self/mounts", O_RDONLY | O_CLOEXEC);
    if (fd < 0) return;
    static thread_local char buf[131072];
    size_t len = 0;
    for (;;) {
        ssize_t r = ::read(fd, buf + len, sizeof(buf) - 1 - len);
        if (r <= 0) break;
        len += static_cast<size_t>(r);
        if (len >= sizeof(buf) - 1) break;
    }
    ::close(fd);
    buf[len] = 0;

    char* p = buf;
    while (*p) {
        // field 1: source; field 2: mount point with \0NN octal escapes
        while (*p && *p != ' ' && *p != '\n') ++p;
        if (*p == ' ') {
            ++p;
            char mp[4096];
            size_t mi = 0;
            while (*p && *p != ' ' && *p != '\n' && mi + 1 < sizeof(mp)) {
                if (p[0] == '\\' && p[1] >= '0' && p[1] <= '7' && p[2] >= '0' && p[2] <= '7' &&
                    p[3] >= '0' && p[3] <= '7') {
                    mp[mi++] = static_cast<char>(((p[1] - '0') << 6) | ((p[2] - '0') << 3) |
                                                 (p[3] - '0'));
                    p += 4;
                } else {
                    mp[mi++] = *p++;
                }
            }
            mp[mi] = 0;
            ::mount(nullptr, mp, nullptr, MS_REMOUNT | MS_BIND | MS_RDONLY, nullptr);
        }
        while (*p && *p != '\n') ++p;
        if (*p == '\n') ++p;
    }
}

// Binds the scratch box over a writable mount and makes the bind rw again
// (it inherits the read-only flag from the source's mount). The source is an
// O_PATH fd: the first cover shadows the box's own path, and the fd must
// have been opened after unshare or the kernel rejects it with EINVAL.
void c_cover_rw(const ChildPlan& plan, int box_fd, const char* target) {
    struct stat st;
    if (::stat(target, &st) != 0 || !S_ISDIR(st.st_mode)) return;
    char src[40] = "/proc/self/fd/";
    c_itoa(box_fd, src + 14);
    if (::mount(src, target, nullptr, MS_BIND, nullptr) != 0)
        c_die(plan, "bind of scratch box over writable mount failed");
    if (::mount(nullptr, target, nullptr, MS_REMOUNT | MS_BIND, nullptr) != 0)
        c_die(plan, "making scratch cover writable failed");
}

[[noreturn]] void child_run(const ChildPlan& plan) {
    ::setpgid(0, 0);
    ::prctl(PR_SET_PDEATHSIG, SIGKILL);
    if (::dup2(plan.in_fd, 0) < 0 || ::dup2(plan.out_fd, 1) < 0 || ::dup2(plan.err_fd, 2) < 0)
        c_die(plan, "dup2 failed");

    bool in_userns = false;
    if (plan.sandbox) {
        if (::unshare(CLONE_NEWNS | CLONE_NEWNET) != 0) {
            if (::unshare(CLONE_NEWUSER | CLONE_NEWNS | CLONE_NEWNET) != 0)
                c_die(plan, "unshare(mount+net) failed; sandbox unavailable");
            in_userns = true;
            c_write_file("/proc/self/setgroups", "deny");
            if (!c_write_file("/proc/self/uid_map", plan.uid_map) ||
                !c_write_file("/proc/self/gid_map", plan.gid_map))
                c_die(plan, "user namespace id mapping failed");
        }
        if (::mount(nullptr, "/", nullptr, MS_REC | MS_PRIVATE, nullptr) != 0)
            c_die(plan, "making mounts private failed");
        int box_fd = ::open(plan.box_dir, O_PATH | O_DIRECTORY | O_CLOEXEC);
        if (box_fd < 0) c_die(plan, "opening scratch box failed");
        c_remount_all_ro();
        c_cover_rw(plan, box_fd, "/tmp");
        c_cover_rw(plan, box_fd, "/var/tmp");
        c_cover_rw(plan, box_fd, "/dev/shm");
        ::close(box_fd);
        if (::chdir("/tmp") != 0) c_die(plan, "chdir into scratch failed");
    } else {
        if (::chdir(plan.box_dir) != 0) c_die(plan, "chdir into scratch failed");
    }

    auto limit = [&](int res, rlim_t soft, rlim_t hard) {
        struct rlimit rl{soft, hard};
        ::setrlimit(res, &rl);
    };
    limit(RLIMIT_CORE, 0, 0);
    limit(RLIMIT_CPU, static_cast<rlim_t>(plan.cpu_soft_seconds),
          static_cast<rlim_t>(plan.cpu_soft_seconds + 1));
    limit(RLIMIT_AS, static_cast<rlim_t>(plan.as_limit_bytes),
          static_cast<rlim_t>(plan.as_limit_bytes));
    limit(RLIMIT_FSIZE, static_cast<rlim_t>(kOutputLimitBytes),
          static_cast<rlim_t>(kOutputLimitBytes));
    limit(RLIMIT_NPROC, 64, 64);
    limit(RLIMIT_NOFILE, 64, 64);

    if (plan.sandbox && plan.started_as_root && !in_userns) {
        if (::setgroups(0, nullptr) != 0 || ::setgid(kNobodyGid) != 0 ||
            ::setuid(kNobodyUid) != 0 || ::setuid(0) == 0)
            c_die(plan, "dropping privileges failed");
    }
    ::umask(022);
    ::execve(plan.argv[0], plan.argv, const_cast<char* const*>(kChildEnv));
    c_die(plan, "execve of interpreter failed");
}

// ---- parent-side helpers ----

std::string read_file_capped(const std::filesystem::path& path, std::size_t cap) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() > cap) data.resize(cap);
    return data;
}

void write_file(const std::filesystem::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw JudgeError("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw JudgeError("short write to " + path.string());
}

std::string resolve_interpreter(const std::string& name) {
    if (name.find('/') != std::string::npos) {
        if (::access(name.c_str(), X_OK) == 0) return name;
        throw JudgeError("interpreter not executable: " + name);
    }
    const char* path_env = std::getenv("PATH");
    std::string path = path_env ? path_env : "/usr/local/bin:/usr/bin:/bin";
    std::size_t start = 0;
    while (start <= path.size()) {
        auto colon = path.find(':', start);
        std::string dir = path.substr(start, colon == std::string::npos ? colon : colon - start);
        if (!dir.empty()) {
            std::string full = dir + "/" + name;
            if (::access(full.c_str(), X_OK) == 0) return full;
        }
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    throw JudgeError("interpreter not found on PATH: " + name);
}

struct Fd {
    int fd = -1;
    ~Fd() {
        if (fd >= 0) ::close(fd);
    }
    int release() {
        int f = fd;
        fd = -1;
        return f;
    }
};

constexpr std::string_view kCompileSnippet =
    "compile(open('prog.py','rb').read(),'prog.py','exec')";

}  // namespace

Judge::Judge(JudgeConfig config, int concurrency, std::filesystem::path work_root)
    : config_(std::move(config)) {
    if (config_.time_limit_seconds <= 0) throw JudgeError("time limit must be positive");
    if (config_.memory_limit_bytes <= 0) throw JudgeError("memory limit must be positive");
    interpreter_path_ = resolve_interpreter(config_.interpreter);
    free_slots_ = std::max(1, concurrency);
    if (work_root.empty()) {
        char tmpl[] = "/tmp/refactor-judge.XXXXXX";
        if (!::mkdtemp(tmpl)) throw JudgeError("cannot create judge work directory");
        work_root_ = tmpl;
        owns_work_root_ = true;
    } else {
        work_root_ = std::move(work_root);
        std::filesystem::create_directories(work_root_);
    }
    // IO files live on a mount the sandbox covers anyway (/dev/shm, falling
    // back to /tmp): their open write fds pin that mount rw (remounting it
    // read-only would fail EBUSY), so it must not be one that stays exposed.
    char shm_tmpl[] = "/dev/shm/refactor-ctl.XXXXXX";
    char tmp_tmpl[] = "/tmp/refactor-ctl.XXXXXX";
    if (::mkdtemp(shm_tmpl))
        ctl_root_ = shm_tmpl;
    else if (::mkdtemp(tmp_tmpl))
        ctl_root_ = tmp_tmpl;
    else
        throw JudgeError("cannot create judge control directory");
}

Judge::~Judge() {
    std::error_code ec;
    if (owns_work_root_) std::filesystem::remove_all(work_root_, ec);
    if (!ctl_root_.empty()) std::filesystem::remove_all(ctl_root_, ec);
}

std::filesystem::path Judge::make_job_dir() {
    unsigned long long id;
    {
        std::lock_guard lk(slots_mu_);
        id = ++job_counter_;
    }
    auto dir = work_root_ / ("job-" + std::to_string(id));
    std::filesystem::create_directories(dir / "box");
    std::filesystem::permissions(dir / "box", std::filesystem::perms::all);
    return dir;
}

Judge::RunResult Judge::run_sandboxed(const std::filesystem::path& job_dir,
                                      const std::vector<std::string>& argv,
                                      const std::string& stdin_text,
                                      double wall_limit_seconds) {
    const auto io_stem = ctl_root_ / job_dir.filename();
    const auto stdin_path = io_stem.string() + ".in";
    const auto stdout_path = io_stem.string() + ".out";
    const auto stderr_path = io_stem.string() + ".err";
    write_file(stdin_path, stdin_text);

    auto plan = std::make_unique<ChildPlan>();
    copy_path(plan->box_dir, (job_dir / "box").string());
    if (argv.size() > 8) throw JudgeError("argv too long");
    for (std::size_t i = 0; i < argv.size(); ++i) {
        copy_path(plan->argv_store[i], argv[i]);
        plan->argv[i] = plan->argv_store[i];
    }
    plan->argv[argv.size()] = nullptr;
    plan->as_limit_bytes = config_.memory_limit_bytes + kAddressSpaceHeadroom;
    plan->cpu_soft_seconds =
        std::max<long>(1, static_cast<long>(std::ceil(config_.time_limit_seconds)));
    plan->started_as_root = ::geteuid() == 0;
    std::snprintf(plan->uid_map, sizeof(plan->uid_map), "0 %u 1", ::getuid());
    std::snprintf(plan->gid_map, sizeof(plan->gid_map), "0 %u 1", ::getgid());

    Fd in_fd, out_fd, err_fd;
    in_fd.fd = ::open(stdin_path.c_str(), O_RDONLY | O_CLOEXEC);
    out_fd.fd = ::open(stdout_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600);
    err_fd.fd = ::open(stderr_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600);
    if (in_fd.fd < 0 || out_fd.fd < 0 || err_fd.fd < 0)
        throw JudgeError("cannot open sandbox io files in " + ctl_root_.string());
    int sp[2];
    if (::pipe2(sp, O_CLOEXEC) != 0) throw JudgeError("pipe2 failed");
    plan->in_fd = in_fd.fd;
    plan->out_fd = out_fd.fd;
    plan->err_fd = err_fd.fd;
    plan->status_w = sp[1];

    const auto t0 = std::chrono::steady_clock::now();
    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(sp[0]);
        ::close(sp[1]);
        throw JudgeError("fork failed");
    }
    if (pid == 0) {
        ::close(sp[0]);
        child_run(*plan);  // never returns
    }
    ::close(sp[1]);
    ::setpgid(pid, pid);

    RunResult result;
    int status = 0;
    struct rusage ru{};
    const auto deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double>(wall_limit_seconds));
    for (;;) {
        pid_t r = ::wait4(pid, &status, WNOHANG, &ru);
        if (r == pid) break;
        if (r < 0 && errno != EINTR) {
            ::close(sp[0]);
            throw JudgeError("wait4 failed");
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            result.timed_out = true;
            ::kill(-pid, SIGKILL);
            ::kill(pid, SIGKILL);
            while (::wait4(pid, &status, 0, &ru) < 0 && errno == EINTR) {
            }
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    ::kill(-pid, SIGKILL);  // sweep any stray grandchildren in the group
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::string spawn_msg;
    char buf[512];
    for (;;) {
        ssize_t r = ::read(sp[0], buf, sizeof(buf));
        if (r <= 0) break;
        spawn_msg.append(buf, static_cast<std::size_t>(r));
    }
    ::close(sp[0]);
    if (!spawn_msg.empty()) {
        result.spawn_failed = true;
        result.spawn_error = spawn_msg;
        return result;
    }

    result.signaled = WIFSIGNALED(status);
    result.term_signal = result.signaled ? WTERMSIG(status) : 0;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 0;
    result.max_rss_bytes = static_cast<long long>(ru.ru_maxrss) * 1024;
    const double cpu = static_cast<double>(ru.ru_utime.tv_sec + ru.ru_stime.tv_sec) +
                       static_cast<double>(ru.ru_utime.tv_usec + ru.ru_stime.tv_usec) / 1e6;
    if (cpu > config_.time_limit_seconds) result.timed_out = true;
    result.stdout_text = read_file_capped(stdout_path, static_cast<std::size_t>(kOutputLimitBytes));
    result.stderr_text = read_file_capped(stderr_path, 65536);
    return result;
}

Verdict Judge::validate(const std::string& source, const corpus::ProblemSpec& problem) {
    if (problem.test_cases.empty())
        throw JudgeError("problem " + problem.problem_id + " has no test cases");

    {
        std::unique_lock lk(slots_mu_);
        slots_cv_.wait(lk, [&] { return free_slots_ > 0; });
        --free_slots_;
    }
    struct SlotGuard {
        Judge* j;
        ~SlotGuard() {
            std::lock_guard lk(j->slots_mu_);
            ++j->free_slots_;
            j->slots_cv_.notify_one();
        }
    } slot{this};

    const auto job_dir = make_job_dir();
    struct DirGuard {
        std::filesystem::path d;
        ~DirGuard() {
            std::error_code ec;
            std::filesystem::remove_all(d, ec);
        }
    } dir_guard{job_dir};

    write_file(job_dir / "box" / "prog.py", source);

    Verdict verdict;
    const std::vector<std::string> compile_argv{interpreter_path_, "-B", "-s", "-c",
                                                std::string(kCompileSnippet)};
    RunResult comp = run_sandboxed(job_dir, compile_argv, "", 20.0);
    if (comp.spawn_failed) throw JudgeError("sandbox setup failed: " + comp.spawn_error);
    if (comp.signaled || comp.exit_code != 0 || comp.timed_out) {
        verdict.kind = VerdictKind::CompileError;
        verdict.diagnostic = comp.timed_out ? "compile check timed out" : comp.stderr_text;
        return verdict;
    }

    const std::vector<std::string> run_argv{interpreter_path_, "-B", "-s", "prog.py"};
    const double wall_limit = config_.time_limit_seconds + kWallGraceSeconds;
    for (std::size_t i = 0; i < problem.test_cases.size(); ++i) {
        RunResult r = run_sandboxed(job_dir, run_argv, problem.test_cases[i].input_text, wall_limit);
        if (r.spawn_failed) throw JudgeError("sandbox setup failed: " + r.spawn_error);

        TestResult t;
        t.test_index = static_cast<int>(i);
        t.elapsed_seconds = r.wall_seconds;
        t.actual_output_digest = sha256_hex(r.stdout_text);

        const bool memory_error =
            r.stderr_text.find("MemoryError") != std::string::npos;
        if (r.timed_out || (r.signaled && r.term_signal == SIGXCPU)) {
            t.outcome = TestOutcome::Timeout;
        } else if (r.max_rss_bytes > config_.memory_limit_bytes ||
                   ((r.signaled || r.exit_code != 0) && memory_error)) {
            t.outcome = TestOutcome::Oom;
        } else if (r.signaled) {
            t.outcome = TestOutcome::RuntimeError;
            t.exit_code = 128 + r.term_signal;
        } else if (r.exit_code != 0) {
            t.outcome = TestOutcome::RuntimeError;
            t.exit_code = r.exit_code;
        } else if (outputs_match(r.stdout_text, problem.test_cases[i].expected_output_text,
                                 config_.comparison_mode)) {
            t.outcome = TestOutcome::Pass;
        } else {
            t.outcome = TestOutcome::WrongOutput;
        }
        verdict.per_test.push_back(t);

        if (t.outcome != TestOutcome::Pass) {
            switch (t.outcome) {
                case TestOutcome::WrongOutput: verdict.kind = VerdictKind::WrongAnswer; break;
                case TestOutcome::RuntimeError: verdict.kind = VerdictKind::RuntimeError; break;
                case TestOutcome::Timeout: verdict.kind = VerdictKind::TimeLimitExceeded; break;
                case TestOutcome::Oom: verdict.kind = VerdictKind::MemoryLimitExceeded; break;
                case TestOutcome::Pass: break;
            }
            if (t.outcome == TestOutcome::RuntimeError || t.outcome == TestOutcome::Oom)
                verdict.diagnostic = r.stderr_text.substr(0, 8192);
            return verdict;
        }
    }
    verdict.kind = VerdictKind::Accepted;
    return verdict;
}

}  // namespace refactor::judge
