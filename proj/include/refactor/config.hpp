#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace refactor {

inline constexpr std::string_view kDefaultSystemInstruction =
    "Refactor the given Python program to a more readable, efficient, and "
    "maintainable one. You can assume that the given program is semantically "
    "correct. Do not change the external behavior of the program, and keep "
    "the syntactic and semantic correctness. Python programs should be in a "
    "code block. Do not explain anything in natural language.";

enum class ComparisonMode { Exact, TrailingNormalized };
enum class BackendKind { Live, Record, Replay };

struct GenerationConfig {
    std::string model_name = "default-model";
    double temperature = 0.2;
    int max_tokens = 1024;
    int samples_per_input = 10;
};

struct JudgeConfig {
    double time_limit_seconds = 5.0;
    std::uint64_t memory_limit_bytes = 256ull * 1024 * 1024;
    ComparisonMode comparison_mode = ComparisonMode::TrailingNormalized;
    std::string interpreter = "python3";
};

/// Prompting mode: zero-shot, one-shot with a fixed or auto-selected
/// example, or few-shot with the top k selected examples.
struct PromptMode {
    enum class Kind { Zero, One, Few };
    Kind kind = Kind::Few;
    std::string one_example_id = "auto";  // One only: catalog id or "auto"
    int few_k = 3;                        // Few only: k >= 1
};

struct Config {
    GenerationConfig generation;
    JudgeConfig judge;
    PromptMode prompt_mode;
    std::string system_instruction = std::string(kDefaultSystemInstruction);
    int n_per_problem = 20;
    bool detect_language = false;
    std::string formatter_command;
    int judge_concurrency = 2;
    int gateway_concurrency = 4;
    int requests_per_minute = 600;
    int retry_max_attempts = 5;
    int retry_base_delay_ms = 250;
};

/// Parses "zero", "one:auto", "one:<id>", or "few:<k>". Throws ConfigError
/// on anything else (including few:0; zero-shot is its own mode).
PromptMode parse_prompt_mode(const std::string& text);

std::string format_prompt_mode(const PromptMode& mode);

ComparisonMode parse_comparison_mode(const std::string& text);
std::string format_comparison_mode(ComparisonMode mode);

BackendKind parse_backend(const std::string& text);
std::string format_backend(BackendKind kind);

/// Flat key=value file, '#' comments, one key per line. Unknown keys and
/// malformed values raise ConfigError naming the line.
Config load_config(const std::filesystem::path& file);

/// Applies one key=value assignment to an existing config.
void apply_config_entry(Config& cfg, const std::string& key, const std::string& value);

/// The full key=value rendering of a config, suitable for manifests.
std::string dump_config(const Config& cfg);

}  // namespace refactor
