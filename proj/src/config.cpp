#include "refactor/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "refactor/errors.hpp"

namespace refactor {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

long long parse_int(const std::string& key, const std::string& value) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("invalid integer for '" + key + "': " + value);
    }
    return out;
}

long long parse_positive(const std::string& key, const std::string& value) {
    long long v = parse_int(key, value);
    if (v <= 0) throw ConfigError("'" + key + "' must be positive, got " + value);
    return v;
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid real for '" + key + "': " + value);
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("invalid boolean for '" + key + "': " + value);
}

}  // namespace

PromptMode parse_prompt_mode(const std::string& text) {
    PromptMode m;
    if (text == "zero") {
        m.kind = PromptMode::Kind::Zero;
        return m;
    }
    if (text.rfind("one:", 0) == 0) {
        std::string id = text.substr(4);
        if (id.empty()) throw ConfigError("prompt mode 'one:' needs an example id or 'auto'");
        m.kind = PromptMode::Kind::One;
        m.one_example_id = id;
        return m;
    }
    if (text.rfind("few:", 0) == 0) {
        m.kind = PromptMode::Kind::Few;
        m.few_k = static_cast<int>(parse_positive("prompt_mode k", text.substr(4)));
        return m;
    }
    throw ConfigError("invalid prompt mode '" + text + "' (expect zero | one:<id|auto> | few:<k>)");
}

std::string format_prompt_mode(const PromptMode& mode) {
    switch (mode.kind) {
        case PromptMode::Kind::Zero:
            return "zero";
        case PromptMode::Kind::One:
            return "one:" + mode.one_example_id;
        case PromptMode::Kind::Few:
            return "few:" + std::to_string(mode.few_k);
    }
    return "few:3";
}

ComparisonMode parse_comparison_mode(const std::string& text) {
    if (text == "exact") return ComparisonMode::Exact;
    if (text == "trailing-normalized") return ComparisonMode::TrailingNormalized;
    throw ConfigError("invalid comparison_mode '" + text +
                      "' (expect exact | trailing-normalized)");
}

std::string format_comparison_mode(ComparisonMode mode) {
    return mode == ComparisonMode::Exact ? "exact" : "trailing-normalized";
}

BackendKind parse_backend(const std::string& text) {
    if (text == "live") return BackendKind::Live;
    if (text == "record") return BackendKind::Record;
    if (text == "replay") return BackendKind::Replay;
    throw ConfigError("invalid backend '" + text + "' (expect live | record | replay)");
}

std::string format_backend(BackendKind kind) {
    switch (kind) {
        case BackendKind::Live:
            return "live";
        case BackendKind::Record:
            return "record";
        case BackendKind::Replay:
            return "replay";
    }
    return "replay";
}

void apply_config_entry(Config& cfg, const std::string& key, const std::string& value) {
    if (key == "model_name") {
        cfg.generation.model_name = value;
    } else if (key == "temperature") {
        double t = parse_real(key, value);
        if (t < 0) throw ConfigError("temperature must be >= 0");
        cfg.generation.temperature = t;
    } else if (key == "max_tokens") {
        cfg.generation.max_tokens = static_cast<int>(parse_positive(key, value));
    } else if (key == "samples_per_input") {
        cfg.generation.samples_per_input = static_cast<int>(parse_positive(key, value));
    } else if (key == "time_limit_seconds") {
        double t = parse_real(key, value);
        if (t <= 0) throw ConfigError("time_limit_seconds must be > 0");
        cfg.judge.time_limit_seconds = t;
    } else if (key == "memory_limit_bytes") {
        cfg.judge.memory_limit_bytes = static_cast<std::uint64_t>(parse_positive(key, value));
    } else if (key == "comparison_mode") {
        cfg.judge.comparison_mode = parse_comparison_mode(value);
    } else if (key == "interpreter") {
        cfg.judge.interpreter = value;
    } else if (key == "prompt_mode") {
        cfg.prompt_mode = parse_prompt_mode(value);
    } else if (key == "system_instruction") {
        cfg.system_instruction = value;
    } else if (key == "n_per_problem") {
        cfg.n_per_problem = static_cast<int>(parse_positive(key, value));
    } else if (key == "detect_language") {
        cfg.detect_language = parse_bool(key, value);
    } else if (key == "formatter_command") {
        cfg.formatter_command = value;
    } else if (key == "judge_concurrency") {
        cfg.judge_concurrency = static_cast<int>(parse_positive(key, value));
    } else if (key == "gateway_concurrency") {
        cfg.gateway_concurrency = static_cast<int>(parse_positive(key, value));
    } else if (key == "requests_per_minute") {
        cfg.requests_per_minute = static_cast<int>(parse_positive(key, value));
    } else if (key == "retry_max_attempts") {
        cfg.retry_max_attempts = static_cast<int>(parse_positive(key, value));
    } else if (key == "retry_base_delay_ms") {
        cfg.retry_base_delay_ms = static_cast<int>(parse_positive(key, value));
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

Config load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file: " + file.string());
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body = trim(line);
        if (body.empty() || body[0] == '#') continue;
        std::size_t eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" +
                              body + "'");
        }
        std::string key = trim(body.substr(0, eq));
        std::string value = trim(body.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        }
        try {
            apply_config_entry(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

std::string dump_config(const Config& cfg) {
    std::ostringstream out;
    out << "model_name = " << cfg.generation.model_name << "\n"
        << "temperature = " << cfg.generation.temperature << "\n"
        << "max_tokens = " << cfg.generation.max_tokens << "\n"
        << "samples_per_input = " << cfg.generation.samples_per_input << "\n"
        << "time_limit_seconds = " << cfg.judge.time_limit_seconds << "\n"
        << "memory_limit_bytes = " << cfg.judge.memory_limit_bytes << "\n"
        << "comparison_mode = " << format_comparison_mode(cfg.judge.comparison_mode) << "\n"
        << "interpreter = " << cfg.judge.interpreter << "\n"
        << "prompt_mode = " << format_prompt_mode(cfg.prompt_mode) << "\n"
        << "system_instruction = " << cfg.system_instruction << "\n"
        << "n_per_problem = " << cfg.n_per_problem << "\n"
        << "detect_language = " << (cfg.detect_language ? "true" : "false") << "\n"
        << "formatter_command = " << cfg.formatter_command << "\n"
        << "judge_concurrency = " << cfg.judge_concurrency << "\n"
        << "gateway_concurrency = " << cfg.gateway_concurrency << "\n"
        << "requests_per_minute = " << cfg.requests_per_minute << "\n"
        << "retry_max_attempts = " << cfg.retry_max_attempts << "\n"
        << "retry_base_delay_ms = " << cfg.retry_base_delay_ms << "\n";
    return out.str();
}

}  // namespace refactor
