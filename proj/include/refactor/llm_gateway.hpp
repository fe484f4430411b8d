#pragma once

#include <condition_variable>
#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "refactor/config.hpp"
#include "refactor/prompting.hpp"

namespace refactor::llm {

struct GenerationResult {
    std::string response_text;
    std::string finish_reason;
    std::string request_fingerprint;
    double latency_seconds = 0;
};

struct StoredResponse {
    std::string response_text;
    std::string finish_reason;
};

/// Fingerprint-keyed response cache; the file doubles as the replay store.
/// Concurrent reads are lock-free after load; writes are serialized and
/// flushed per record.
class ReplayStore {
public:
    explicit ReplayStore(std::filesystem::path file);

    std::optional<StoredResponse> lookup(const std::string& fingerprint) const;
    void put(const std::string& fingerprint, const StoredResponse& response);
    std::size_t size() const;

private:
    std::filesystem::path file_;
    mutable std::mutex mu_;
    std::map<std::string, StoredResponse> entries_;
};

struct GatewayOptions {
    BackendKind backend = BackendKind::Replay;
    std::string endpoint;  // full URL; empty = read REFACTOR_LLM_ENDPOINT
    std::string api_key;   // empty = read REFACTOR_LLM_API_KEY
    int max_attempts = 5;
    int base_delay_ms = 250;
    int requests_per_minute = 600;
    int max_in_flight = 4;
};

/// The deterministic request identity: sha256 over the canonical JSON of
/// (model, temperature, max_tokens, messages, sample_index).
std::string request_fingerprint(const prompting::PromptBundle& bundle,
                                const GenerationConfig& config, int sample_index);

inline constexpr std::string_view kDetectLanguageInstruction =
    "What natural language is used in this code? Select from [English, "
    "Japanese, Korean, Chinese, Other, Unknown, None].";

const std::vector<std::string>& language_labels();

/// Maps a raw model response onto the closed label set; anything
/// unmappable is "Unknown".
std::string map_language_label(std::string_view response_text);

class Gateway {
public:
    Gateway(GatewayOptions options, std::filesystem::path replay_file);

    /// One result per sample_index 0..samples_per_input-1. Replay misses
    /// raise ReplayMissError; live failures retry transient errors with
    /// exponential backoff and raise GenerationError when exhausted or on
    /// non-retryable HTTP errors.
    std::vector<GenerationResult> generate(const prompting::PromptBundle& bundle,
                                           const GenerationConfig& config);

    /// Comment-language probe: temperature 0, max_tokens 10, single
    /// sample, response mapped onto the label set.
    std::string detect_language(std::string_view source, const GenerationConfig& base_config);

    const ReplayStore& store() const { return store_; }

private:
    GenerationResult run_one(const prompting::PromptBundle& bundle,
                             const GenerationConfig& config, int sample_index);
    StoredResponse call_live(const prompting::PromptBundle& bundle,
                             const GenerationConfig& config);
    void rate_limit_acquire();

    GatewayOptions opts_;
    ReplayStore store_;

    std::mutex rate_mu_;
    double tokens_ = 0;
    std::chrono::steady_clock::time_point last_refill_;

    std::mutex flight_mu_;
    std::condition_variable flight_cv_;
    int in_flight_ = 0;
};

}  // namespace refactor::llm
