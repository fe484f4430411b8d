#include "refactor/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <json.hpp>
#include <httplib.h>

#include "refactor/errors.hpp"
#include "refactor/jsonl.hpp"
#include "refactor/sha256.hpp"

namespace refactor::llm {

using nlohmann::json;

ReplayStore::ReplayStore(std::filesystem::path file) : file_(std::move(file)) {
    if (!std::filesystem::exists(file_)) return;
    std::vector<jsonl::BadLine> bad;
    for (const auto& rec : jsonl::read_file(file_, &bad)) {
        if (!rec.is_object() || !rec.contains("fingerprint")) continue;
        StoredResponse r;
        r.response_text = rec.value("response_text", std::string());
        r.finish_reason = rec.value("finish_reason", std::string("stop"));
        // First occurrence wins so a torn rewrite cannot change replay output.
        entries_.emplace(rec["fingerprint"].get<std::string>(), std::move(r));
    }
}

std::optional<StoredResponse> ReplayStore::lookup(const std::string& fingerprint) const {
    std::lock_guard lk(mu_);
    auto it = entries_.find(fingerprint);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ReplayStore::put(const std::string& fingerprint, const StoredResponse& response) {
    std::lock_guard lk(mu_);
    if (entries_.count(fingerprint)) return;
    entries_.emplace(fingerprint, response);
    std::filesystem::create_directories(file_.parent_path());
    std::ofstream out(file_, std::ios::app | std::ios::binary);
    if (!out) throw Error("cannot append to replay store " + file_.string());
    json rec{{"fingerprint", fingerprint},
             {"response_text", response.response_text},
             {"finish_reason", response.finish_reason}};
    out << jsonl::dump_canonical(rec) << '\n';
    out.flush();
}

std::size_t ReplayStore::size() const {
    std::lock_guard lk(mu_);
    return entries_.size();
}

std::string request_fingerprint(const prompting::PromptBundle& bundle,
                                const GenerationConfig& config, int sample_index) {
    json messages = json::array();
    for (const auto& m : bundle.messages)
        messages.push_back({{"role", prompting::role_name(m.role)}, {"content", m.content}});
    json payload{{"config",
                  {{"model", config.model_name},
                   {"temperature", config.temperature},
                   {"max_tokens", config.max_tokens}}},
                 {"messages", messages},
                 {"sample_index", sample_index}};
    return sha256_hex(jsonl::dump_canonical(payload));
}

const std::vector<std::string>& language_labels() {
    static const std::vector<std::string> kLabels{"English", "Japanese", "Korean",
                                                  "Chinese", "Other",    "Unknown",
                                                  "None"};
    return kLabels;
}

std::string map_language_label(std::string_view response_text) {
    auto lower = [](std::string_view s) {
        std::string out(s);
        for (char& c : out)
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        return out;
    };
    const std::string haystack = lower(response_text);
    // Exact label after trimming whitespace/punctuation beats substring scan,
    // so a terse "None." answer maps to None rather than matching inside a
    // longer phrase.
    std::string trimmed;
    for (char c : haystack)
        if (std::isalpha(static_cast<unsigned char>(c))) trimmed.push_back(c);
    for (const auto& label : language_labels())
        if (trimmed == lower(label)) return label;
    for (const auto& label : language_labels())
        if (haystack.find(lower(label)) != std::string::npos) return label;
    return "Unknown";
}

Gateway::Gateway(GatewayOptions options, std::filesystem::path replay_file)
    : opts_(std::move(options)), store_(std::move(replay_file)) {
    if (opts_.endpoint.empty())
        if (const char* e = std::getenv("REFACTOR_LLM_ENDPOINT")) opts_.endpoint = e;
    if (opts_.api_key.empty())
        if (const char* k = std::getenv("REFACTOR_LLM_API_KEY")) opts_.api_key = k;
    tokens_ = std::max(1.0, opts_.requests_per_minute / 60.0);
    last_refill_ = std::chrono::steady_clock::now();
}

std::vector<GenerationResult> Gateway::generate(const prompting::PromptBundle& bundle,
                                                const GenerationConfig& config) {
    if (config.samples_per_input <= 0)
        throw GenerationError("samples_per_input must be positive");
    std::vector<GenerationResult> results;
    results.reserve(static_cast<std::size_t>(config.samples_per_input));
    for (int i = 0; i < config.samples_per_input; ++i)
        results.push_back(run_one(bundle, config, i));
    return results;
}

GenerationResult Gateway::run_one(const prompting::PromptBundle& bundle,
                                  const GenerationConfig& config, int sample_index) {
    GenerationResult out;
    out.request_fingerprint = request_fingerprint(bundle, config, sample_index);

    if (auto hit = store_.lookup(out.request_fingerprint)) {
        // Replay always serves from the store; record reuses hits so an
        // interrupted run resumes without re-spending requests.
        out.response_text = hit->response_text;
        out.finish_reason = hit->finish_reason;
        return out;
    }
    if (opts_.backend == BackendKind::Replay)
        throw ReplayMissError(out.request_fingerprint);

    const auto t0 = std::chrono::steady_clock::now();
    StoredResponse resp = call_live(bundle, config);
    out.latency_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (opts_.backend == BackendKind::Record) store_.put(out.request_fingerprint, resp);
    out.response_text = std::move(resp.response_text);
    out.finish_reason = std::move(resp.finish_reason);
    return out;
}

namespace {

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

ParsedUrl parse_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw GenerationError("endpoint URL must include a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

StoredResponse Gateway::call_live(const prompting::PromptBundle& bundle,
                                  const GenerationConfig& config) {
    if (opts_.endpoint.empty())
        throw GenerationError("no endpoint configured (set REFACTOR_LLM_ENDPOINT)");
    const ParsedUrl url = parse_endpoint(opts_.endpoint);

    json messages = json::array();
    for (const auto& m : bundle.messages)
        messages.push_back({{"role", prompting::role_name(m.role)}, {"content", m.content}});
    const std::string body = json{{"model", config.model_name},
                                  {"messages", messages},
                                  {"temperature", config.temperature},
                                  {"max_tokens", config.max_tokens}}
                                 .dump();

    {
        std::unique_lock lk(flight_mu_);
        flight_cv_.wait(lk, [&] { return in_flight_ < std::max(1, opts_.max_in_flight); });
        ++in_flight_;
    }
    struct FlightGuard {
        Gateway* g;
        ~FlightGuard() {
            std::lock_guard lk(g->flight_mu_);
            --g->in_flight_;
            g->flight_cv_.notify_one();
        }
    } guard{this};

    std::string last_error;
    for (int attempt = 1; attempt <= std::max(1, opts_.max_attempts); ++attempt) {
        if (attempt > 1) {
            const auto delay = std::chrono::milliseconds(
                static_cast<long long>(opts_.base_delay_ms) << (attempt - 2));
            std::this_thread::sleep_for(delay);
        }
        rate_limit_acquire();

        httplib::Client client(url.base);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!opts_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + opts_.api_key);
        auto res = client.Post(url.path, headers, body, "application/json");

        if (!res) {
            last_error = "connection failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status >= 400)
            throw GenerationError("request rejected with HTTP " + std::to_string(res->status) +
                                  ": " + res->body);

        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty())
            throw GenerationError("malformed completion response: " + res->body);
        const json& choice = parsed["choices"][0];
        StoredResponse out;
        if (choice.contains("message") && choice["message"].contains("content") &&
            choice["message"]["content"].is_string())
            out.response_text = choice["message"]["content"].get<std::string>();
        else if (choice.contains("text") && choice["text"].is_string())
            out.response_text = choice["text"].get<std::string>();
        else
            throw GenerationError("completion response has no text content: " + res->body);
        out.finish_reason = choice.value("finish_reason", std::string("stop"));
        return out;
    }
    throw GenerationError("generation failed after " + std::to_string(opts_.max_attempts) +
                          " attempts; last error: " + last_error);
}

void Gateway::rate_limit_acquire() {
    const double per_second = std::max(1, opts_.requests_per_minute) / 60.0;
    const double capacity = std::max(1.0, per_second);
    std::unique_lock lk(rate_mu_);
    for (;;) {
        const auto now = std::chrono::steady_clock::now();
        tokens_ = std::min(capacity,
                           tokens_ + per_second * std::chrono::duration<double>(now - last_refill_).count());
        last_refill_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const auto wait = std::chrono::duration<double>((1.0 - tokens_) / per_second);
        lk.unlock();
        std::this_thread::sleep_for(wait);
        lk.lock();
    }
}

std::string Gateway::detect_language(std::string_view source, const GenerationConfig& base_config) {
    prompting::PromptBundle bundle;
    bundle.messages.push_back(
        {prompting::ChatMessage::Role::System, std::string(kDetectLanguageInstruction)});
    bundle.messages.push_back(
        {prompting::ChatMessage::Role::User, prompting::wrap_code_block(source, "python")});
    GenerationConfig cfg = base_config;
    cfg.temperature = 0.0;
    cfg.max_tokens = 10;
    cfg.samples_per_input = 1;
    return map_language_label(generate(bundle, cfg).front().response_text);
}

}  // namespace refactor::llm
