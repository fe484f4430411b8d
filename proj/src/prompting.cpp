#include "refactor/prompting.hpp"

#include "refactor/errors.hpp"

namespace refactor::prompting {

namespace {

std::string_view trim_view(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_fence_line(std::string_view line) {
    std::size_t i = line.find_first_not_of(" \t");
    if (i == std::string_view::npos) return false;
    return line.substr(i, 3) == "```";
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

}  // namespace

std::string role_name(ChatMessage::Role role) {
    switch (role) {
        case ChatMessage::Role::System:
            return "system";
        case ChatMessage::Role::User:
            return "user";
        case ChatMessage::Role::Assistant:
            return "assistant";
    }
    return "user";
}

std::string wrap_code_block(std::string_view source, std::string_view lang) {
    if (source.find("```") != std::string_view::npos) {
        throw Error("cannot fence a source containing triple backticks");
    }
    std::string body(source);
    while (!body.empty() && body.back() == '\n') body.pop_back();
    std::string out = "```";
    out += lang;
    out += "\n";
    out += body;
    out += "\n```";
    return out;
}

Extraction extract_code(std::string_view response_text) {
    Extraction ex;
    auto lines = split_lines(response_text);
    std::size_t open = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_fence_line(lines[i])) {
            open = i;
            break;
        }
    }
    if (open == lines.size()) {
        ex.unfenced = true;
        ex.source = std::string(trim_view(response_text));
        if (ex.source.empty()) throw ExtractError("empty extraction: response has no content");
        return ex;
    }
    std::size_t close = lines.size();
    for (std::size_t i = open + 1; i < lines.size(); ++i) {
        if (is_fence_line(lines[i])) {
            close = i;
            break;
        }
    }
    std::string body;
    for (std::size_t i = open + 1; i < close && i < lines.size(); ++i) {
        if (i > open + 1) body += "\n";
        body += lines[i];
    }
    if (close != lines.size()) {
        for (std::size_t i = close + 1; i < lines.size(); ++i) {
            if (is_fence_line(lines[i])) {
                ex.multi_block = true;
                break;
            }
        }
    }
    ex.source = std::move(body);
    if (ex.source.empty()) throw ExtractError("empty extraction: first code block is empty");
    return ex;
}

PromptBundle build_prompt(std::string_view system_instruction,
                          const std::vector<examples::RefactoringExample>& shots,
                          std::string_view input_source, std::string_view lang,
                          std::string_view problem_id, std::string_view submission_id) {
    if (input_source.empty()) throw Error("build_prompt requires a non-empty input source");
    if (system_instruction.empty()) throw Error("build_prompt requires a system instruction");
    PromptBundle b;
    b.problem_id = std::string(problem_id);
    b.submission_id = std::string(submission_id);
    b.messages.push_back(
        ChatMessage{ChatMessage::Role::System, std::string(system_instruction)});
    for (const auto& ex : shots) {
        b.example_ids.push_back(ex.id);
        b.messages.push_back(
            ChatMessage{ChatMessage::Role::User, wrap_code_block(ex.original_source, lang)});
        b.messages.push_back(ChatMessage{ChatMessage::Role::Assistant,
                                         wrap_code_block(ex.refactored_source, lang)});
    }
    b.messages.push_back(
        ChatMessage{ChatMessage::Role::User, wrap_code_block(input_source, lang)});
    return b;
}

}  // namespace refactor::prompting
