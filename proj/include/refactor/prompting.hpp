#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "refactor/example_bank.hpp"

namespace refactor::prompting {

struct ChatMessage {
    enum class Role { System, User, Assistant };
    Role role = Role::User;
    std::string content;
};

std::string role_name(ChatMessage::Role role);

struct PromptBundle {
    std::vector<ChatMessage> messages;  // always 2 + 2 * |example_ids|
    std::vector<int> example_ids;
    std::string problem_id;
    std::string submission_id;
};

/// Fences source in triple backticks with an optional language tag and
/// exactly one newline before the closing fence. Sources containing a
/// triple backtick cannot be fenced and raise Error.
std::string wrap_code_block(std::string_view source, std::string_view lang = "");

struct Extraction {
    std::string source;
    bool unfenced = false;     // no fence found; whole trimmed response used
    bool multi_block = false;  // further fenced blocks were ignored
};

/// Content of the first fenced block (language tag ignored); without any
/// fence, the whole trimmed response. Empty extraction raises ExtractError.
Extraction extract_code(std::string_view response_text);

/// [system] ++ per example [user original, assistant refactored] ++
/// [user input], all code fenced with `lang`.
PromptBundle build_prompt(std::string_view system_instruction,
                          const std::vector<examples::RefactoringExample>& shots,
                          std::string_view input_source, std::string_view lang = "",
                          std::string_view problem_id = "",
                          std::string_view submission_id = "");

}  // namespace refactor::prompting
