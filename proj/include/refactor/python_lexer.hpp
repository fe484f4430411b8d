#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace refactor::py {

/// Token kinds mirroring the subject language's tokenizer. Semantic kinds
/// (Name..Op) are what the token-count metric sees; the structural kinds
/// exist for the block parser and are excluded from counts.
enum class TokKind {
    Name,     // identifier or keyword
    Number,   // int/float/imaginary literal
    String,   // any string literal, prefix and quotes included
    Op,       // operator or delimiter
    Comment,  // '#' to end of line
    Newline,  // end of a logical line
    Nl,       // newline that does not end a logical line
    Indent,
    Dedent,
    EndMarker,
};

struct Token {
    TokKind kind;
    std::string text;
    int line = 0;      // 1-based physical line of the token start
    int column = 0;    // 0-based column of the token start
    int end_line = 0;  // 1-based physical line where the token ends
};

bool is_semantic(TokKind kind);

/// Hard keywords of the subject language.
bool is_keyword(std::string_view name);

/// Normalize CRLF / lone CR line endings to LF and strip a UTF-8 BOM.
std::string normalize_source(std::string_view source);

/// Full lexical analysis, structural tokens included. The input is
/// normalized first. Throws TokenizeError on unterminated strings, bad
/// dedents, stray characters, or EOF inside brackets or a continuation.
std::vector<Token> lex(std::string_view source);

/// Semantic tokens only (the token-count contract): identifiers, keywords,
/// literals, operators, delimiters.
std::vector<Token> tokenize(std::string_view source);

}  // namespace refactor::py
