#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refactor/python_lexer.hpp"
#include "refactor/python_structure.hpp"

namespace refactor::metrics {

struct CommentCounts {
    int incl = 0;      // lines containing a comment, inline included
    int excl = 0;      // lines whose only content is a comment
    double ratio = 0;  // excl / loc, 0 when loc == 0
};

/// Aggregated per-program metrics. Fields that cannot be computed for the
/// given source (lex or parse failure, empty program for cc) are absent.
struct SourceMetrics {
    int loc = 0;
    std::int64_t chars = 0;
    std::optional<int> tokens;
    std::optional<int> cc;
    std::optional<CommentCounts> comments;
};

struct CompileCheck {
    bool ok = false;
    std::string diagnostic;  // empty when ok
};

/// Semantic tokens only: identifiers, keywords, literals, operators,
/// delimiters. Comments and structural tokens never appear.
std::vector<py::Token> tokenize(std::string_view source);

int count_tokens(std::string_view source);

/// Physical lines after CRLF normalization; a trailing line without a
/// newline counts, empty source is 0 lines.
int count_loc(std::string_view source);

/// Unicode scalar count of the raw source.
std::int64_t count_chars(std::string_view source);

/// Whole-program cyclomatic complexity: 1 + decision points across the
/// module and every nested function/class body. Throws CCError on
/// structurally invalid source.
int cyclomatic_complexity(std::string_view source);

/// Per-block complexity breakdown backing cyclomatic_complexity.
py::StructureInfo complexity_blocks(std::string_view source);

/// Comment-line counts; throws TokenizeError on unlexable source.
CommentCounts count_comments(std::string_view source);

/// Static structural validity check; never throws.
CompileCheck check_compilable(std::string_view source);

SourceMetrics measure(std::string_view source);

}  // namespace refactor::metrics
