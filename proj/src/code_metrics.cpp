#include "refactor/code_metrics.hpp"

#include <algorithm>

#include "refactor/errors.hpp"
#include "refactor/utf8.hpp"

namespace refactor::metrics {

namespace {

CommentCounts comments_from(const std::vector<py::Token>& all, int loc) {
    int max_line = 1;
    for (const auto& t : all) max_line = std::max(max_line, t.end_line);
    std::vector<char> has_comment(static_cast<std::size_t>(max_line) + 1, 0);
    std::vector<char> has_code(static_cast<std::size_t>(max_line) + 1, 0);
    for (const auto& t : all) {
        if (t.kind == py::TokKind::Comment) {
            has_comment[static_cast<std::size_t>(t.line)] = 1;
        } else if (py::is_semantic(t.kind)) {
            for (int l = t.line; l <= t.end_line; ++l) {
                has_code[static_cast<std::size_t>(l)] = 1;
            }
        }
    }
    CommentCounts c;
    for (int l = 1; l <= max_line; ++l) {
        if (!has_comment[static_cast<std::size_t>(l)]) continue;
        ++c.incl;
        if (!has_code[static_cast<std::size_t>(l)]) ++c.excl;
    }
    c.ratio = loc > 0 ? static_cast<double>(c.excl) / loc : 0.0;
    return c;
}

int count_semantic(const std::vector<py::Token>& all) {
    int n = 0;
    for (const auto& t : all) {
        if (py::is_semantic(t.kind)) ++n;
    }
    return n;
}

}  // namespace

std::vector<py::Token> tokenize(std::string_view source) { return py::tokenize(source); }

int count_tokens(std::string_view source) {
    return count_semantic(py::lex(source));
}

int count_loc(std::string_view source) {
    std::string norm = py::normalize_source(source);
    if (norm.empty()) return 0;
    int lines = 0;
    for (char c : norm) {
        if (c == '\n') ++lines;
    }
    if (norm.back() != '\n') ++lines;
    return lines;
}

std::int64_t count_chars(std::string_view source) {
    return static_cast<std::int64_t>(utf8::count_scalars(source));
}

int cyclomatic_complexity(std::string_view source) {
    return complexity_blocks(source).program_complexity();
}

py::StructureInfo complexity_blocks(std::string_view source) {
    std::vector<py::Token> all;
    try {
        all = py::lex(source);
    } catch (const TokenizeError& e) {
        throw CCError(e.what());
    }
    return py::analyze_structure(all);
}

CommentCounts count_comments(std::string_view source) {
    return comments_from(py::lex(source), count_loc(source));
}

CompileCheck check_compilable(std::string_view source) {
    try {
        py::analyze_structure(py::lex(source));
        return CompileCheck{true, ""};
    } catch (const TokenizeError& e) {
        return CompileCheck{false, e.what()};
    } catch (const CCError& e) {
        return CompileCheck{false, e.what()};
    }
}

SourceMetrics measure(std::string_view source) {
    SourceMetrics m;
    m.loc = count_loc(source);
    m.chars = count_chars(source);
    std::vector<py::Token> all;
    try {
        all = py::lex(source);
    } catch (const TokenizeError&) {
        return m;  // tokens, cc, comments stay absent
    }
    m.tokens = count_semantic(all);
    m.comments = comments_from(all, m.loc);
    if (!source.empty()) {
        try {
            m.cc = py::analyze_structure(all).program_complexity();
        } catch (const CCError&) {
            // cc stays absent for unparsable programs
        }
    }
    return m;
}

}  // namespace refactor::metrics
