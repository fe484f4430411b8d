#include "refactor/python_lexer.hpp"

#include <array>
#include <cctype>
#include <unordered_set>

#include "refactor/errors.hpp"

namespace refactor::py {

namespace {

const std::unordered_set<std::string_view> kKeywords = {
    "False",  "None",   "True",  "and",    "as",     "assert", "async",
    "await",  "break",  "class", "continue", "def",  "del",    "elif",
    "else",   "except", "finally", "for",  "from",   "global", "if",
    "import", "in",     "is",    "lambda", "nonlocal", "not",  "or",
    "pass",   "raise",  "return", "try",   "while",  "with",   "yield",
};

bool ident_start(unsigned char c) {
    return std::isalpha(c) != 0 || c == '_' || c >= 0x80;
}

bool ident_cont(unsigned char c) {
    return std::isalnum(c) != 0 || c == '_' || c >= 0x80;
}

bool is_string_prefix(std::string_view s) {
    if (s.size() > 2) return false;
    std::string low;
    for (char c : s) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return low.empty() || low == "r" || low == "b" || low == "u" || low == "f" ||
           low == "br" || low == "rb" || low == "fr" || low == "rf";
}

constexpr std::array<std::string_view, 5> kOps3 = {"**=", "//=", ">>=", "<<=", "..."};
constexpr std::array<std::string_view, 19> kOps2 = {
    "**", "//", ">>", "<<", "<=", ">=", "==", "!=", "->", "+=",
    "-=", "*=", "/=", "%=", "@=", "&=", "|=", "^=", ":="};
constexpr std::string_view kOps1 = "+-*/%@&|^~<>()[]{},:.;=";

class Lexer {
public:
    explicit Lexer(std::string text) : src_(std::move(text)), n_(src_.size()) {}

    std::vector<Token> run() {
        indents_.push_back(0);
        while (true) {
            if (at_line_start_ && depth_ == 0 && !continued_) {
                if (!handle_line_start()) break;
                continue;
            }
            skip_inline_space();
            if (pos_ >= n_) break;
            scan_one();
        }
        if (depth_ > 0 || continued_) {
            throw TokenizeError("EOF in multi-line statement", line_, col_);
        }
        if (logical_has_content_) {
            emit(TokKind::Newline, "", line_, col_, line_);
            logical_has_content_ = false;
        }
        while (indents_.back() > 0) {
            indents_.pop_back();
            emit(TokKind::Dedent, "", line_, 0, line_);
        }
        emit(TokKind::EndMarker, "", line_, 0, line_);
        return std::move(out_);
    }

private:
    // Returns false at end of input.
    bool handle_line_start() {
        int icol = 0;
        while (pos_ < n_) {
            char c = src_[pos_];
            if (c == ' ') {
                ++icol;
            } else if (c == '\t') {
                icol = icol / 8 * 8 + 8;
            } else if (c == '\f') {
                icol = 0;
            } else {
                break;
            }
            advance_byte();
        }
        if (pos_ >= n_) return false;
        char c = src_[pos_];
        if (c == '\n') {
            emit(TokKind::Nl, "\n", line_, col_, line_);
            consume_newline();
            return true;
        }
        if (c == '#') {
            scan_comment();
            if (pos_ < n_) {
                emit(TokKind::Nl, "\n", line_, col_, line_);
                consume_newline();
            }
            return true;
        }
        if (icol > indents_.back()) {
            indents_.push_back(icol);
            emit(TokKind::Indent, std::string(static_cast<std::size_t>(col_), ' '), line_, 0, line_);
        } else {
            while (icol < indents_.back()) {
                indents_.pop_back();
                emit(TokKind::Dedent, "", line_, col_, line_);
            }
            if (icol != indents_.back()) {
                throw TokenizeError("unindent does not match any outer indentation level",
                                    line_, col_);
            }
        }
        at_line_start_ = false;
        return true;
    }

    void scan_one() {
        char c = src_[pos_];
        if (c == '\n') {
            if (depth_ > 0 || !logical_has_content_) {
                emit(TokKind::Nl, "\n", line_, col_, line_);
            } else {
                emit(TokKind::Newline, "\n", line_, col_, line_);
                logical_has_content_ = false;
            }
            consume_newline();
            at_line_start_ = true;
            return;
        }
        if (c == '#') {
            scan_comment();
            return;
        }
        if (c == '\\') {
            if (pos_ + 1 < n_ && src_[pos_ + 1] == '\n') {
                pos_ += 2;
                ++line_;
                col_ = 0;
                continued_ = true;
                return;
            }
            throw TokenizeError("unexpected character after line continuation character",
                                line_, col_);
        }
        continued_ = false;
        if (ident_start(static_cast<unsigned char>(c))) {
            scan_name_or_prefixed_string();
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < n_ && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            scan_number();
            return;
        }
        if (c == '\'' || c == '"') {
            scan_string(pos_, line_, col_);
            return;
        }
        scan_operator();
    }

    void scan_comment() {
        std::size_t start = pos_;
        int scol = col_;
        while (pos_ < n_ && src_[pos_] != '\n') advance_byte();
        emit(TokKind::Comment, src_.substr(start, pos_ - start), line_, scol, line_);
    }

    void scan_name_or_prefixed_string() {
        std::size_t start = pos_;
        int sline = line_;
        int scol = col_;
        while (pos_ < n_ && ident_cont(static_cast<unsigned char>(src_[pos_]))) advance_byte();
        std::string_view word(src_.data() + start, pos_ - start);
        if (pos_ < n_ && (src_[pos_] == '\'' || src_[pos_] == '"') && is_string_prefix(word)) {
            scan_string(start, sline, scol);
            return;
        }
        emit(TokKind::Name, std::string(word), sline, scol, sline);
        logical_has_content_ = true;
    }

    void scan_number() {
        std::size_t start = pos_;
        int scol = col_;
        if (src_[pos_] == '0' && pos_ + 1 < n_ &&
            (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X' || src_[pos_ + 1] == 'o' ||
             src_[pos_ + 1] == 'O' || src_[pos_ + 1] == 'b' || src_[pos_ + 1] == 'B')) {
            advance_byte();
            advance_byte();
            while (pos_ < n_ &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                if (std::isxdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_') {
                    advance_byte();
                } else {
                    break;
                }
            }
        } else {
            auto digits = [&] {
                while (pos_ < n_ &&
                       (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                    advance_byte();
                }
            };
            digits();
            if (pos_ < n_ && src_[pos_] == '.') {
                advance_byte();
                digits();
            }
            if (pos_ < n_ && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                std::size_t mark = pos_;
                advance_byte();
                if (pos_ < n_ && (src_[pos_] == '+' || src_[pos_] == '-')) advance_byte();
                if (pos_ < n_ && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                    digits();
                } else {
                    rewind_to(mark, scol + static_cast<int>(mark - start));
                }
            }
            if (pos_ < n_ && (src_[pos_] == 'j' || src_[pos_] == 'J')) advance_byte();
        }
        emit(TokKind::Number, src_.substr(start, pos_ - start), line_, scol, line_);
        logical_has_content_ = true;
    }

    void scan_string(std::size_t start, int sline, int scol) {
        char quote = src_[pos_];
        bool triple = pos_ + 2 < n_ && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
        if (triple) {
            advance_byte();
            advance_byte();
            advance_byte();
            while (true) {
                if (pos_ >= n_) throw TokenizeError("EOF in multi-line string", sline, scol);
                char c = src_[pos_];
                if (c == '\\') {
                    advance_byte();
                    if (pos_ < n_) consume_string_byte();
                    continue;
                }
                if (c == quote && pos_ + 2 < n_ && src_[pos_ + 1] == quote &&
                    src_[pos_ + 2] == quote) {
                    advance_byte();
                    advance_byte();
                    advance_byte();
                    break;
                }
                consume_string_byte();
            }
        } else {
            advance_byte();
            while (true) {
                if (pos_ >= n_ || src_[pos_] == '\n') {
                    throw TokenizeError("EOL while scanning string literal", sline, scol);
                }
                char c = src_[pos_];
                if (c == '\\') {
                    advance_byte();
                    if (pos_ >= n_) {
                        throw TokenizeError("EOL while scanning string literal", sline, scol);
                    }
                    consume_string_byte();
                    continue;
                }
                advance_byte();
                if (c == quote) break;
            }
        }
        emit(TokKind::String, src_.substr(start, pos_ - start), sline, scol, line_);
        logical_has_content_ = true;
    }

    void scan_operator() {
        int scol = col_;
        auto remaining = std::string_view(src_).substr(pos_);
        for (auto op : kOps3) {
            if (remaining.substr(0, 3) == op) {
                emit_op(std::string(op), scol);
                pos_ += 3;
                col_ += 3;
                return;
            }
        }
        for (auto op : kOps2) {
            if (remaining.substr(0, 2) == op) {
                emit_op(std::string(op), scol);
                pos_ += 2;
                col_ += 2;
                return;
            }
        }
        char c = src_[pos_];
        if (kOps1.find(c) != std::string_view::npos) {
            if (c == '(' || c == '[' || c == '{') ++depth_;
            if ((c == ')' || c == ']' || c == '}') && depth_ > 0) --depth_;
            emit_op(std::string(1, c), scol);
            advance_byte();
            return;
        }
        throw TokenizeError(std::string("invalid character '") + c + "' in source", line_, col_);
    }

    void emit_op(std::string text, int scol) {
        emit(TokKind::Op, std::move(text), line_, scol, line_);
        logical_has_content_ = true;
    }

    void emit(TokKind kind, std::string text, int line, int col, int end_line) {
        out_.push_back(Token{kind, std::move(text), line, col, end_line});
    }

    void skip_inline_space() {
        while (pos_ < n_ && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\f')) {
            advance_byte();
        }
    }

    void advance_byte() {
        ++pos_;
        ++col_;
    }

    void rewind_to(std::size_t mark, int col) {
        pos_ = mark;
        col_ = col;
    }

    void consume_newline() {
        ++pos_;
        ++line_;
        col_ = 0;
        at_line_start_ = true;
    }

    void consume_string_byte() {
        if (src_[pos_] == '\n') {
            ++pos_;
            ++line_;
            col_ = 0;
        } else {
            advance_byte();
        }
    }

    std::string src_;
    std::size_t n_ = 0;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 0;
    int depth_ = 0;
    bool at_line_start_ = true;
    bool continued_ = false;
    bool logical_has_content_ = false;
    std::vector<int> indents_;
    std::vector<Token> out_;
};

}  // namespace

bool is_semantic(TokKind kind) {
    return kind == TokKind::Name || kind == TokKind::Number || kind == TokKind::String ||
           kind == TokKind::Op;
}

bool is_keyword(std::string_view name) { return kKeywords.count(name) > 0; }

std::string normalize_source(std::string_view source) {
    std::string_view body = source;
    if (body.substr(0, 3) == "\xEF\xBB\xBF") body.remove_prefix(3);
    std::string out;
    out.reserve(body.size());
    for (std::size_t i = 0; i < body.size(); ++i) {
        char c = body[i];
        if (c == '\r') {
            out.push_back('\n');
            if (i + 1 < body.size() && body[i + 1] == '\n') ++i;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::vector<Token> lex(std::string_view source) {
    return Lexer(normalize_source(source)).run();
}

std::vector<Token> tokenize(std::string_view source) {
    auto all = lex(source);
    std::vector<Token> out;
    out.reserve(all.size());
    for (auto& t : all) {
        if (is_semantic(t.kind)) out.push_back(std::move(t));
    }
    return out;
}

}  // namespace refactor::py
