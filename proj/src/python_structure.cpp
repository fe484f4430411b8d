#include "refactor/python_structure.hpp"

#include <optional>
#include <string>

#include "refactor/errors.hpp"

namespace refactor::py {

namespace {

enum class Opened { None, If, Elif, Else, Loop, Try, TryExcepted, TryElse, Finally, Other };

struct LevelCtx {
    Opened opened_by = Opened::None;
    Opened last_closed = Opened::None;
};

struct PendingSuite {
    Opened kind = Opened::Other;
    bool opens_block = false;
    std::size_t block_index = 0;
    int line = 0;
};

struct BlockEntry {
    std::size_t index;
    int suite_level;  // indent level of the block's body; -1 for inline suites
};

bool is_op(const Token& t, std::string_view text) {
    return t.kind == TokKind::Op && t.text == text;
}

bool is_name(const Token& t, std::string_view text) {
    return t.kind == TokKind::Name && t.text == text;
}

int bracket_delta(const Token& t) {
    if (t.kind != TokKind::Op || t.text.size() != 1) return 0;
    char c = t.text[0];
    if (c == '(' || c == '[' || c == '{') return 1;
    if (c == ')' || c == ']' || c == '}') return -1;
    return 0;
}

[[noreturn]] void fail(const std::string& what, int line) {
    throw CCError(what + " (line " + std::to_string(line) + ")");
}

class Analyzer {
public:
    explicit Analyzer(const std::vector<Token>& toks) : toks_(toks) {}

    StructureInfo run() {
        info_.blocks.push_back(Block{BlockKind::Module, "", 1, 0});
        blocks_.push_back(BlockEntry{0, 0});
        levels_.push_back(LevelCtx{});
        std::size_t i = 0;
        while (i < toks_.size()) {
            const Token& t = toks_[i];
            switch (t.kind) {
                case TokKind::Comment:
                case TokKind::Nl:
                case TokKind::Newline:
                    ++i;
                    break;
                case TokKind::Indent:
                    if (!pending_) fail("unexpected indent", t.line);
                    levels_.push_back(LevelCtx{pending_->kind, Opened::None});
                    if (pending_->opens_block) {
                        blocks_.push_back(BlockEntry{pending_->block_index,
                                                     static_cast<int>(levels_.size()) - 1});
                    }
                    pending_.reset();
                    ++i;
                    break;
                case TokKind::Dedent:
                    if (pending_) fail("expected an indented block", t.line);
                    close_level();
                    ++i;
                    break;
                case TokKind::EndMarker:
                    if (pending_) fail("expected an indented block", t.line);
                    ++i;
                    break;
                default: {
                    if (pending_) fail("expected an indented block", t.line);
                    std::vector<Token> line;
                    while (i < toks_.size() && toks_[i].kind != TokKind::Newline &&
                           toks_[i].kind != TokKind::EndMarker) {
                        if (is_semantic(toks_[i].kind)) line.push_back(toks_[i]);
                        ++i;
                    }
                    if (i < toks_.size() && toks_[i].kind == TokKind::Newline) ++i;
                    process_line(line);
                    break;
                }
            }
        }
        if (pending_) fail("expected an indented block", last_line_);
        return std::move(info_);
    }

private:
    void close_level() {
        int body_level = static_cast<int>(levels_.size()) - 1;
        Opened ob = levels_.back().opened_by;
        levels_.pop_back();
        levels_.back().last_closed = ob;
        if (blocks_.back().suite_level == body_level) blocks_.pop_back();
    }

    Block& current_block() { return info_.blocks[blocks_.back().index]; }

    void add(int n) { current_block().decisions += n; }

    LevelCtx& here() { return levels_.back(); }

    void process_line(const std::vector<Token>& line) {
        if (line.empty()) return;
        last_line_ = line.front().line;
        if (is_op(line.front(), "@")) {
            // Decorator: the whole expression is outside any counted body.
            here().last_closed = Opened::None;
            return;
        }
        std::size_t p = 0;
        if (is_name(line.front(), "async") && line.size() > 1 &&
            (is_name(line[1], "def") || is_name(line[1], "for") || is_name(line[1], "with"))) {
            p = 1;
        }
        const Token& head = line[p];
        if (head.kind == TokKind::Name && is_keyword(head.text) && is_compound_kw(head.text)) {
            handle_compound(line, p);
            return;
        }
        if ((is_name(head, "match") || is_name(head, "case")) &&
            find_suite_colon(line, p + 1).has_value()) {
            handle_compound(line, p);
            return;
        }
        here().last_closed = Opened::None;
        handle_simple_chain(line, 0, line.size());
    }

    static bool is_compound_kw(std::string_view w) {
        return w == "if" || w == "elif" || w == "else" || w == "while" || w == "for" ||
               w == "try" || w == "except" || w == "finally" || w == "with" || w == "def" ||
               w == "class";
    }

    // First ':' at bracket depth 0 not owned by a 'lambda'.
    std::optional<std::size_t> find_suite_colon(const std::vector<Token>& line,
                                                std::size_t from) const {
        int depth = 0;
        int lambdas = 0;
        for (std::size_t i = from; i < line.size(); ++i) {
            const Token& t = line[i];
            depth += bracket_delta(t);
            if (depth > 0) continue;
            if (t.kind == TokKind::Name && t.text == "lambda") {
                ++lambdas;
            } else if (is_op(t, ":")) {
                if (lambdas > 0) {
                    --lambdas;
                } else {
                    return i;
                }
            }
        }
        return std::nullopt;
    }

    void handle_compound(const std::vector<Token>& line, std::size_t p) {
        const std::string& kw = line[p].text;
        int ln = line[p].line;
        auto ci_opt = find_suite_colon(line, p + 1);
        if (!ci_opt) fail("expected ':' in " + kw + " statement", ln);
        std::size_t ci = *ci_opt;
        bool header_empty = ci == p + 1;

        Opened kind = Opened::Other;
        bool opens_block = false;
        std::size_t block_index = 0;
        bool mute_header = false;
        bool count_if_tokens = true;

        if (kw == "if") {
            add(1);
            kind = Opened::If;
        } else if (kw == "elif") {
            if (here().last_closed != Opened::If && here().last_closed != Opened::Elif) {
                fail("'elif' without matching 'if'", ln);
            }
            add(1);
            kind = Opened::Elif;
        } else if (kw == "else") {
            Opened prev = here().last_closed;
            if (prev == Opened::Loop || prev == Opened::TryExcepted) {
                add(1);
            } else if (prev != Opened::If && prev != Opened::Elif) {
                fail("'else' without matching statement", ln);
            }
            if (!header_empty) fail("invalid syntax after 'else'", ln);
            kind = prev == Opened::TryExcepted ? Opened::TryElse : Opened::Else;
        } else if (kw == "while" || kw == "for") {
            add(1);
            kind = Opened::Loop;
        } else if (kw == "try") {
            if (!header_empty) fail("invalid syntax after 'try'", ln);
            kind = Opened::Try;
        } else if (kw == "except") {
            Opened prev = here().last_closed;
            if (prev != Opened::Try && prev != Opened::TryExcepted) {
                fail("'except' without matching 'try'", ln);
            }
            add(1);
            kind = Opened::TryExcepted;
        } else if (kw == "finally") {
            Opened prev = here().last_closed;
            if (prev != Opened::Try && prev != Opened::TryExcepted && prev != Opened::TryElse) {
                fail("'finally' without matching 'try'", ln);
            }
            if (!header_empty) fail("invalid syntax after 'finally'", ln);
            kind = Opened::Finally;
        } else if (kw == "with") {
            kind = Opened::Other;
        } else if (kw == "def" || kw == "class") {
            if (ci < p + 2 || line[p + 1].kind != TokKind::Name || is_keyword(line[p + 1].text)) {
                fail("invalid " + kw + " name", ln);
            }
            if (kw == "def" && (ci < p + 3 || !is_op(line[p + 2], "("))) {
                fail("expected '(' after function name", ln);
            }
            const Block& parent = current_block();
            std::string path =
                parent.name.empty() ? line[p + 1].text : parent.name + "." + line[p + 1].text;
            block_index = info_.blocks.size();
            info_.blocks.push_back(Block{kw == "def" ? BlockKind::Function : BlockKind::Class,
                                         path, ln, 0});
            opens_block = true;
            mute_header = true;
        } else if (kw == "case") {
            count_if_tokens = false;  // a trailing guard's 'if' is not a decision point
        }
        // "match" falls through: subject expression counts normally.

        if (!mute_header) {
            add(scan_expr(line, p + 1, ci, count_if_tokens));
        }

        if (ci + 1 == line.size()) {
            here().last_closed = Opened::None;
            pending_ = PendingSuite{kind, opens_block, block_index, ln};
        } else {
            if (opens_block) blocks_.push_back(BlockEntry{block_index, -1});
            handle_inline_suite(line, ci + 1, ln);
            if (opens_block) blocks_.pop_back();
            here().last_closed = kind;
        }
    }

    void handle_inline_suite(const std::vector<Token>& line, std::size_t from, int ln) {
        std::size_t seg = from;
        int depth = 0;
        for (std::size_t i = from; i <= line.size(); ++i) {
            if (i < line.size()) depth += bracket_delta(line[i]);
            bool split = i == line.size() || (depth == 0 && is_op(line[i], ";"));
            if (!split) continue;
            if (i > seg) {
                const Token& h = line[seg];
                bool async_head = is_name(h, "async");
                if ((h.kind == TokKind::Name && is_keyword(h.text) && is_compound_kw(h.text)) ||
                    async_head) {
                    fail("compound statement not allowed in an inline suite", ln);
                }
                handle_simple_segment(line, seg, i);
            }
            seg = i + 1;
        }
    }

    void handle_simple_chain(const std::vector<Token>& line, std::size_t from, std::size_t to) {
        std::size_t seg = from;
        int depth = 0;
        for (std::size_t i = from; i <= to; ++i) {
            if (i < to) depth += bracket_delta(line[i]);
            bool split = i == to || (depth == 0 && is_op(line[i], ";"));
            if (!split) continue;
            if (i > seg) handle_simple_segment(line, seg, i);
            seg = i + 1;
        }
    }

    void handle_simple_segment(const std::vector<Token>& line, std::size_t from, std::size_t to) {
        if (from >= to) return;
        if (is_name(line[from], "assert")) {
            add(1);
            ++from;
        }
        add(scan_expr(line, from, to, true));
    }

    // Token-level decision counting inside expressions: and/or, ternary or
    // comprehension 'if', comprehension 'for'.
    static int scan_expr(const std::vector<Token>& line, std::size_t from, std::size_t to,
                         bool count_if) {
        int n = 0;
        for (std::size_t i = from; i < to && i < line.size(); ++i) {
            const Token& t = line[i];
            if (t.kind != TokKind::Name) continue;
            if (t.text == "and" || t.text == "or") {
                ++n;
            } else if (t.text == "if") {
                if (count_if) ++n;
            } else if (t.text == "for") {
                ++n;
            }
        }
        return n;
    }

    const std::vector<Token>& toks_;
    StructureInfo info_;
    std::vector<BlockEntry> blocks_;
    std::vector<LevelCtx> levels_;
    std::optional<PendingSuite> pending_;
    int last_line_ = 1;
};

}  // namespace

StructureInfo analyze_structure(const std::vector<Token>& tokens) {
    return Analyzer(tokens).run();
}

}  // namespace refactor::py
