#pragma once

// Minimal recursive-descent parser for an imperative Python subset, used to
// extract node-type sets from code answers. The node vocabulary is fixed:
//
//   Module FunctionDef ClassDef Return Delete Assign AugAssign AnnAssign
//   For While If With Raise Try ExceptHandler Assert Import ImportFrom
//   Global Nonlocal Expr Pass Break Continue BoolOp BinOp UnaryOp Lambda
//   IfExp NamedExpr Dict Set ListComp SetComp DictComp GeneratorExp Await
//   Yield Compare Call Constant Attribute Subscript Starred Name List Tuple
//   Slice
//
// Deliberate reductions: expression contexts (load/store), operator kinds,
// and helper nodes (arguments, keyword, alias, comprehension clauses) carry
// no names of their own; string literals of every flavor are Constant; an
// async def is a FunctionDef.

#include <cctype>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "concat/errors.hpp"

namespace concat::pyparse {

enum class Tok { Ident, Keyword, Number, Str, Op, Delim, Newline, Indent, Dedent, End };

struct Token {
    Tok type;
    std::string text;
};

inline const std::unordered_set<std::string>& keywords() {
    static const std::unordered_set<std::string> kw = {
        "False", "None",   "True",  "and",      "as",     "assert", "async",  "await",
        "break", "class",  "continue", "def",   "del",    "elif",   "else",   "except",
        "finally", "for",  "from",  "global",   "if",     "import", "in",     "is",
        "lambda", "nonlocal", "not", "or",      "pass",   "raise",  "return", "try",
        "while", "with",   "yield"};
    return kw;
}

class Lexer {
  public:
    Lexer(std::string src, bool lenient) : src_(std::move(src)), lenient_(lenient) {}

    std::vector<Token> run() {
        indents_.assign(1, 0);
        at_line_start_ = true;
        depth_ = 0;
        pos_ = 0;
        line_has_content_ = false;
        while (pos_ < src_.size()) step();
        if (line_has_content_) out_.push_back({Tok::Newline, ""});
        while (indents_.size() > 1) {
            indents_.pop_back();
            out_.push_back({Tok::Dedent, ""});
        }
        out_.push_back({Tok::End, ""});
        return std::move(out_);
    }

  private:
    void fail(const std::string& what) { throw ParseFailure("tokenizer: " + what); }

    void step() {
        if (at_line_start_ && depth_ == 0) {
            handle_indentation();
            if (pos_ >= src_.size()) return;
        }
        char c = src_[pos_];
        if (c == '\n') {
            ++pos_;
            end_line();
            return;
        }
        if (c == '\r') {
            ++pos_;
            return;
        }
        if (c == ' ' || c == '\t') {
            ++pos_;
            return;
        }
        if (c == '#') {
            while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            return;
        }
        if (c == '\\' && pos_ + 1 < src_.size() &&
            (src_[pos_ + 1] == '\n' ||
             (src_[pos_ + 1] == '\r' && pos_ + 2 < src_.size() && src_[pos_ + 2] == '\n'))) {
            pos_ += (src_[pos_ + 1] == '\n') ? 2 : 3;
            return;
        }
        line_has_content_ = true;
        if (is_ident_start(c)) {
            lex_word();
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            lex_number();
            return;
        }
        if (c == '"' || c == '\'') {
            lex_string(pos_);
            return;
        }
        lex_op_or_delim();
    }

    void handle_indentation() {
        // Measure the new line's indent; skip blank and comment-only lines.
        while (true) {
            std::size_t p = pos_;
            int col = 0;
            while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t')) {
                col = (src_[p] == '\t') ? (col / 8 + 1) * 8 : col + 1;
                ++p;
            }
            if (p >= src_.size()) {
                pos_ = p;
                return;
            }
            if (src_[p] == '\n' || src_[p] == '\r' || src_[p] == '#') {
                while (p < src_.size() && src_[p] != '\n') ++p;
                if (p < src_.size()) ++p;
                pos_ = p;
                continue;
            }
            pos_ = p;
            if (col > indents_.back()) {
                indents_.push_back(col);
                out_.push_back({Tok::Indent, ""});
            } else {
                while (col < indents_.back()) {
                    indents_.pop_back();
                    out_.push_back({Tok::Dedent, ""});
                }
                if (col != indents_.back()) {
                    if (!lenient_) fail("inconsistent dedent");
                    indents_.push_back(col);
                }
            }
            at_line_start_ = false;
            return;
        }
    }

    void end_line() {
        if (depth_ > 0) return;  // implicit joining inside brackets
        if (line_has_content_) {
            out_.push_back({Tok::Newline, ""});
            line_has_content_ = false;
        }
        at_line_start_ = true;
    }

    static bool is_ident_start(char c) {
        return std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
               static_cast<unsigned char>(c) >= 0x80;
    }
    static bool is_ident_char(char c) {
        return is_ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
    }

    void lex_word() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
        std::string word = src_.substr(start, pos_ - start);
        // String prefixes: r"", f'', rb"" and friends.
        if (word.size() <= 2 && pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'')) {
            std::string low;
            for (char c : word) low.push_back(static_cast<char>(std::tolower(c)));
            if (low.find_first_not_of("rbfu") == std::string::npos) {
                lex_string(start);
                return;
            }
        }
        out_.push_back({keywords().count(word) ? Tok::Keyword : Tok::Ident, word});
    }

    void lex_number() {
        std::size_t start = pos_;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
                ++pos_;
            } else if ((c == '+' || c == '-') && pos_ > start) {
                char prev = static_cast<char>(std::tolower(src_[pos_ - 1]));
                bool hex = src_.size() > start + 1 && src_[start] == '0' &&
                           std::tolower(src_[start + 1]) == 'x';
                if (prev == 'e' && !hex)
                    ++pos_;
                else
                    break;
            } else {
                break;
            }
        }
        out_.push_back({Tok::Number, src_.substr(start, pos_ - start)});
    }

    void lex_string(std::size_t literal_start) {
        char quote = src_[pos_];
        bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
        pos_ += triple ? 3 : 1;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\\' && pos_ + 1 < src_.size()) {
                pos_ += 2;
                continue;
            }
            if (triple) {
                if (c == quote && pos_ + 2 < src_.size() + 1 && pos_ + 1 < src_.size() &&
                    src_[pos_ + 1] == quote && pos_ + 2 < src_.size() && src_[pos_ + 2] == quote) {
                    pos_ += 3;
                    out_.push_back({Tok::Str, src_.substr(literal_start, pos_ - literal_start)});
                    return;
                }
                ++pos_;
            } else {
                if (c == quote) {
                    ++pos_;
                    out_.push_back({Tok::Str, src_.substr(literal_start, pos_ - literal_start)});
                    return;
                }
                if (c == '\n') break;
                ++pos_;
            }
        }
        if (!lenient_) fail("unterminated string literal");
        out_.push_back({Tok::Str, src_.substr(literal_start, pos_ - literal_start)});
    }

    void lex_op_or_delim() {
        static const char* three[] = {"**=", "//=", "<<=", ">>=", "..."};
        static const char* two[] = {"**", "//", "<<", ">>", "<=", ">=", "==", "!=", "->",
                                    ":=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
                                    "@="};
        for (const char* op : three) {
            if (src_.compare(pos_, 3, op) == 0) {
                out_.push_back({Tok::Op, op});
                pos_ += 3;
                return;
            }
        }
        for (const char* op : two) {
            if (src_.compare(pos_, 2, op) == 0) {
                out_.push_back({Tok::Op, op});
                pos_ += 2;
                return;
            }
        }
        char c = src_[pos_++];
        switch (c) {
            case '(': case '[': case '{':
                ++depth_;
                out_.push_back({Tok::Delim, std::string(1, c)});
                return;
            case ')': case ']': case '}':
                if (depth_ > 0) --depth_;
                out_.push_back({Tok::Delim, std::string(1, c)});
                return;
            case ',': case ':': case '.': case ';':
                out_.push_back({Tok::Delim, std::string(1, c)});
                return;
            case '+': case '-': case '*': case '/': case '%': case '@':
            case '&': case '|': case '^': case '~': case '<': case '>': case '=':
                out_.push_back({Tok::Op, std::string(1, c)});
                return;
            default:
                if (!lenient_) fail(std::string("unexpected character '") + c + "'");
                out_.push_back({Tok::Delim, std::string(1, c)});
                return;
        }
    }

    std::string src_;
    bool lenient_;
    std::vector<Token> out_;
    std::vector<int> indents_;
    std::size_t pos_ = 0;
    int depth_ = 0;
    bool at_line_start_ = true;
    bool line_has_content_ = false;
};

class Parser {
  public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    std::set<std::string> parse_module() {
        add("Module");
        while (!at(Tok::End)) statement();
        return std::move(types_);
    }

  private:
    [[noreturn]] void fail(const std::string& what) {
        throw ParseFailure("parser: " + what + " near '" + peek().text + "'");
    }

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = pos_ + ahead;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    bool at(Tok t) const { return peek().type == t; }
    bool at(Tok t, const char* text) const { return peek().type == t && peek().text == text; }
    bool at_kw(const char* kw) const { return at(Tok::Keyword, kw); }
    const Token& advance() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool accept(Tok t, const char* text) {
        if (at(t, text)) {
            advance();
            return true;
        }
        return false;
    }
    void expect(Tok t, const char* text) {
        if (!accept(t, text)) fail(std::string("expected '") + text + "'");
    }
    void expect_newline() {
        if (at(Tok::End)) return;
        if (!accept(Tok::Newline, "") && !at(Tok::Dedent)) {
            if (peek().type != Tok::Newline) fail("expected end of line");
            advance();
        }
    }
    void add(const char* name) { types_.insert(name); }

    // ---- statements ----

    void statement() {
        if (accept(Tok::Newline, "")) return;
        if (at(Tok::Op, "@")) {
            while (accept(Tok::Op, "@")) {
                expression();
                if (!accept(Tok::Newline, "")) fail("expected newline after decorator");
            }
            if (!at_kw("def") && !at_kw("class") && !at_kw("async")) fail("expected def or class");
        }
        if (at_kw("def") || at_kw("class") || at_kw("if") || at_kw("while") || at_kw("for") ||
            at_kw("try") || at_kw("with") || at_kw("async")) {
            compound_statement();
        } else {
            simple_statement_line();
        }
    }

    void simple_statement_line() {
        simple_statement();
        while (accept(Tok::Delim, ";")) {
            if (at(Tok::Newline) || at(Tok::End)) break;
            simple_statement();
        }
        expect_newline();
    }

    void simple_statement() {
        if (at_kw("return")) {
            advance();
            add("Return");
            if (!at(Tok::Newline) && !at(Tok::End) && !at(Tok::Delim, ";")) expression_list();
        } else if (at_kw("pass")) {
            advance();
            add("Pass");
        } else if (at_kw("break")) {
            advance();
            add("Break");
        } else if (at_kw("continue")) {
            advance();
            add("Continue");
        } else if (at_kw("del")) {
            advance();
            add("Delete");
            expression_list();
        } else if (at_kw("raise")) {
            advance();
            add("Raise");
            if (!at(Tok::Newline) && !at(Tok::End) && !at(Tok::Delim, ";")) {
                expression();
                if (accept(Tok::Keyword, "from")) expression();
            }
        } else if (at_kw("assert")) {
            advance();
            add("Assert");
            expression();
            if (accept(Tok::Delim, ",")) expression();
        } else if (at_kw("import")) {
            advance();
            add("Import");
            dotted_names();
        } else if (at_kw("from")) {
            advance();
            add("ImportFrom");
            while (accept(Tok::Delim, ".") || accept(Tok::Op, "...")) {
            }
            if (at(Tok::Ident)) dotted_name();
            expect(Tok::Keyword, "import");
            if (accept(Tok::Op, "*")) return;
            if (accept(Tok::Delim, "(")) {
                import_names();
                expect(Tok::Delim, ")");
            } else {
                import_names();
            }
        } else if (at_kw("global")) {
            advance();
            add("Global");
            name_list();
        } else if (at_kw("nonlocal")) {
            advance();
            add("Nonlocal");
            name_list();
        } else {
            expression_statement();
        }
    }

    void name_list() {
        do {
            if (!at(Tok::Ident)) fail("expected name");
            advance();
        } while (accept(Tok::Delim, ","));
    }

    void dotted_name() {
        if (!at(Tok::Ident)) fail("expected module name");
        advance();
        while (accept(Tok::Delim, ".")) {
            if (!at(Tok::Ident)) fail("expected name after '.'");
            advance();
        }
    }

    void dotted_names() {
        do {
            dotted_name();
            if (accept(Tok::Keyword, "as")) {
                if (!at(Tok::Ident)) fail("expected alias");
                advance();
            }
        } while (accept(Tok::Delim, ","));
    }

    void import_names() {
        do {
            if (at(Tok::Delim, ")")) break;
            if (!at(Tok::Ident)) fail("expected imported name");
            advance();
            if (accept(Tok::Keyword, "as")) {
                if (!at(Tok::Ident)) fail("expected alias");
                advance();
            }
        } while (accept(Tok::Delim, ","));
    }

    void expression_statement() {
        expression_list();
        if (at(Tok::Delim, ":") && !at(Tok::Op, ":=")) {
            advance();
            add("AnnAssign");
            expression();
            if (accept(Tok::Op, "=")) expression_list();
            return;
        }
        static const char* augops[] = {"+=", "-=", "*=", "/=", "//=", "%=", "**=",
                                       "<<=", ">>=", "&=", "|=", "^=", "@="};
        for (const char* op : augops) {
            if (at(Tok::Op, op)) {
                advance();
                add("AugAssign");
                add("BinOp");
                expression_list();
                return;
            }
        }
        if (at(Tok::Op, "=")) {
            add("Assign");
            while (accept(Tok::Op, "=")) expression_list();
            return;
        }
        add("Expr");
    }

    void compound_statement() {
        if (at_kw("async")) {
            advance();
            if (!at_kw("def") && !at_kw("for") && !at_kw("with")) fail("bad async statement");
        }
        if (at_kw("def")) {
            advance();
            add("FunctionDef");
            if (!at(Tok::Ident)) fail("expected function name");
            advance();
            expect(Tok::Delim, "(");
            parameters();
            expect(Tok::Delim, ")");
            if (accept(Tok::Op, "->")) expression();
            expect(Tok::Delim, ":");
            block();
        } else if (at_kw("class")) {
            advance();
            add("ClassDef");
            if (!at(Tok::Ident)) fail("expected class name");
            advance();
            if (accept(Tok::Delim, "(")) {
                if (!at(Tok::Delim, ")")) call_arguments();
                expect(Tok::Delim, ")");
            }
            expect(Tok::Delim, ":");
            block();
        } else if (at_kw("if")) {
            advance();
            add("If");
            expression();
            expect(Tok::Delim, ":");
            block();
            while (at_kw("elif")) {
                advance();
                add("If");
                expression();
                expect(Tok::Delim, ":");
                block();
            }
            if (at_kw("else")) {
                advance();
                expect(Tok::Delim, ":");
                block();
            }
        } else if (at_kw("while")) {
            advance();
            add("While");
            expression();
            expect(Tok::Delim, ":");
            block();
            optional_else();
        } else if (at_kw("for")) {
            advance();
            add("For");
            expression_list();
            expect(Tok::Keyword, "in");
            expression_list();
            expect(Tok::Delim, ":");
            block();
            optional_else();
        } else if (at_kw("with")) {
            advance();
            add("With");
            do {
                expression();
                if (accept(Tok::Keyword, "as")) expression();
            } while (accept(Tok::Delim, ","));
            expect(Tok::Delim, ":");
            block();
        } else if (at_kw("try")) {
            advance();
            add("Try");
            expect(Tok::Delim, ":");
            block();
            bool handled = false;
            while (at_kw("except")) {
                advance();
                add("ExceptHandler");
                handled = true;
                if (!at(Tok::Delim, ":")) {
                    expression();
                    if (accept(Tok::Keyword, "as")) {
                        if (!at(Tok::Ident)) fail("expected name after 'as'");
                        advance();
                    }
                }
                expect(Tok::Delim, ":");
                block();
            }
            if (at_kw("else")) {
                advance();
                expect(Tok::Delim, ":");
                block();
            }
            if (at_kw("finally")) {
                advance();
                expect(Tok::Delim, ":");
                block();
                handled = true;
            }
            if (!handled) fail("try without except or finally");
        } else {
            fail("expected compound statement");
        }
    }

    void optional_else() {
        if (at_kw("else")) {
            advance();
            expect(Tok::Delim, ":");
            block();
        }
    }

    void block() {
        if (accept(Tok::Newline, "")) {
            if (!accept(Tok::Indent, "")) fail("expected indented block");
            while (!at(Tok::Dedent) && !at(Tok::End)) statement();
            accept(Tok::Dedent, "");
        } else {
            simple_statement_line();
        }
    }

    void parameters() {
        while (!at(Tok::Delim, ")")) {
            if (accept(Tok::Op, "**") || accept(Tok::Op, "*") || accept(Tok::Op, "/")) {
                if (at(Tok::Ident)) advance();
            } else {
                if (!at(Tok::Ident)) fail("expected parameter name");
                advance();
                if (accept(Tok::Delim, ":")) expression();
                if (accept(Tok::Op, "=")) expression();
            }
            if (!accept(Tok::Delim, ",")) break;
        }
    }

    // ---- expressions ----

    // testlist: expr (',' expr)* — a trailing comma or 2+ items makes a Tuple.
    void expression_list() {
        expression();
        bool tuple = false;
        while (accept(Tok::Delim, ",")) {
            tuple = true;
            if (ends_expression()) break;
            expression();
        }
        if (tuple) add("Tuple");
    }

    bool ends_expression() const {
        if (at(Tok::Newline) || at(Tok::End) || at(Tok::Dedent)) return true;
        if (peek().type == Tok::Delim) {
            const std::string& t = peek().text;
            return t == ")" || t == "]" || t == "}" || t == ":" || t == ";";
        }
        return at(Tok::Op, "=") || at(Tok::Keyword, "in");
    }

    void expression() {
        if (at_kw("lambda")) {
            advance();
            add("Lambda");
            if (!at(Tok::Delim, ":")) lambda_parameters();
            expect(Tok::Delim, ":");
            expression();
            return;
        }
        if (at_kw("yield")) {
            advance();
            add("Yield");
            if (accept(Tok::Keyword, "from")) {
                expression();
            } else if (!ends_expression()) {
                expression_list_inner();
            }
            return;
        }
        or_test();
        if (at(Tok::Op, ":=")) {
            advance();
            add("NamedExpr");
            expression();
            return;
        }
        if (at_kw("if")) {
            advance();
            add("IfExp");
            or_test();
            expect(Tok::Keyword, "else");
            expression();
        }
    }

    // Comma-joined expressions in value position (e.g. yield a, b).
    void expression_list_inner() {
        expression();
        bool tuple = false;
        while (accept(Tok::Delim, ",")) {
            tuple = true;
            if (ends_expression()) break;
            expression();
        }
        if (tuple) add("Tuple");
    }

    void lambda_parameters() {
        while (!at(Tok::Delim, ":")) {
            if (accept(Tok::Op, "**") || accept(Tok::Op, "*")) {
                if (at(Tok::Ident)) advance();
            } else {
                if (!at(Tok::Ident)) fail("expected lambda parameter");
                advance();
                if (accept(Tok::Op, "=")) expression();
            }
            if (!accept(Tok::Delim, ",")) break;
        }
    }

    void or_test() {
        and_test();
        bool any = false;
        while (at_kw("or")) {
            advance();
            any = true;
            and_test();
        }
        if (any) add("BoolOp");
    }

    void and_test() {
        not_test();
        bool any = false;
        while (at_kw("and")) {
            advance();
            any = true;
            not_test();
        }
        if (any) add("BoolOp");
    }

    void not_test() {
        if (at_kw("not")) {
            advance();
            add("UnaryOp");
            not_test();
            return;
        }
        comparison();
    }

    bool at_comparison_op() const {
        static const char* ops[] = {"<", ">", "==", "!=", "<=", ">="};
        for (const char* op : ops)
            if (at(Tok::Op, op)) return true;
        return at_kw("in") || at_kw("is") ||
               (at_kw("not") && peek(1).type == Tok::Keyword && peek(1).text == "in");
    }

    void comparison() {
        bit_or();
        bool any = false;
        while (at_comparison_op()) {
            if (at_kw("not")) {
                advance();
                expect(Tok::Keyword, "in");
            } else if (at_kw("is")) {
                advance();
                accept(Tok::Keyword, "not");
            } else {
                advance();
            }
            any = true;
            bit_or();
        }
        if (any) add("Compare");
    }

    void bit_or() { binary_level(&Parser::bit_xor, {"|"}); }
    void bit_xor() { binary_level(&Parser::bit_and, {"^"}); }
    void bit_and() { binary_level(&Parser::shift, {"&"}); }
    void shift() { binary_level(&Parser::arith, {"<<", ">>"}); }
    void arith() { binary_level(&Parser::term, {"+", "-"}); }
    void term() { binary_level(&Parser::factor, {"*", "/", "//", "%", "@"}); }

    void binary_level(void (Parser::*next)(), std::initializer_list<const char*> ops) {
        (this->*next)();
        bool any = true;
        while (any) {
            any = false;
            for (const char* op : ops) {
                if (at(Tok::Op, op)) {
                    advance();
                    add("BinOp");
                    (this->*next)();
                    any = true;
                    break;
                }
            }
        }
    }

    void factor() {
        if (at(Tok::Op, "+") || at(Tok::Op, "-") || at(Tok::Op, "~")) {
            advance();
            add("UnaryOp");
            factor();
            return;
        }
        power();
    }

    void power() {
        if (at_kw("await")) {
            advance();
            add("Await");
        }
        postfix();
        if (at(Tok::Op, "**")) {
            advance();
            add("BinOp");
            factor();
        }
    }

    void postfix() {
        atom();
        while (true) {
            if (at(Tok::Delim, "(")) {
                advance();
                add("Call");
                if (!at(Tok::Delim, ")")) call_arguments();
                expect(Tok::Delim, ")");
            } else if (at(Tok::Delim, ".")) {
                advance();
                add("Attribute");
                if (!at(Tok::Ident) && !at(Tok::Keyword)) fail("expected attribute name");
                advance();
            } else if (at(Tok::Delim, "[")) {
                advance();
                add("Subscript");
                subscript_list();
                expect(Tok::Delim, "]");
            } else {
                break;
            }
        }
    }

    void call_arguments() {
        do {
            if (at(Tok::Delim, ")")) break;
            if (accept(Tok::Op, "*")) {
                add("Starred");
                expression();
            } else if (accept(Tok::Op, "**")) {
                expression();
            } else if (at(Tok::Ident) && peek(1).type == Tok::Op && peek(1).text == "=") {
                advance();
                advance();
                expression();
            } else {
                expression();
                if (at_kw("for") || at_kw("async")) {
                    add("GeneratorExp");
                    comprehension_clauses();
                }
            }
        } while (accept(Tok::Delim, ","));
    }

    void subscript_item() {
        bool sliced = false;
        if (!at(Tok::Delim, ":")) {
            expression();
        }
        if (accept(Tok::Delim, ":")) {
            sliced = true;
            if (!at(Tok::Delim, ":") && !at(Tok::Delim, "]") && !at(Tok::Delim, ",")) expression();
            if (accept(Tok::Delim, ":")) {
                if (!at(Tok::Delim, "]") && !at(Tok::Delim, ",")) expression();
            }
        }
        if (sliced) add("Slice");
    }

    void subscript_list() {
        subscript_item();
        bool tuple = false;
        while (accept(Tok::Delim, ",")) {
            tuple = true;
            if (at(Tok::Delim, "]")) break;
            subscript_item();
        }
        if (tuple) add("Tuple");
    }

    void comprehension_clauses() {
        while (true) {
            accept(Tok::Keyword, "async");
            if (!accept(Tok::Keyword, "for")) break;
            expression_target_list();
            expect(Tok::Keyword, "in");
            or_test();
            while (at_kw("if")) {
                advance();
                or_test();
            }
            if (!at_kw("for") && !at_kw("async")) break;
        }
    }

    void expression_target_list() {
        or_test();
        bool tuple = false;
        while (accept(Tok::Delim, ",")) {
            if (at_kw("in")) break;
            tuple = true;
            or_test();
        }
        if (tuple) add("Tuple");
    }

    void atom() {
        const Token& t = peek();
        switch (t.type) {
            case Tok::Number:
                advance();
                add("Constant");
                return;
            case Tok::Str:
                while (at(Tok::Str)) advance();  // adjacent literals concatenate
                add("Constant");
                return;
            case Tok::Ident:
                advance();
                add("Name");
                return;
            case Tok::Keyword:
                if (t.text == "True" || t.text == "False" || t.text == "None") {
                    advance();
                    add("Constant");
                    return;
                }
                if (t.text == "lambda" || t.text == "yield" || t.text == "await" ||
                    t.text == "not") {
                    expression();
                    return;
                }
                fail("unexpected keyword in expression");
            case Tok::Op:
                if (t.text == "*") {
                    advance();
                    add("Starred");
                    expression();
                    return;
                }
                if (t.text == "...") {
                    advance();
                    add("Constant");
                    return;
                }
                fail("unexpected operator");
            case Tok::Delim:
                if (t.text == "(") {
                    advance();
                    paren_form();
                    return;
                }
                if (t.text == "[") {
                    advance();
                    bracket_form();
                    return;
                }
                if (t.text == "{") {
                    advance();
                    brace_form();
                    return;
                }
                fail("unexpected delimiter");
            default:
                fail("unexpected token");
        }
    }

    void paren_form() {
        if (accept(Tok::Delim, ")")) {
            add("Tuple");
            return;
        }
        expression();
        if (at_kw("for") || at_kw("async")) {
            add("GeneratorExp");
            comprehension_clauses();
            expect(Tok::Delim, ")");
            return;
        }
        bool tuple = false;
        while (accept(Tok::Delim, ",")) {
            tuple = true;
            if (at(Tok::Delim, ")")) break;
            expression();
        }
        if (tuple) add("Tuple");
        expect(Tok::Delim, ")");
    }

    void bracket_form() {
        if (accept(Tok::Delim, "]")) {
            add("List");
            return;
        }
        expression();
        if (at_kw("for") || at_kw("async")) {
            add("ListComp");
            comprehension_clauses();
            expect(Tok::Delim, "]");
            return;
        }
        add("List");
        while (accept(Tok::Delim, ",")) {
            if (at(Tok::Delim, "]")) break;
            expression();
        }
        expect(Tok::Delim, "]");
    }

    void brace_form() {
        if (accept(Tok::Delim, "}")) {
            add("Dict");
            return;
        }
        if (accept(Tok::Op, "**")) {  // dict unpacking
            add("Dict");
            expression();
            while (accept(Tok::Delim, ",")) {
                if (at(Tok::Delim, "}")) break;
                if (!accept(Tok::Op, "**")) {
                    expression();
                    expect(Tok::Delim, ":");
                }
                expression();
            }
            expect(Tok::Delim, "}");
            return;
        }
        expression();
        if (accept(Tok::Delim, ":")) {
            expression();
            if (at_kw("for") || at_kw("async")) {
                add("DictComp");
                comprehension_clauses();
                expect(Tok::Delim, "}");
                return;
            }
            add("Dict");
            while (accept(Tok::Delim, ",")) {
                if (at(Tok::Delim, "}")) break;
                if (accept(Tok::Op, "**")) {
                    expression();
                    continue;
                }
                expression();
                expect(Tok::Delim, ":");
                expression();
            }
            expect(Tok::Delim, "}");
            return;
        }
        if (at_kw("for") || at_kw("async")) {
            add("SetComp");
            comprehension_clauses();
            expect(Tok::Delim, "}");
            return;
        }
        add("Set");
        while (accept(Tok::Delim, ",")) {
            if (at(Tok::Delim, "}")) break;
            expression();
        }
        expect(Tok::Delim, "}");
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::set<std::string> types_;
};

// Parse `code` and return its node-type set. Throws ParseFailure.
inline std::set<std::string> node_type_set(const std::string& code) {
    Lexer lexer(code, /*lenient=*/false);
    std::vector<Token> tokens = lexer.run();
    bool has_content = false;
    for (const Token& tok : tokens) {
        if (tok.type != Tok::Newline && tok.type != Tok::Indent && tok.type != Tok::Dedent &&
            tok.type != Tok::End) {
            has_content = true;
            break;
        }
    }
    if (!has_content) throw ParseFailure("empty module: no statements to parse");
    Parser parser(std::move(tokens));
    return parser.parse_module();
}

// Token-class fallback: the set of lexical classes present in the source.
// Throws ParseFailure only when no token survives (empty/blank input).
inline std::set<std::string> token_class_set(const std::string& code) {
    Lexer lexer(code, /*lenient=*/true);
    std::set<std::string> out;
    for (const Token& tok : lexer.run()) {
        switch (tok.type) {
            case Tok::Ident: out.insert("identifier"); break;
            case Tok::Keyword: out.insert("keyword"); break;
            case Tok::Number: out.insert("number"); break;
            case Tok::Str: out.insert("string"); break;
            case Tok::Op: out.insert("operator"); break;
            case Tok::Delim: out.insert("delimiter"); break;
            default: break;
        }
    }
    if (out.empty()) throw ParseFailure("token classes: no tokens in input");
    return out;
}

}  // namespace concat::pyparse
