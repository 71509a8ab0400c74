/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "aggline/predicate_expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <vector>

#include "aggline/errors.hpp"

namespace aggline {

namespace {

enum class Tok { word, number, text, op, lparen, rparen, comma, end };

struct Token {
    Tok kind;
    std::string text;
    double number = 0.0;
    std::size_t pos = 0;
};

bool is_word_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::toupper(static_cast<unsigned char>(a[i])) != std::toupper(static_cast<unsigned char>(b[i]))) {
            return false;
        }
    }
    return true;
}

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (c == '(' || c == ')' || c == ',') {
            out.push_back({c == '(' ? Tok::lparen : c == ')' ? Tok::rparen : Tok::comma, std::string(1, c), 0.0, start});
            ++i;
        } else if (c == '\'' || c == '"') {
            std::string text;
            ++i;
            for (;;) {
                if (i >= s.size()) throw ParseError("unterminated string literal", start);
                if (s[i] == c) {
                    if (i + 1 < s.size() && s[i + 1] == c) {
                        text += c;
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                text += s[i++];
            }
            out.push_back({Tok::text, std::move(text), 0.0, start});
        } else if (c == '=' || c == '<' || c == '>' || c == '!') {
            std::string op(1, c);
            if (i + 1 < s.size() && (s[i + 1] == '=' || (c == '<' && s[i + 1] == '>'))) op += s[i + 1];
            i += op.size();
            if (op == "!") throw ParseError("expected '!='", start);
            if (op == "<>") op = "!=";
            if (op == "==") op = "=";
            out.push_back({Tok::op, std::move(op), 0.0, start});
        } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
            std::size_t j = i + 1;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '.' ||
                                    ((s[j] == '-' || s[j] == '+') && (s[j - 1] == 'e' || s[j - 1] == 'E')))) {
                ++j;
            }
            std::string_view lit = s.substr(i, j - i);
            if (!lit.empty() && lit.front() == '+') lit.remove_prefix(1);
            double value = 0.0;
            auto [ptr, ec] = std::from_chars(lit.data(), lit.data() + lit.size(), value);
            if (ec != std::errc{} || ptr != lit.data() + lit.size() || !std::isfinite(value)) {
                throw ParseError("malformed number '" + std::string(s.substr(i, j - i)) + "'", start);
            }
            out.push_back({Tok::number, std::string(s.substr(i, j - i)), value, start});
            i = j;
        } else if (is_word_start(c)) {
            std::size_t j = i + 1;
            while (j < s.size() && is_word_char(s[j])) ++j;
            out.push_back({Tok::word, std::string(s.substr(i, j - i)), 0.0, start});
            i = j;
        } else {
            throw ParseError(std::string("unexpected character '") + c + "'", start);
        }
    }
    out.push_back({Tok::end, "", 0.0, s.size()});
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    Predicate parse() {
        Predicate p;
        if (peek().kind == Tok::word && iequals(peek().text, "true") && toks_[pos_ + 1].kind == Tok::end) {
            return p;
        }
        p.clauses.push_back(clause());
        while (keyword("AND")) p.clauses.push_back(clause());
        if (peek().kind != Tok::end) fail("expected AND or end of expression");
        return p;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(message, peek().pos);
    }

    bool keyword(std::string_view kw) {
        if (peek().kind == Tok::word && iequals(peek().text, kw)) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool is_keyword(const Token& t) const {
        return t.kind == Tok::word &&
               (iequals(t.text, "AND") || iequals(t.text, "IN") || iequals(t.text, "BETWEEN"));
    }

    Value literal() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::number: ++pos_; return t.number;
            case Tok::text: ++pos_; return t.text;
            case Tok::word:
                if (is_keyword(t)) fail("expected a literal");
                ++pos_;
                return t.text;
            default: fail("expected a literal");
        }
    }

    Clause clause() {
        if (peek().kind != Tok::word || is_keyword(peek())) fail("expected an attribute name");
        Clause c;
        c.attribute = next().text;
        if (keyword("IN")) {
            c.op = Comparator::in_set;
            if (peek().kind != Tok::lparen) fail("expected '('");
            ++pos_;
            c.operands.push_back(literal());
            while (peek().kind == Tok::comma) {
                ++pos_;
                c.operands.push_back(literal());
            }
            if (peek().kind != Tok::rparen) fail("expected ',' or ')'");
            ++pos_;
            return c;
        }
        if (keyword("BETWEEN")) {
            c.op = Comparator::in_range;
            c.operands.push_back(literal());
            if (!keyword("AND")) fail("expected AND in BETWEEN");
            c.operands.push_back(literal());
            return c;
        }
        if (peek().kind != Tok::op) fail("expected a comparison operator");
        const auto& op = next().text;
        if (op == "=") c.op = Comparator::eq;
        else if (op == "!=") c.op = Comparator::ne;
        else if (op == "<") c.op = Comparator::lt;
        else if (op == "<=") c.op = Comparator::le;
        else if (op == ">") c.op = Comparator::gt;
        else c.op = Comparator::ge;
        c.operands.push_back(literal());
        return c;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

}  // namespace

Predicate parse_predicate(std::string_view text) {
    return Parser(tokenize(text)).parse();
}

}  // namespace aggline
