#include "lasco/pred.hpp"

#include <cctype>
#include <sstream>

namespace lasco {

bool is_binary(PredOp op) {
    switch (op) {
        case PredOp::Literal:
        case PredOp::AttrName:
        case PredOp::VarName:
        case PredOp::Not:
            return false;
        default:
            return true;
    }
}

const char* op_token(PredOp op) {
    switch (op) {
        case PredOp::Not: return "!";
        case PredOp::And: return "&&";
        case PredOp::Or: return "||";
        case PredOp::Eq: return "=";
        case PredOp::Ne: return "!=";
        case PredOp::Lt: return "<";
        case PredOp::Gt: return ">";
        case PredOp::Le: return "<=";
        case PredOp::Ge: return ">=";
        case PredOp::In: return "in";
        case PredOp::PCont: return "pcont";
        case PredOp::Cont: return "cont";
        case PredOp::Union: return "union";
        case PredOp::Intersect: return "intersect";
        case PredOp::Add: return "+";
        case PredOp::Sub: return "-";
        case PredOp::Mul: return "*";
        case PredOp::Div: return "/";
        case PredOp::Mod: return "%";
        default: return "?";
    }
}

int op_level(PredOp op) {
    switch (op) {
        case PredOp::And:
        case PredOp::Or: return 1;
        case PredOp::Eq:
        case PredOp::Ne: return 2;
        case PredOp::Lt:
        case PredOp::Gt:
        case PredOp::Le:
        case PredOp::Ge: return 3;
        case PredOp::Union:
        case PredOp::Intersect: return 4;
        case PredOp::PCont:
        case PredOp::Cont: return 5;
        case PredOp::In: return 6;
        case PredOp::Add:
        case PredOp::Sub: return 7;
        case PredOp::Mul:
        case PredOp::Div:
        case PredOp::Mod: return 8;
        case PredOp::Not: return 9;
        default: return 100;  // leaves never need parentheses
    }
}

PredPtr PredExpr::literal(Value v) {
    return std::make_shared<PredExpr>(PredOp::Literal, std::move(v), "", nullptr, nullptr);
}

PredPtr PredExpr::attr(std::string name) {
    return std::make_shared<PredExpr>(PredOp::AttrName, Value(), std::move(name), nullptr,
                                      nullptr);
}

PredPtr PredExpr::var(std::string name) {
    return std::make_shared<PredExpr>(PredOp::VarName, Value(), std::move(name), nullptr,
                                      nullptr);
}

PredPtr PredExpr::negate(PredPtr p) {
    return std::make_shared<PredExpr>(PredOp::Not, Value(), "", std::move(p), nullptr);
}

PredPtr PredExpr::binary(PredOp op, PredPtr lhs, PredPtr rhs) {
    return std::make_shared<PredExpr>(op, Value(), "", std::move(lhs), std::move(rhs));
}

PredPtr true_expr() {
    static const PredPtr t = PredExpr::literal(Value(true));
    return t;
}

PredPtr false_expr() {
    static const PredPtr f = PredExpr::literal(Value(false));
    return f;
}

bool structurally_equal(const PredPtr& a, const PredPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->op() != b->op()) return false;
    switch (a->op()) {
        case PredOp::Literal: return a->value() == b->value();
        case PredOp::AttrName:
        case PredOp::VarName: return a->name() == b->name();
        case PredOp::Not: return structurally_equal(a->lhs(), b->lhs());
        default:
            return structurally_equal(a->lhs(), b->lhs()) &&
                   structurally_equal(a->rhs(), b->rhs());
    }
}

void collect_vars(const PredPtr& p, std::set<std::string>& out) {
    if (!p) return;
    if (p->op() == PredOp::VarName) out.insert(p->name());
    collect_vars(p->lhs(), out);
    collect_vars(p->rhs(), out);
}

void collect_attr_names(const PredPtr& p, std::set<std::string>& out) {
    if (!p) return;
    if (p->op() == PredOp::AttrName) out.insert(p->name());
    collect_attr_names(p->lhs(), out);
    collect_attr_names(p->rhs(), out);
}

bool contains_attr(const PredPtr& p) {
    if (!p) return false;
    if (p->op() == PredOp::AttrName) return true;
    return contains_attr(p->lhs()) || contains_attr(p->rhs());
}

namespace {

enum class Tok {
    End,
    Name,     // attribute reference
    Var,      // $name
    String,
    Number,
    Bool,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Op,       // binary operator (PredOp in `op`)
    Bang,
};

struct Token {
    Tok kind = Tok::End;
    PredOp op = PredOp::Literal;
    std::string text;
    Number num;
    bool boolean = false;
    int line = 1;
    int col = 1;
    size_t pos = 0;  // byte offset, for adjacency checks
};

class Lexer {
public:
    explicit Lexer(const std::string& s) : s_(s) { advance(); }

    const Token& peek() const { return cur_; }
    Token take() {
        Token t = cur_;
        advance();
        return t;
    }

private:
    void advance();
    bool starts_with(const char* p) const {
        return s_.compare(i_, std::char_traits<char>::length(p), p) == 0;
    }
    [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, line_, col_); }

    const std::string& s_;
    size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;
    Token cur_;
};

void Lexer::advance() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\n' ||
                              s_[i_] == '\r')) {
        if (s_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }
    cur_ = Token();
    cur_.line = line_;
    cur_.col = col_;
    cur_.pos = i_;
    if (i_ >= s_.size()) {
        cur_.kind = Tok::End;
        return;
    }
    char c = s_[i_];
    auto eat = [&](size_t n) {
        i_ += n;
        col_ += static_cast<int>(n);
    };
    auto op2 = [&](PredOp op, size_t n) {
        cur_.kind = Tok::Op;
        cur_.op = op;
        eat(n);
    };

    // Unicode aliases for the set/inequality operators.
    if (starts_with("\xE2\x88\x88")) { op2(PredOp::In, 3); return; }         // U+2208
    if (starts_with("\xE2\x8A\x82")) { op2(PredOp::PCont, 3); return; }      // U+2282
    if (starts_with("\xE2\x8A\x86")) { op2(PredOp::Cont, 3); return; }       // U+2286
    if (starts_with("\xE2\x88\xA9")) { op2(PredOp::Intersect, 3); return; }  // U+2229
    if (starts_with("\xE2\x88\xAA")) { op2(PredOp::Union, 3); return; }      // U+222A
    if (starts_with("\xE2\x89\xA0")) { op2(PredOp::Ne, 3); return; }         // U+2260

    switch (c) {
        case '(': cur_.kind = Tok::LParen; eat(1); return;
        case ')': cur_.kind = Tok::RParen; eat(1); return;
        case '{': cur_.kind = Tok::LBrace; eat(1); return;
        case '}': cur_.kind = Tok::RBrace; eat(1); return;
        case ',': cur_.kind = Tok::Comma; eat(1); return;
        case '&':
            if (starts_with("&&")) { op2(PredOp::And, 2); return; }
            fail("unknown operator token '&'");
        case '|':
            if (starts_with("||")) { op2(PredOp::Or, 2); return; }
            fail("unknown operator token '|'");
        case '=': op2(PredOp::Eq, 1); return;
        case '!':
            if (starts_with("!=")) { op2(PredOp::Ne, 2); return; }
            cur_.kind = Tok::Bang;
            eat(1);
            return;
        case '<':
            if (starts_with("<=")) { op2(PredOp::Le, 2); return; }
            op2(PredOp::Lt, 1);
            return;
        case '>':
            if (starts_with(">=")) { op2(PredOp::Ge, 2); return; }
            op2(PredOp::Gt, 1);
            return;
        case '+': op2(PredOp::Add, 1); return;
        case '-': op2(PredOp::Sub, 1); return;
        case '*': op2(PredOp::Mul, 1); return;
        case '/': op2(PredOp::Div, 1); return;
        case '%': op2(PredOp::Mod, 1); return;
        case '"': {
            size_t j = i_ + 1;
            while (j < s_.size() && s_[j] != '"' && s_[j] != '\n') ++j;
            if (j >= s_.size() || s_[j] != '"') fail("unterminated string");
            cur_.kind = Tok::String;
            cur_.text = s_.substr(i_ + 1, j - i_ - 1);
            eat(j - i_ + 1);
            return;
        }
        case '$': {
            size_t j = i_ + 1;
            while (j < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_'))
                ++j;
            if (j == i_ + 1) fail("expected variable name after '$'");
            cur_.kind = Tok::Var;
            cur_.text = s_.substr(i_ + 1, j - i_ - 1);
            eat(j - i_);
            return;
        }
        default: break;
    }

    if (std::isdigit(static_cast<unsigned char>(c))) {
        size_t j = i_;
        while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
        bool name_like = j < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[j])) ||
                                           s_[j] == '_');
        if (!name_like) {
            bool is_float = false;
            if (j + 1 < s_.size() && s_[j] == '.' &&
                std::isdigit(static_cast<unsigned char>(s_[j + 1]))) {
                is_float = true;
                ++j;
                while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
            }
            std::string text = s_.substr(i_, j - i_);
            cur_.kind = Tok::Number;
            cur_.num = is_float ? Number(std::stod(text))
                                : Number(static_cast<std::int64_t>(std::stoll(text)));
            eat(j - i_);
            return;
        }
        // fall through: digits followed by letters form a <name>
    }

    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
        size_t j = i_;
        while (j < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_'))
            ++j;
        std::string word = s_.substr(i_, j - i_);
        std::string lower;
        for (char w : word) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(w)));
        if (lower == "true" || lower == "false") {
            cur_.kind = Tok::Bool;
            cur_.boolean = (lower == "true");
            eat(j - i_);
            return;
        }
        if (lower == word) {  // word operators are lowercase only
            if (word == "in") { op2(PredOp::In, j - i_); return; }
            if (word == "pcont") { op2(PredOp::PCont, j - i_); return; }
            if (word == "cont") { op2(PredOp::Cont, j - i_); return; }
            if (word == "union") { op2(PredOp::Union, j - i_); return; }
            if (word == "intersect") { op2(PredOp::Intersect, j - i_); return; }
        }
        cur_.kind = Tok::Name;
        cur_.text = word;
        eat(j - i_);
        return;
    }
    fail(std::string("unknown operator token '") + c + "'");
}

class Parser {
public:
    explicit Parser(const std::string& text) : lex_(text) {}

    PredPtr parse() {
        PredPtr p = expr(1);
        const Token& t = lex_.peek();
        if (t.kind != Tok::End)
            throw ParseError("unexpected trailing input", t.line, t.col);
        return p;
    }

private:
    PredPtr expr(int min_level) {
        PredPtr lhs = unary();
        while (lex_.peek().kind == Tok::Op) {
            PredOp op = lex_.peek().op;
            int level = op_level(op);
            if (level < min_level) break;
            lex_.take();
            PredPtr rhs = expr(level + 1);
            lhs = PredExpr::binary(op, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    PredPtr unary() {
        if (lex_.peek().kind == Tok::Bang) {
            lex_.take();
            return PredExpr::negate(unary());
        }
        return primary();
    }

    Value scalar_literal() {
        Token t = lex_.peek();
        if (t.kind == Tok::String) {
            lex_.take();
            return Value(t.text);
        }
        if (t.kind == Tok::Bool) {
            lex_.take();
            return Value(t.boolean);
        }
        if (t.kind == Tok::Number) {
            lex_.take();
            return Value(t.num);
        }
        throw ParseError("expected literal", t.line, t.col);
    }

    PredPtr primary() {
        Token t = lex_.peek();
        switch (t.kind) {
            case Tok::LParen: {
                lex_.take();
                PredPtr inner = expr(1);
                const Token& r = lex_.peek();
                if (r.kind != Tok::RParen) throw ParseError("expected ')'", r.line, r.col);
                lex_.take();
                inner->mark_from_parens();
                return inner;
            }
            case Tok::String:
            case Tok::Bool:
                return PredExpr::literal(scalar_literal());
            case Tok::Number:
                return PredExpr::literal(scalar_literal());
            case Tok::Var:
                lex_.take();
                return PredExpr::var(t.text);
            case Tok::Name:
                lex_.take();
                return PredExpr::attr(t.text);
            case Tok::LBrace: {
                lex_.take();
                ScalarSet set;
                if (lex_.peek().kind == Tok::RBrace) {
                    lex_.take();
                    return PredExpr::literal(Value(std::move(set)));
                }
                while (true) {
                    set.insert(negative_aware_literal().as_scalar());
                    const Token& n = lex_.peek();
                    if (n.kind == Tok::Comma) {
                        lex_.take();
                        continue;
                    }
                    if (n.kind == Tok::RBrace) {
                        lex_.take();
                        break;
                    }
                    throw ParseError("expected ',' or '}' in set literal", n.line, n.col);
                }
                return PredExpr::literal(Value(std::move(set)));
            }
            case Tok::Op:
                if (t.op == PredOp::Sub) {
                    return PredExpr::literal(negative_aware_literal());
                }
                [[fallthrough]];
            default:
                throw ParseError("expected expression", t.line, t.col);
        }
    }

    // A scalar literal, allowing a '-' sign glued to a number.
    Value negative_aware_literal() {
        Token t = lex_.peek();
        if (t.kind == Tok::Op && t.op == PredOp::Sub) {
            Token minus = lex_.take();
            const Token& n = lex_.peek();
            if (n.kind != Tok::Number || n.pos != minus.pos + 1)
                throw ParseError("expected number after '-'", minus.line, minus.col);
            Token num = lex_.take();
            return Value(Number(0) - num.num);
        }
        return scalar_literal();
    }

    Lexer lex_;
};

}  // namespace

PredPtr parse_predicate(const std::string& text) { return Parser(text).parse(); }

namespace {

// Rendering level of a node: leaves never need parentheses.
int render_level(const PredPtr& p) { return op_level(p->op()); }

void render(const PredPtr& p, std::ostringstream& out) {
    switch (p->op()) {
        case PredOp::Literal:
            out << p->value().str();
            return;
        case PredOp::AttrName:
            out << p->name();
            return;
        case PredOp::VarName:
            out << "$" << p->name();
            return;
        case PredOp::Not: {
            out << "!";
            bool parens = render_level(p->lhs()) < op_level(PredOp::Not);
            if (parens) out << "(";
            render(p->lhs(), out);
            if (parens) out << ")";
            return;
        }
        default: {
            int level = op_level(p->op());
            bool lp = render_level(p->lhs()) < level;
            bool rp = render_level(p->rhs()) <= level;
            if (lp) out << "(";
            render(p->lhs(), out);
            if (lp) out << ")";
            if (p->op() == PredOp::Eq)
                out << "=";
            else
                out << " " << op_token(p->op()) << " ";
            if (rp) out << "(";
            render(p->rhs(), out);
            if (rp) out << ")";
            return;
        }
    }
}

}  // namespace

std::string render_predicate(const PredPtr& p) {
    std::ostringstream out;
    render(p, out);
    return out.str();
}

}  // namespace lasco
