#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "lasco/value.hpp"

namespace lasco {

/// Predicate expression operators. `Literal`, `AttrName`, and `VarName` are
/// leaves; `Not` is unary; everything else is binary. Parenthesized source
/// text is normalized away at parse time (grouping lives in the tree shape),
/// so render/parse round trips are structure-preserving.
enum class PredOp {
    Literal,
    AttrName,
    VarName,
    Not,
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    In,
    PCont,   // proper subset
    Cont,    // subset
    Union,
    Intersect,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
};

bool is_binary(PredOp op);
const char* op_token(PredOp op);

/// Precedence level, loosest (1) to tightest. Binary operators are
/// left-associative; `!` binds tightest and is right-associative.
int op_level(PredOp op);

class PredExpr;
using PredPtr = std::shared_ptr<const PredExpr>;

class PredExpr {
public:
    static PredPtr literal(Value v);
    static PredPtr attr(std::string name);
    static PredPtr var(std::string name);
    static PredPtr negate(PredPtr p);
    static PredPtr binary(PredOp op, PredPtr lhs, PredPtr rhs);

    PredOp op() const { return op_; }
    const Value& value() const { return value_; }
    const std::string& name() const { return name_; }
    const PredPtr& lhs() const { return lhs_; }
    const PredPtr& rhs() const { return rhs_; }

    bool is_literal() const { return op_ == PredOp::Literal; }
    bool is_bool_literal(bool b) const {
        return is_literal() && value_.is_bool() && value_.as_bool() == b;
    }

    /// Set when the source text wrapped this subexpression in parentheses.
    /// Advisory only: ignored by structural equality and by rendering.
    bool from_parens() const { return from_parens_; }
    void mark_from_parens() const { from_parens_ = true; }

    PredExpr(PredOp op, Value v, std::string name, PredPtr lhs, PredPtr rhs)
        : op_(op), value_(std::move(v)), name_(std::move(name)),
          lhs_(std::move(lhs)), rhs_(std::move(rhs)) {}

private:
    PredOp op_;
    Value value_;
    std::string name_;
    PredPtr lhs_, rhs_;
    mutable bool from_parens_ = false;
};

PredPtr true_expr();
PredPtr false_expr();

bool structurally_equal(const PredPtr& a, const PredPtr& b);

/// Collects every variable name appearing in the expression.
void collect_vars(const PredPtr& p, std::set<std::string>& out);
/// Collects every attribute name appearing in the expression.
void collect_attr_names(const PredPtr& p, std::set<std::string>& out);
bool contains_attr(const PredPtr& p);

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, int line, int col)
        : std::runtime_error(msg + " at line " + std::to_string(line) + ", column " +
                             std::to_string(col)),
          line(line), col(col) {}
    int line;
    int col;
};

/// Parses predicate text (operator table of the language plus the
/// `{lit, lit, ...}` set-literal extension). Unicode operator aliases
/// are accepted on input and never produced on output.
PredPtr parse_predicate(const std::string& text);

/// Renders a predicate with minimal parentheses; the output re-parses to a
/// structurally identical tree.
std::string render_predicate(const PredPtr& p);

}  // namespace lasco
