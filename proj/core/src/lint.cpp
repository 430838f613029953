#include "lasco/policy.hpp"

namespace lasco {

namespace {

enum class Kind { Bool, Num, Str, Set, Unknown };

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::Bool: return "boolean";
        case Kind::Num: return "number";
        case Kind::Str: return "string";
        case Kind::Set: return "set";
        default: return "unknown";
    }
}

Kind literal_kind(const Value& v) {
    if (v.is_bool()) return Kind::Bool;
    if (v.is_number()) return Kind::Num;
    if (v.is_string()) return Kind::Str;
    return Kind::Set;
}

bool kind_ok(Kind k, std::initializer_list<Kind> allowed) {
    if (k == Kind::Unknown) return true;
    for (Kind a : allowed)
        if (k == a) return true;
    return false;
}

struct Linter {
    const PolicyGraph& policy;
    std::vector<PolicyDiagnostic> diags;

    void error(const std::string& code, const std::string& element, std::string msg) {
        diags.push_back({Severity::Error, code, element, std::move(msg)});
    }
    void warning(const std::string& code, const std::string& element, std::string msg) {
        diags.push_back({Severity::Warning, code, element, std::move(msg)});
    }

    // Anchors: $v = E or E = $v with E variable-free, reachable from the
    // predicate root through && only.
    void collect_anchors(const PredPtr& p, std::set<std::string>& anchored) {
        if (p->op() == PredOp::And) {
            collect_anchors(p->lhs(), anchored);
            collect_anchors(p->rhs(), anchored);
            return;
        }
        if (p->op() != PredOp::Eq) return;
        auto side_anchor = [&](const PredPtr& var, const PredPtr& other) {
            if (var->op() == PredOp::VarName && !has_vars_side(other))
                anchored.insert(var->name());
        };
        side_anchor(p->lhs(), p->rhs());
        side_anchor(p->rhs(), p->lhs());
    }

    static bool has_vars_side(const PredPtr& p) {
        if (!p) return false;
        if (p->op() == PredOp::VarName) return true;
        return has_vars_side(p->lhs()) || has_vars_side(p->rhs());
    }

    Kind type_check(const PredPtr& p, const std::string& element) {
        switch (p->op()) {
            case PredOp::Literal:
                return literal_kind(p->value());
            case PredOp::AttrName:
            case PredOp::VarName:
                return Kind::Unknown;
            case PredOp::Not: {
                Kind k = type_check(p->lhs(), element);
                if (!kind_ok(k, {Kind::Bool}))
                    error("type-misuse", element,
                          "'!' applied to " + std::string(kind_name(k)) + " in '" +
                              render_predicate(p) + "'");
                return Kind::Bool;
            }
            default:
                break;
        }
        Kind l = type_check(p->lhs(), element);
        Kind r = type_check(p->rhs(), element);
        auto misuse = [&]() {
            error("type-misuse", element,
                  "operand types " + std::string(kind_name(l)) + " and " + kind_name(r) +
                      " invalid for '" + op_token(p->op()) + "' in '" + render_predicate(p) +
                      "'");
        };
        switch (p->op()) {
            case PredOp::And:
            case PredOp::Or:
                if (!kind_ok(l, {Kind::Bool}) || !kind_ok(r, {Kind::Bool})) misuse();
                if ((p->lhs()->op() == PredOp::And || p->lhs()->op() == PredOp::Or) &&
                    p->lhs()->op() != p->op() && !p->lhs()->from_parens())
                    warning("mixed-and-or", element,
                            "'&&' and '||' share a precedence level; parenthesize '" +
                                render_predicate(p->lhs()) + "'");
                if ((p->rhs()->op() == PredOp::And || p->rhs()->op() == PredOp::Or) &&
                    p->rhs()->op() != p->op() && !p->rhs()->from_parens())
                    warning("mixed-and-or", element,
                            "'&&' and '||' share a precedence level; parenthesize '" +
                                render_predicate(p->rhs()) + "'");
                return Kind::Bool;
            case PredOp::Eq:
            case PredOp::Ne:
                return Kind::Bool;  // cross-type equality is defined
            case PredOp::Lt:
            case PredOp::Gt:
            case PredOp::Le:
            case PredOp::Ge:
                if (!kind_ok(l, {Kind::Num, Kind::Str}) || !kind_ok(r, {Kind::Num, Kind::Str}) ||
                    (l != Kind::Unknown && r != Kind::Unknown && l != r))
                    misuse();
                return Kind::Bool;
            case PredOp::In:
                if (!kind_ok(l, {Kind::Bool, Kind::Num, Kind::Str}) || !kind_ok(r, {Kind::Set}))
                    misuse();
                return Kind::Bool;
            case PredOp::PCont:
            case PredOp::Cont:
                if (!kind_ok(l, {Kind::Set}) || !kind_ok(r, {Kind::Set})) misuse();
                return Kind::Bool;
            case PredOp::Union:
            case PredOp::Intersect:
                if (!kind_ok(l, {Kind::Set}) || !kind_ok(r, {Kind::Set})) misuse();
                return Kind::Set;
            default:  // arithmetic
                if (!kind_ok(l, {Kind::Num}) || !kind_ok(r, {Kind::Num})) misuse();
                return Kind::Num;
        }
    }

    void run() {
        std::set<std::string> anchored;
        for (const auto& [element, pred] : policy.domain) collect_anchors(pred, anchored);
        for (const auto& v : policy.vars) {
            if (!anchored.count(v))
                error("unanchored-variable", "",
                      "variable $" + v +
                          " has no conjunctive-position '$" + v +
                          " = <value>' anchor in any domain predicate");
        }
        for (const auto& n : policy.nodes) {
            if (contains_attr(policy.requirement_of(n)))
                error("attr-in-node-requirement", n,
                      "node requirement predicate references an attribute: '" +
                          render_predicate(policy.requirement_of(n)) + "'");
        }
        for (const auto& [element, pred] : policy.domain) type_check(pred, element);
        for (const auto& [element, pred] : policy.requirement) type_check(pred, element);
    }
};

}  // namespace

std::vector<PolicyDiagnostic> lint_policy(const PolicyGraph& p) {
    Linter l{p, {}};
    l.run();
    return l.diags;
}

}  // namespace lasco
