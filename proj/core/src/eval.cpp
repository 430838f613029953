#include "lasco/eval.hpp"

#include <algorithm>

namespace lasco {

VarConditions false_conditions() { return VarConditions{{}, false_expr()}; }

bool operator==(const VarConditions& a, const VarConditions& b) {
    return a.bindings == b.bindings && structurally_equal(a.condition, b.condition);
}

PredPtr substitute_vars(const PredPtr& p, const VarBindings& b) {
    if (!p || b.empty()) return p;
    switch (p->op()) {
        case PredOp::VarName: {
            auto it = b.find(p->name());
            return it == b.end() ? p : PredExpr::literal(it->second);
        }
        case PredOp::Literal:
        case PredOp::AttrName:
            return p;
        case PredOp::Not: {
            PredPtr c = substitute_vars(p->lhs(), b);
            return c == p->lhs() ? p : PredExpr::negate(std::move(c));
        }
        default: {
            PredPtr l = substitute_vars(p->lhs(), b);
            PredPtr r = substitute_vars(p->rhs(), b);
            if (l == p->lhs() && r == p->rhs()) return p;
            return PredExpr::binary(p->op(), std::move(l), std::move(r));
        }
    }
}

PredPtr substitute_attrs(const PredPtr& p, const AttrSet& attrs) {
    if (!p) return p;
    switch (p->op()) {
        case PredOp::AttrName: {
            auto it = attrs.find(p->name());
            return it == attrs.end() ? p : PredExpr::literal(it->second);
        }
        case PredOp::Literal:
        case PredOp::VarName:
            return p;
        case PredOp::Not: {
            PredPtr c = substitute_attrs(p->lhs(), attrs);
            return c == p->lhs() ? p : PredExpr::negate(std::move(c));
        }
        default: {
            PredPtr l = substitute_attrs(p->lhs(), attrs);
            PredPtr r = substitute_attrs(p->rhs(), attrs);
            if (l == p->lhs() && r == p->rhs()) return p;
            return PredExpr::binary(p->op(), std::move(l), std::move(r));
        }
    }
}

namespace {

std::optional<Value> apply_op(PredOp op, const Value& a, const Value& b) {
    switch (op) {
        case PredOp::Eq:
            return Value(a == b);
        case PredOp::Ne:
            return Value(!(a == b));
        case PredOp::Lt:
        case PredOp::Gt:
        case PredOp::Le:
        case PredOp::Ge: {
            int cmp;
            if (a.is_number() && b.is_number()) {
                const Number &x = a.as_number(), &y = b.as_number();
                cmp = x == y ? 0 : (x < y ? -1 : 1);
            } else if (a.is_string() && b.is_string()) {
                cmp = a.as_string().compare(b.as_string());
                cmp = cmp < 0 ? -1 : (cmp > 0 ? 1 : 0);
            } else {
                return std::nullopt;
            }
            switch (op) {
                case PredOp::Lt: return Value(cmp < 0);
                case PredOp::Gt: return Value(cmp > 0);
                case PredOp::Le: return Value(cmp <= 0);
                default: return Value(cmp >= 0);
            }
        }
        case PredOp::In: {
            if (!a.is_scalar() || !b.is_set()) return std::nullopt;
            return Value(b.as_set().count(a.as_scalar()) > 0);
        }
        case PredOp::PCont:
        case PredOp::Cont: {
            if (!a.is_set() || !b.is_set()) return std::nullopt;
            const auto &x = a.as_set(), &y = b.as_set();
            bool subset = std::all_of(x.begin(), x.end(),
                                      [&](const Scalar& s) { return y.count(s) > 0; });
            if (op == PredOp::Cont) return Value(subset);
            return Value(subset && x.size() < y.size());
        }
        case PredOp::Union:
        case PredOp::Intersect: {
            if (!a.is_set() || !b.is_set()) return std::nullopt;
            ScalarSet out;
            if (op == PredOp::Union) {
                out = a.as_set();
                out.insert(b.as_set().begin(), b.as_set().end());
            } else {
                for (const auto& s : a.as_set())
                    if (b.as_set().count(s)) out.insert(s);
            }
            return Value(std::move(out));
        }
        case PredOp::Add:
        case PredOp::Sub:
        case PredOp::Mul:
        case PredOp::Div:
        case PredOp::Mod: {
            if (!a.is_number() || !b.is_number()) return std::nullopt;
            const Number &x = a.as_number(), &y = b.as_number();
            switch (op) {
                case PredOp::Add: return Value(x + y);
                case PredOp::Sub: return Value(x - y);
                case PredOp::Mul: return Value(x * y);
                case PredOp::Div: {
                    auto r = x.div(y);
                    if (!r) return std::nullopt;
                    return Value(*r);
                }
                default: {
                    auto r = x.mod(y);
                    if (!r) return std::nullopt;
                    return Value(*r);
                }
            }
        }
        case PredOp::And:
        case PredOp::Or: {
            if (!a.is_bool() || !b.is_bool()) return std::nullopt;
            bool r = op == PredOp::And ? (a.as_bool() && b.as_bool())
                                       : (a.as_bool() || b.as_bool());
            return Value(r);
        }
        default:
            return std::nullopt;
    }
}

void warn_mismatch(EvalLog* log, const PredPtr& p) {
    if (log) log->warn("type mismatch in '" + render_predicate(p) + "'");
}

// Folds a tree in which remaining attribute leaves are undefined when
// `attrs_undefined` is set (the evaluation pipeline) or opaque residual
// leaves otherwise (public constant folding). Returns nullptr for a subtree
// whose value is the undefined marker.
PredPtr fold_impl(const PredPtr& p, bool attrs_undefined, EvalLog* log) {
    switch (p->op()) {
        case PredOp::Literal:
        case PredOp::VarName:
            return p;
        case PredOp::AttrName:
            return attrs_undefined ? nullptr : p;
        case PredOp::Not: {
            PredPtr c = fold_impl(p->lhs(), attrs_undefined, log);
            if (!c) return nullptr;
            if (c->is_literal()) {
                if (!c->value().is_bool()) {
                    warn_mismatch(log, p);
                    return nullptr;
                }
                return c->value().as_bool() ? false_expr() : true_expr();
            }
            return c == p->lhs() ? p : PredExpr::negate(std::move(c));
        }
        case PredOp::Or: {
            PredPtr l = fold_impl(p->lhs(), attrs_undefined, log);
            PredPtr r = fold_impl(p->rhs(), attrs_undefined, log);
            if (!l) return r;  // the other operand's value survives
            if (!r) return l;
            if (l->is_literal() && r->is_literal()) {
                auto v = apply_op(PredOp::Or, l->value(), r->value());
                if (!v) {
                    warn_mismatch(log, p);
                    return nullptr;
                }
                return PredExpr::literal(*v);
            }
            // `True || x` and `x || True` are True for every outcome of x,
            // including undefined.
            if (l->is_bool_literal(true) || r->is_bool_literal(true)) return true_expr();
            if (l == p->lhs() && r == p->rhs()) return p;
            return PredExpr::binary(PredOp::Or, std::move(l), std::move(r));
        }
        case PredOp::And: {
            PredPtr l = fold_impl(p->lhs(), attrs_undefined, log);
            PredPtr r = fold_impl(p->rhs(), attrs_undefined, log);
            if (!l || !r) return nullptr;
            if (l->is_literal() && r->is_literal()) {
                auto v = apply_op(PredOp::And, l->value(), r->value());
                if (!v) {
                    warn_mismatch(log, p);
                    return nullptr;
                }
                return PredExpr::literal(*v);
            }
            // `True && x` is x for every outcome of x; a False operand is
            // NOT absorbed, since that would mask an undefined other side.
            if (l->is_bool_literal(true)) return r;
            if (r->is_bool_literal(true)) return l;
            if (l == p->lhs() && r == p->rhs()) return p;
            return PredExpr::binary(PredOp::And, std::move(l), std::move(r));
        }
        default: {
            PredPtr l = fold_impl(p->lhs(), attrs_undefined, log);
            if (!l) return nullptr;
            PredPtr r = fold_impl(p->rhs(), attrs_undefined, log);
            if (!r) return nullptr;
            if (l->is_literal() && r->is_literal()) {
                auto v = apply_op(p->op(), l->value(), r->value());
                if (!v) {
                    warn_mismatch(log, p);
                    return nullptr;
                }
                return PredExpr::literal(*v);
            }
            if (l == p->lhs() && r == p->rhs()) return p;
            return PredExpr::binary(p->op(), std::move(l), std::move(r));
        }
    }
}

}  // namespace

PredPtr fold_constants(const PredPtr& p, EvalLog* log) {
    PredPtr r = fold_impl(p, /*attrs_undefined=*/false, log);
    return r ? r : false_expr();
}

bool has_vars(const PredPtr& c) {
    if (!c) return false;
    if (c->op() == PredOp::VarName) return true;
    return has_vars(c->lhs()) || has_vars(c->rhs());
}

bool may_be_sat(const PredPtr& c) {
    return has_vars(c) || (c && c->is_bool_literal(true));
}

namespace {

bool extract_walk(const PredPtr& p, VarBindings& out, PredPtr& rewritten, bool& conflict) {
    if (p->op() == PredOp::And) {
        PredPtr l = p->lhs(), r = p->rhs();
        PredPtr nl, nr;
        bool cl = extract_walk(l, out, nl, conflict);
        bool cr = extract_walk(r, out, nr, conflict);
        if (!cl && !cr) {
            rewritten = p;
            return false;
        }
        rewritten = PredExpr::binary(PredOp::And, cl ? nl : l, cr ? nr : r);
        return true;
    }
    if (p->op() == PredOp::Eq) {
        const PredPtr &a = p->lhs(), &b = p->rhs();
        const PredPtr* var = nullptr;
        const PredPtr* lit = nullptr;
        if (a->op() == PredOp::VarName && b->op() == PredOp::Literal) {
            var = &a;
            lit = &b;
        } else if (b->op() == PredOp::VarName && a->op() == PredOp::Literal) {
            var = &b;
            lit = &a;
        }
        if (var) {
            auto [it, inserted] = out.emplace((*var)->name(), (*lit)->value());
            if (!inserted && !(it->second == (*lit)->value())) conflict = true;
            rewritten = true_expr();
            return true;
        }
    }
    rewritten = p;
    return false;
}

}  // namespace

std::pair<VarBindings, PredPtr> extract_bound(const PredPtr& p) {
    VarBindings out;
    PredPtr rewritten;
    bool conflict = false;
    bool changed = extract_walk(p, out, rewritten, conflict);
    if (conflict) return {VarBindings{}, false_expr()};
    return {std::move(out), changed ? rewritten : p};
}

namespace {

// A literal False conjunct anywhere on the && spine makes the whole
// condition unsatisfiable. (Inside the spine this is only a top-level
// satisfiability statement, which is all a condition expression is for.)
bool conjunctively_false(const PredPtr& p) {
    if (p->is_bool_literal(false)) return true;
    if (p->op() != PredOp::And) return false;
    return conjunctively_false(p->lhs()) || conjunctively_false(p->rhs());
}

}  // namespace

VarConditions reduce_cond(const VarConditions& c, EvalLog* log) {
    VarBindings bindings = c.bindings;
    PredPtr cond = c.condition;
    while (true) {
        cond = substitute_vars(cond, bindings);
        cond = fold_impl(cond, /*attrs_undefined=*/true, log);
        if (!cond || conjunctively_false(cond)) return false_conditions();
        auto [extracted, rest] = extract_bound(cond);
        // cond is not literal False here, so a False remainder means the
        // extraction found conflicting values for one variable.
        if (rest->is_bool_literal(false)) return false_conditions();
        if (extracted.empty()) return VarConditions{std::move(bindings), cond};
        if (!consistent(bindings, extracted)) return false_conditions();
        bindings = map_combine(bindings, extracted);
        cond = rest;
    }
}

VarConditions merge_conds(const VarConditions& a, const VarConditions& b, EvalLog* log) {
    if (!consistent(a.bindings, b.bindings)) return false_conditions();
    VarConditions merged;
    merged.bindings = map_combine(a.bindings, b.bindings);
    if (a.condition->is_bool_literal(true))
        merged.condition = b.condition;
    else if (b.condition->is_bool_literal(true))
        merged.condition = a.condition;
    else
        merged.condition = PredExpr::binary(PredOp::And, a.condition, b.condition);
    return reduce_cond(merged, log);
}

VarConditions merge_conds(const std::vector<VarConditions>& cs, EvalLog* log) {
    VarConditions acc;
    for (const auto& c : cs) acc = merge_conds(acc, c, log);
    return acc;
}

VarConditions eval_pred(const PredPtr& p, const AttrSet& attrs, const VarBindings& b,
                        EvalLog* log) {
    PredPtr q = substitute_vars(p, b);
    q = substitute_attrs(q, attrs);
    PredPtr folded = fold_impl(q, /*attrs_undefined=*/true, log);
    if (!folded || folded->is_bool_literal(false)) return VarConditions{b, false_expr()};
    if (folded->is_literal()) {
        if (!folded->value().is_bool()) {
            warn_mismatch(log, folded);
            return VarConditions{b, false_expr()};
        }
        return VarConditions{b, true_expr()};
    }
    VarConditions reduced = reduce_cond(VarConditions{{}, folded}, log);
    if (reduced.false_expr_p()) return VarConditions{b, false_expr()};
    if (!consistent(reduced.bindings, b)) return VarConditions{b, false_expr()};
    return VarConditions{map_combine(b, reduced.bindings), reduced.condition};
}

}  // namespace lasco
