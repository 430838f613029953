#pragma once

#include <utility>
#include <vector>

#include "lasco/pred.hpp"
#include "lasco/value.hpp"

namespace lasco {

/// Collects non-fatal evaluation diagnostics (runtime type mismatches,
/// division by zero). Evaluation itself is total: such positions evaluate
/// like undefined attributes.
struct EvalLog {
    std::vector<std::string> warnings;
    void warn(std::string msg) { warnings.push_back(std::move(msg)); }
};

/// Variable bindings plus a residual condition expression constraining the
/// still-unbound variables. Kept reduced: bound variables never remain in
/// the condition, and top-level conjunctive `$v = literal` equalities are
/// always extracted into the bindings.
struct VarConditions {
    VarBindings bindings;
    PredPtr condition = true_expr();

    bool true_expr_p() const { return condition && condition->is_bool_literal(true); }
    bool false_expr_p() const { return condition && condition->is_bool_literal(false); }
};

VarConditions false_conditions();

bool operator==(const VarConditions& a, const VarConditions& b);

/// Replaces every variable leaf bound in `b` with its literal value.
PredPtr substitute_vars(const PredPtr& p, const VarBindings& b);

/// Replaces every attribute leaf present in `attrs` with its literal value;
/// attributes not in `attrs` are left in place (they read as undefined).
PredPtr substitute_attrs(const PredPtr& p, const AttrSet& attrs);

/// Constant folding: every subtree with all-literal operands collapses to
/// its value, in one depth-first postorder pass. A literal `true` operand of
/// `&&` is absorbed and a literal `true` operand of `||` wins (those two
/// rewrites preserve the undefined-operand semantics; others do not).
/// A subtree that is undefined no matter what (e.g. a literal type mismatch)
/// folds to `False` at the top.
PredPtr fold_constants(const PredPtr& p, EvalLog* log = nullptr);

/// True iff the condition expression contains any variable leaf.
bool has_vars(const PredPtr& c);

/// Whether a reduced condition expression might still be satisfiable.
bool may_be_sat(const PredPtr& c);

/// Collects `$v = literal` / `literal = $v` equalities in conjunctive
/// position (not beneath ||, !, or any non-&& operator), replacing each with
/// `True`. Conflicting extractions yield ({}, False).
std::pair<VarBindings, PredPtr> extract_bound(const PredPtr& p);

/// Fixpoint of substitute / fold / extract over the condition expression.
/// Inconsistent bindings or a false condition yield ({}, False).
VarConditions reduce_cond(const VarConditions& c, EvalLog* log = nullptr);

/// Conjunction of two variable conditions; ({}, False) when the bindings
/// disagree, otherwise reduced.
VarConditions merge_conds(const VarConditions& a, const VarConditions& b,
                          EvalLog* log = nullptr);
VarConditions merge_conds(const std::vector<VarConditions>& cs, EvalLog* log = nullptr);

/// The variable conditions under which predicate `p` evaluates to true given
/// attributes `attrs` and bindings `b`. An attribute missing from `attrs`
/// makes its closest enclosing boolean position undefined; undefinedness
/// propagates through every operator except `||`, where the other operand's
/// value survives. A runtime type mismatch behaves like an undefined
/// attribute and is reported through `log`.
VarConditions eval_pred(const PredPtr& p, const AttrSet& attrs, const VarBindings& b,
                        EvalLog* log = nullptr);

}  // namespace lasco
