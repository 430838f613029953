#include "doctest.h"

#include <random>

#include "lasco/eval.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"

using namespace lasco;

namespace {

PredPtr P(const std::string& s) { return parse_predicate(s); }

std::string cond_str(const VarConditions& c) { return render_predicate(c.condition); }

}  // namespace

TEST_CASE("substitute_vars") {
    PredPtr p = P("$A != $R");
    PredPtr s = substitute_vars(p, {{"A", Value("team1")}});
    CHECK(render_predicate(s) == "\"team1\" != $R");
    // empty bindings are the identity (same tree, not just equal)
    CHECK(substitute_vars(p, {}) == p);
    PredPtr nd1 = P("class=\"user\" && team=$R");
    CHECK(render_predicate(substitute_vars(nd1, {{"R", Value("team1")}})) ==
          "class=\"user\" && team=\"team1\"");
}

TEST_CASE("fold_constants") {
    CHECK(fold_constants(P("\"team1\" != \"team1\""))->is_bool_literal(false));
    CHECK(fold_constants(P("4 > 1"))->is_bool_literal(true));
    CHECK(render_predicate(fold_constants(P("(\"a\" in {\"a\",\"b\"}) && $x=1"))) == "$x=1");
    CHECK(render_predicate(fold_constants(P("attrA = 3 + 4"))) == "attrA=7");
    CHECK(fold_constants(P("{1,2} cont {1,2,3}"))->is_bool_literal(true));
    CHECK(fold_constants(P("{1,2} pcont {1,2}"))->is_bool_literal(false));
    CHECK(fold_constants(P("{1} union {2} = {2,1}"))->is_bool_literal(true));
    CHECK(fold_constants(P("\"abc\" < \"b\""))->is_bool_literal(true));
    CHECK(fold_constants(P("1 = 1.0"))->is_bool_literal(true));
    // type mismatch at the top folds to False, with a warning
    EvalLog log;
    CHECK(fold_constants(P("3 < \"x\""), &log)->is_bool_literal(false));
    CHECK(log.warnings.size() == 1);
    CHECK(fold_constants(P("1 / 0"), nullptr)->is_bool_literal(false));
}

TEST_CASE("has_vars and may_be_sat") {
    CHECK(has_vars(P("$x > 17")));
    CHECK(!has_vars(P("True")));
    CHECK(has_vars(P("($x > 1) && (2 < 3)")));  // any-leaf semantics
    CHECK(!may_be_sat(false_expr()));
    CHECK(may_be_sat(true_expr()));
    CHECK(may_be_sat(P("$B != \"user\"")));
}

TEST_CASE("extract_bound takes conjunctive positions only") {
    auto [b1, r1] = extract_bound(P("($A = 4) && ($B != \"user\")"));
    CHECK(b1 == VarBindings{{"A", Value(4)}});
    CHECK(render_predicate(r1) == "True && $B != \"user\"");

    auto [b2, r2] = extract_bound(true_expr());
    CHECK(b2.empty());
    CHECK(r2->is_bool_literal(true));

    // not extracted beneath ||
    PredPtr dis = P("$x=3 || $x=4");
    auto [b3, r3] = extract_bound(dis);
    CHECK(b3.empty());
    CHECK(r3 == dis);

    // not extracted beneath !
    auto [b4, r4] = extract_bound(P("!($x=3)"));
    CHECK(b4.empty());

    // literal = var orientation
    auto [b5, r5] = extract_bound(P("4 = $A"));
    CHECK(b5 == VarBindings{{"A", Value(4)}});

    // conflicting extraction
    auto [b6, r6] = extract_bound(P("$A=4 && $A=5"));
    CHECK(b6.empty());
    CHECK(r6->is_bool_literal(false));
}

TEST_CASE("reduce_cond reaches a fixpoint") {
    VarConditions c1{{}, P("($A=4) && ($A>1)")};
    VarConditions r1 = reduce_cond(c1);
    CHECK(r1.bindings == VarBindings{{"A", Value(4)}});
    CHECK(r1.true_expr_p());

    VarConditions c2{{{"A", Value(4)}}, true_expr()};
    CHECK(reduce_cond(c2) == c2);

    VarConditions c3{{}, P("($A=4) && ($A=5)")};
    CHECK(reduce_cond(c3) == false_conditions());

    // chained extraction: $A=4 enables folding $B's anchor
    VarConditions c4{{}, P("$A=4 && $B=$A+1")};
    VarConditions r4 = reduce_cond(c4);
    CHECK(r4.bindings.at("A") == Value(4));
    CHECK(r4.bindings.at("B") == Value(5));
    CHECK(r4.true_expr_p());
}

TEST_CASE("merge_conds: worked example and algebra") {
    // the worked merge from the variable-conditions section
    VarConditions c1{{{"A", Value(4)}}, P("$B != \"user\"")};
    VarConditions c2{{}, P("$A > 1")};
    VarConditions m = merge_conds(c1, c2);
    CHECK(m.bindings == VarBindings{{"A", Value(4)}});
    CHECK(cond_str(m) == "$B != \"user\"");

    // inconsistent bindings
    VarConditions a{{{"A", Value(4)}}, true_expr()};
    VarConditions b{{{"A", Value(5)}}, true_expr()};
    CHECK(merge_conds(a, b) == false_conditions());

    // identity element
    VarConditions id{{}, true_expr()};
    CHECK(merge_conds(c1, id) == reduce_cond(c1));
    CHECK(merge_conds(id, c1) == reduce_cond(c1));

    // absorbing element
    CHECK(merge_conds(c1, false_conditions()) == false_conditions());

    // commutative on this pair
    CHECK(merge_conds(c1, c2) == merge_conds(c2, c1));

    // n-ary form folds left
    CHECK(merge_conds({c1, c2, id}) == m);
}

TEST_CASE("eval_pred: undefined attribute kills the conjunction") {
    PredPtr nd1 = P("class=\"user\" && team=$R");
    VarBindings b{{"R", Value("team1")}};
    VarConditions r = eval_pred(nd1, {{"class", Value("user")}}, b);
    CHECK(r.bindings == b);  // result carries the given bindings
    CHECK(r.false_expr_p());
}

TEST_CASE("eval_pred: extraction produces bindings") {
    VarConditions r = eval_pred(P("type=\"file\" && owner=$U"),
                                {{"type", Value("file")}, {"owner", Value("bill")}}, {});
    CHECK(r.bindings == VarBindings{{"U", Value("bill")}});
    CHECK(r.true_expr_p());

    VarConditions r2 = eval_pred(P("$X = attrA"), {{"attrA", Value(7)}}, {});
    CHECK(r2.bindings == VarBindings{{"X", Value(7)}});
    CHECK(r2.true_expr_p());
}

TEST_CASE("eval_pred: || rescues an undefined side") {
    AttrSet attrs{{"present", Value(1)}};
    CHECK(eval_pred(P("missing=1 || present=1"), attrs, {}).true_expr_p());
    CHECK(eval_pred(P("present=1 || missing=1"), attrs, {}).true_expr_p());
    CHECK(eval_pred(P("missing=1 || other=2"), attrs, {}).false_expr_p());
    // but not through ! or &&
    CHECK(eval_pred(P("!(missing=1)"), attrs, {}).false_expr_p());
    CHECK(eval_pred(P("present=1 && missing=1"), attrs, {}).false_expr_p());
}

TEST_CASE("eval_pred: type mismatch behaves like undefined, with warning") {
    EvalLog log;
    AttrSet attrs{{"n", Value(3)}, {"s", Value("x")}};
    CHECK(eval_pred(P("n < s"), attrs, {}, &log).false_expr_p());
    CHECK(!log.warnings.empty());
    // rescue applies to mismatches too
    CHECK(eval_pred(P("n < s || n = 3"), attrs, {}).true_expr_p());
}

TEST_CASE("eval_pred: totality on random inputs against the sp oracle") {
    std::vector<std::string> names{"a", "b", "c", "d"};
    testing::Rng rng(1234);
    for (int i = 0; i < 300; ++i) {
        PredPtr p = testing::random_simple_predicate(rng, names);
        AttrSet attrs = testing::random_attr_set(rng, names);
        VarConditions r = eval_pred(p, attrs, {});
        auto expected = testing::sp_eval(p, attrs);
        bool expected_true = expected && expected->is_bool() && expected->as_bool();
        CAPTURE(render_predicate(p));
        CHECK(r.true_expr_p() == expected_true);
        CHECK(r.false_expr_p() == !expected_true);
    }
}

TEST_CASE("reduction preserves satisfying assignments") {
    // enumerate small value universes; satisfaction must be identical
    // before and after reduce_cond
    std::vector<Value> universe{Value(0), Value(1), Value(2), Value("u")};
    const char* conds[] = {
        "$A=1 && $B>0",
        "($A=1 || $A=2) && $B != 1",
        "$A=$B && $A=2",
        "!($A=1) && $B=0",
        "$A>0 && $A=2 && ($B=1 || $B=2)",
    };
    for (const char* text : conds) {
        PredPtr c = parse_predicate(text);
        VarConditions reduced = reduce_cond(VarConditions{{}, c});
        for (const Value& va : universe) {
            for (const Value& vb : universe) {
                VarBindings assign{{"A", va}, {"B", vb}};
                bool before = testing::sp_holds(c, {}, assign);
                bool after = consistent(assign, reduced.bindings) &&
                             testing::sp_holds(reduced.condition, {}, assign);
                CAPTURE(text);
                CAPTURE(va.str());
                CAPTURE(vb.str());
                CHECK(before == after);
            }
        }
    }
}

TEST_CASE("merge_conds is commutative/associative up to assignment sets") {
    std::vector<Value> universe{Value(0), Value(1), Value(2)};
    VarConditions x{{}, P("$A=1 || $A=2")};
    VarConditions y{{{"B", Value(1)}}, P("$A != 0")};
    VarConditions z{{}, P("$B=1 && $A>0")};
    auto sat = [&](const VarConditions& c, const VarBindings& assign) {
        return consistent(assign, c.bindings) && testing::sp_holds(c.condition, {}, assign);
    };
    VarConditions xy_z = merge_conds(merge_conds(x, y), z);
    VarConditions x_yz = merge_conds(x, merge_conds(y, z));
    VarConditions yx_z = merge_conds(merge_conds(y, x), z);
    for (const Value& va : universe)
        for (const Value& vb : universe) {
            VarBindings assign{{"A", va}, {"B", vb}};
            CHECK(sat(xy_z, assign) == sat(x_yz, assign));
            CHECK(sat(xy_z, assign) == sat(yx_z, assign));
        }
}
