#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lasco::testing {

namespace {

std::optional<Value> sp_binary(PredOp op, const Value& a, const Value& b) {
    switch (op) {
        case PredOp::And:
        case PredOp::Or: {
            if (!a.is_bool() || !b.is_bool()) return std::nullopt;
            return Value(op == PredOp::And ? a.as_bool() && b.as_bool()
                                           : a.as_bool() || b.as_bool());
        }
        case PredOp::Eq:
            return Value(a == b);
        case PredOp::Ne:
            return Value(!(a == b));
        case PredOp::Lt:
        case PredOp::Gt:
        case PredOp::Le:
        case PredOp::Ge: {
            if (a.is_number() && b.is_number()) {
                double x = a.as_number().as_double(), y = b.as_number().as_double();
                bool exact_int = a.as_number().is_int() && b.as_number().is_int();
                auto lt = [&] {
                    return exact_int ? a.as_number().as_int() < b.as_number().as_int() : x < y;
                };
                auto eq = [&] {
                    return exact_int ? a.as_number().as_int() == b.as_number().as_int() : x == y;
                };
                switch (op) {
                    case PredOp::Lt: return Value(lt());
                    case PredOp::Gt: return Value(!lt() && !eq());
                    case PredOp::Le: return Value(lt() || eq());
                    default: return Value(!lt());
                }
            }
            if (a.is_string() && b.is_string()) {
                int c = a.as_string().compare(b.as_string());
                switch (op) {
                    case PredOp::Lt: return Value(c < 0);
                    case PredOp::Gt: return Value(c > 0);
                    case PredOp::Le: return Value(c <= 0);
                    default: return Value(c >= 0);
                }
            }
            return std::nullopt;
        }
        case PredOp::In: {
            if (!a.is_scalar() || !b.is_set()) return std::nullopt;
            for (const auto& s : b.as_set())
                if (Value::from_scalar(s) == a) return Value(true);
            return Value(false);
        }
        case PredOp::PCont:
        case PredOp::Cont: {
            if (!a.is_set() || !b.is_set()) return std::nullopt;
            bool subset = true;
            for (const auto& s : a.as_set())
                if (!b.as_set().count(s)) subset = false;
            if (op == PredOp::Cont) return Value(subset);
            return Value(subset && a.as_set().size() < b.as_set().size());
        }
        case PredOp::Union: {
            if (!a.is_set() || !b.is_set()) return std::nullopt;
            ScalarSet s = a.as_set();
            for (const auto& x : b.as_set()) s.insert(x);
            return Value(std::move(s));
        }
        case PredOp::Intersect: {
            if (!a.is_set() || !b.is_set()) return std::nullopt;
            ScalarSet s;
            for (const auto& x : a.as_set())
                if (b.as_set().count(x)) s.insert(x);
            return Value(std::move(s));
        }
        default: {
            if (!a.is_number() || !b.is_number()) return std::nullopt;
            double x = a.as_number().as_double(), y = b.as_number().as_double();
            switch (op) {
                case PredOp::Add: return Value(Number(x + y));
                case PredOp::Sub: return Value(Number(x - y));
                case PredOp::Mul: return Value(Number(x * y));
                case PredOp::Div:
                    if (y == 0) return std::nullopt;
                    return Value(Number(x / y));
                case PredOp::Mod:
                    if (y == 0) return std::nullopt;
                    if (a.as_number().is_int() && b.as_number().is_int())
                        return Value(Number(a.as_number().as_int() % b.as_number().as_int()));
                    return Value(Number(std::fmod(x, y)));
                default: return std::nullopt;
            }
        }
    }
}

}  // namespace

std::optional<Value> sp_eval(const PredPtr& p, const AttrSet& attrs) {
    switch (p->op()) {
        case PredOp::Literal:
            return p->value();
        case PredOp::AttrName: {
            auto it = attrs.find(p->name());
            if (it == attrs.end()) return std::nullopt;
            return it->second;
        }
        case PredOp::VarName:
            return std::nullopt;  // oracle callers substitute bindings first
        case PredOp::Not: {
            auto c = sp_eval(p->lhs(), attrs);
            if (!c || !c->is_bool()) return std::nullopt;
            return Value(!c->as_bool());
        }
        case PredOp::Or: {
            auto a = sp_eval(p->lhs(), attrs);
            auto b = sp_eval(p->rhs(), attrs);
            if (!a) return b;
            if (!b) return a;
            return sp_binary(PredOp::Or, *a, *b);
        }
        default: {
            auto a = sp_eval(p->lhs(), attrs);
            if (!a) return std::nullopt;
            auto b = sp_eval(p->rhs(), attrs);
            if (!b) return std::nullopt;
            return sp_binary(p->op(), *a, *b);
        }
    }
}

bool sp_holds(const PredPtr& p, const AttrSet& attrs, const VarBindings& b) {
    auto v = sp_eval(substitute_vars(p, b), attrs);
    return v && v->is_bool() && v->as_bool();
}

namespace {

void collect_literal_values(const PredPtr& p, std::vector<Value>& out) {
    if (!p) return;
    if (p->op() == PredOp::Literal) out.push_back(p->value());
    collect_literal_values(p->lhs(), out);
    collect_literal_values(p->rhs(), out);
}

std::vector<Value> value_universe(const PolicyGraph& p, const SystemGraph& g) {
    std::vector<Value> all;
    for (const auto& s : g.nodes())
        for (const auto& [k, v] : s.attrs) all.push_back(v);
    for (const auto& e : g.edges())
        for (const auto& [k, v] : e.attrs) all.push_back(v);
    for (const auto& [id, pred] : p.domain) collect_literal_values(pred, all);
    for (const auto& [id, pred] : p.requirement) collect_literal_values(pred, all);
    std::vector<Value> uniq;
    for (const auto& v : all) {
        bool dup = std::any_of(uniq.begin(), uniq.end(), [&](const Value& u) { return u == v; });
        if (!dup) uniq.push_back(v);
    }
    std::sort(uniq.begin(), uniq.end(),
              [](const Value& a, const Value& b) { return a.canonical_less(b); });
    return uniq;
}

// All injective assignments of `slots` into indices [0, n).
void injective_assignments(size_t slots, size_t n, std::vector<std::vector<size_t>>& out) {
    std::vector<size_t> cur(slots);
    std::vector<bool> used(n, false);
    std::function<void(size_t)> rec = [&](size_t k) {
        if (k == slots) {
            out.push_back(cur);
            return;
        }
        for (size_t i = 0; i < n; ++i) {
            if (used[i]) continue;
            used[i] = true;
            cur[k] = i;
            rec(k + 1);
            used[i] = false;
        }
    };
    rec(0);
}

}  // namespace

std::vector<OracleMatch> oracle_matches(const PolicyGraph& p, const SystemGraph& g) {
    std::vector<OracleMatch> out;
    std::vector<std::string> isolated;
    for (const auto& n : p.nodes)
        if (p.is_isolated(n)) isolated.push_back(n);

    std::vector<std::vector<size_t>> edge_assigns;
    injective_assignments(p.edges.size(), g.edges().size(), edge_assigns);
    std::vector<std::vector<size_t>> node_assigns;
    injective_assignments(isolated.size(), g.nodes().size(), node_assigns);

    std::vector<Value> universe = value_universe(p, g);
    std::vector<std::string> vars(p.vars.begin(), p.vars.end());
    size_t n_bindings = 1;
    for (size_t i = 0; i < vars.size(); ++i) n_bindings *= universe.size();
    if (vars.empty()) n_bindings = 1;

    for (const auto& ea : edge_assigns) {
        // Derived node bindings must agree across edges sharing a policy node.
        std::map<std::string, std::string> node_obj;
        bool coherent = true;
        for (size_t i = 0; i < p.edges.size() && coherent; ++i) {
            const SystemEvent& ev = g.edges()[ea[i]];
            for (auto [pn, obj] : {std::pair{p.edges[i].src, ev.src},
                                   std::pair{p.edges[i].dst, ev.dst}}) {
                auto it = node_obj.find(pn);
                if (it == node_obj.end())
                    node_obj.emplace(pn, obj);
                else if (it->second != obj)
                    coherent = false;
            }
        }
        if (!coherent) continue;

        for (const auto& na : node_assigns) {
            std::vector<OracleMatch> found_here;
            for (size_t bi = 0; bi < n_bindings; ++bi) {
                VarBindings b;
                size_t rem = bi;
                for (const auto& v : vars) {
                    b[v] = universe[rem % universe.size()];
                    rem /= universe.size();
                }

                bool ok = true;
                for (size_t i = 0; i < p.edges.size() && ok; ++i) {
                    const SystemEvent& ev = g.edges()[ea[i]];
                    if (!g.has_snapshot_at_or_before(ev.src, ev.time) ||
                        !g.has_snapshot_at_or_before(ev.dst, ev.time)) {
                        ok = false;
                        break;
                    }
                    ok = sp_holds(p.domain_of(p.edges[i].id), ev.attrs, b) &&
                         sp_holds(p.domain_of(p.edges[i].src),
                                  g.effective_attrs(ev.src, ev.time), b) &&
                         sp_holds(p.domain_of(p.edges[i].dst),
                                  g.effective_attrs(ev.dst, ev.time), b);
                }
                for (size_t i = 0; i < isolated.size() && ok; ++i) {
                    const ObjectSnapshot& s = g.nodes()[na[i]];
                    ok = sp_holds(p.domain_of(isolated[i]),
                                  g.effective_attrs(s.object_id, s.time), b);
                }
                if (!ok) continue;

                OracleMatch m;
                for (size_t i = 0; i < p.edges.size(); ++i)
                    m.edge_map[p.edges[i].id] = g.edges()[ea[i]].event_id;
                for (size_t i = 0; i < isolated.size(); ++i)
                    m.node_map[isolated[i]] = {g.nodes()[na[i]].object_id,
                                               g.nodes()[na[i]].time};
                m.bindings = b;

                // Requirement per the formal semantics: re-evaluate every
                // edge area and isolated node against the requirement
                // predicates.
                bool req = true;
                for (size_t i = 0; i < p.edges.size() && req; ++i) {
                    const SystemEvent& ev = g.edges()[ea[i]];
                    req = sp_holds(p.requirement_of(p.edges[i].id), ev.attrs, b) &&
                          sp_holds(p.requirement_of(p.edges[i].src),
                                   g.effective_attrs(ev.src, ev.time), b) &&
                          sp_holds(p.requirement_of(p.edges[i].dst),
                                   g.effective_attrs(ev.dst, ev.time), b);
                }
                for (size_t i = 0; i < isolated.size() && req; ++i) {
                    const ObjectSnapshot& s = g.nodes()[na[i]];
                    req = sp_holds(p.requirement_of(isolated[i]),
                                   g.effective_attrs(s.object_id, s.time), b);
                }
                m.violation = !req;
                found_here.push_back(std::move(m));
            }
            // The anchor rule guarantees at most one binding per (ϖ, ω).
            if (found_here.size() > 1)
                throw std::logic_error("oracle found multiple bindings for one ps map");
            for (auto& m : found_here) out.push_back(std::move(m));
        }
    }
    return out;
}

std::string oracle_match_key(const OracleMatch& m) {
    std::ostringstream out;
    for (const auto& [pe, ev] : m.edge_map) out << "e:" << pe << "=" << ev << ";";
    for (const auto& [pn, at] : m.node_map)
        out << "n:" << pn << "=" << at.object_id << "@" << at.time.str() << ";";
    for (const auto& [v, val] : m.bindings) out << "b:" << v << "=" << val.str() << ";";
    return out.str();
}

std::set<std::string> oracle_match_keys(const std::vector<OracleMatch>& ms,
                                        bool violations_only) {
    std::set<std::string> out;
    for (const auto& m : ms)
        if (!violations_only || m.violation) out.insert(oracle_match_key(m));
    return out;
}

std::set<std::string> engine_match_keys(const std::vector<PartialMatch>& ms) {
    std::set<std::string> out;
    for (const auto& m : ms) out.insert(match_key(m));
    return out;
}

std::set<std::string> engine_violation_keys(const std::vector<ViolationReport>& vs) {
    std::set<std::string> out;
    for (const auto& v : vs) out.insert(match_key(v.match));
    return out;
}

}  // namespace lasco::testing
