#include "lasco/matcher.hpp"

#include <algorithm>
#include <sstream>

namespace lasco {

std::string match_key(const PartialMatch& m) {
    std::ostringstream out;
    for (const auto& [pe, ev] : m.ps.edge_map) out << "e:" << pe << "=" << ev << ";";
    for (const auto& [pn, at] : m.ps.node_map)
        out << "n:" << pn << "=" << at.object_id << "@" << at.time.str() << ";";
    for (const auto& [v, val] : m.conds.bindings) out << "b:" << v << "=" << val.str() << ";";
    return out.str();
}

bool is_complete(const PolicyGraph& p, const PartialMatch& m) {
    if (m.ps.edge_map.size() != p.edges.size()) return false;
    for (const auto& n : p.nodes)
        if (p.is_isolated(n) && !m.ps.node_map.count(n)) return false;
    return true;
}

bool unify_matches(const PartialMatch& a, const PartialMatch& b, PartialMatch& out,
                   EvalLog* log) {
    // Edge bindings: agree on shared policy edges, stay one-to-one overall.
    std::map<std::string, std::string> edge_map = a.ps.edge_map;
    std::set<std::string> used_events;
    for (const auto& [k, v] : edge_map) used_events.insert(v);
    for (const auto& [k, v] : b.ps.edge_map) {
        auto it = edge_map.find(k);
        if (it != edge_map.end()) {
            if (it->second != v) return false;
            continue;
        }
        if (used_events.count(v)) return false;
        edge_map.emplace(k, v);
        used_events.insert(v);
    }

    std::map<std::string, NodeAt> node_map = a.ps.node_map;
    std::set<NodeAt> used_nodes;
    for (const auto& [k, v] : node_map) used_nodes.insert(v);
    for (const auto& [k, v] : b.ps.node_map) {
        auto it = node_map.find(k);
        if (it != node_map.end()) {
            if (!(it->second == v)) return false;
            continue;
        }
        if (used_nodes.count(v)) return false;
        node_map.emplace(k, v);
        used_nodes.insert(v);
    }

    // Incidental bindings: a shared policy node names the same object.
    std::map<std::string, IncidentalBinding> incidental = a.ps.incidental;
    for (const auto& [node, bind] : b.ps.incidental) {
        auto it = incidental.find(node);
        if (it == incidental.end()) {
            incidental.emplace(node, bind);
            continue;
        }
        if (it->second.object_id != bind.object_id) return false;
        it->second.times.insert(bind.times.begin(), bind.times.end());
    }

    VarConditions conds = merge_conds(a.conds, b.conds, log);
    if (!may_be_sat(conds.condition)) return false;

    out.ps.edge_map = std::move(edge_map);
    out.ps.node_map = std::move(node_map);
    out.ps.incidental = std::move(incidental);
    out.conds = std::move(conds);
    return true;
}

VarConditions match_node(const PredPtr& pred, const AttrSet& attrs, const VarBindings& b,
                         EvalLog* log) {
    return eval_pred(pred, attrs, b, log);
}

VarConditions match_edge(const PredPtr& pred, const AttrSet& attrs, const VarBindings& b,
                         EvalLog* log) {
    return eval_pred(pred, attrs, b, log);
}

VarConditions match_edge_area(const PolicyEdge& pe, const SystemEvent& ev,
                              const std::map<std::string, PredPtr>& preds,
                              const SystemGraph& g, const VarBindings& b, EvalLog* log) {
    if (!g.has_snapshot_at_or_before(ev.src, ev.time) ||
        !g.has_snapshot_at_or_before(ev.dst, ev.time))
        return VarConditions{b, false_expr()};
    VarConditions edge_c = match_edge(preds.at(pe.id), ev.attrs, b, log);
    VarConditions src_c =
        match_node(preds.at(pe.src), g.effective_attrs(ev.src, ev.time), b, log);
    VarConditions dst_c =
        match_node(preds.at(pe.dst), g.effective_attrs(ev.dst, ev.time), b, log);
    return merge_conds({edge_c, src_c, dst_c}, log);
}

InitialMatches initial_matches(const PolicyGraph& p, const SystemGraph& g,
                               const MatchOptions& opts, EvalLog* log) {
    InitialMatches out;
    for (const auto& piece : semantic_pieces(p)) out[piece] = {};

    for (const auto& pe : p.edges) {
        auto& list = out[{PieceKind::Edge, pe.id}];
        auto consider = [&](const SystemEvent& ev) {
            if (pe.src == pe.dst && ev.src != ev.dst) return;
            VarConditions c = match_edge_area(pe, ev, p.domain, g, {}, log);
            if (!may_be_sat(c.condition)) return;  // unsatisfiable: discard
            PartialMatch m;
            m.ps.edge_map.emplace(pe.id, ev.event_id);
            m.ps.incidental[pe.src] = {ev.src, {ev.time}};
            m.ps.incidental[pe.dst] = {ev.dst, {ev.time}};
            m.conds = std::move(c);
            list.push_back(std::move(m));
        };
        auto hint = opts.edge_hints.find(pe.id);
        if (hint != opts.edge_hints.end()) {
            for (const auto& ev_id : hint->second) {
                const SystemEvent* ev = g.event(ev_id);
                if (ev) consider(*ev);
            }
        } else {
            for (size_t i = 0; i < g.edges().size(); ++i) {
                if (opts.new_only && g.edge_epoch(i) <= *opts.new_only) continue;
                consider(g.edges()[i]);
            }
        }
    }

    for (const auto& n : p.nodes) {
        if (!p.is_isolated(n)) continue;
        auto& list = out[{PieceKind::IsolatedNode, n}];
        auto consider = [&](const NodeAt& at) {
            VarConditions c =
                match_node(p.domain_of(n), g.effective_attrs(at.object_id, at.time), {}, log);
            if (!may_be_sat(c.condition)) return;
            PartialMatch m;
            m.ps.node_map.emplace(n, at);
            m.conds = std::move(c);
            list.push_back(std::move(m));
        };
        auto hint = opts.node_hints.find(n);
        if (hint != opts.node_hints.end()) {
            for (const auto& at : hint->second)
                if (g.has_snapshot_at_or_before(at.object_id, at.time)) consider(at);
        } else {
            for (size_t i = 0; i < g.nodes().size(); ++i) {
                if (opts.new_only && g.node_epoch(i) <= *opts.new_only) continue;
                const auto& s = g.nodes()[i];
                consider({s.object_id, s.time});
            }
        }
    }
    return out;
}

namespace {

// Union-find over policy nodes, to group edge pieces into components.
struct DisjointSets {
    std::map<std::string, std::string> parent;
    const std::string& find(const std::string& x) {
        auto it = parent.find(x);
        if (it == parent.end()) {
            parent[x] = x;
            return parent[x];
        }
        if (it->second == x) return it->second;
        std::string root = find(it->second);
        parent[x] = root;
        return parent[x];
    }
    void unite(const std::string& a, const std::string& b) {
        std::string ra = find(a), rb = find(b);
        if (ra != rb) parent[ra] = rb;
    }
};

}  // namespace

std::vector<SemanticPiece> order_pieces(const PolicyGraph& p,
                                        const std::map<SemanticPiece, size_t>& counts) {
    DisjointSets sets;
    for (const auto& e : p.edges) sets.unite(e.src, e.dst);

    auto count_of = [&](const SemanticPiece& piece) {
        auto it = counts.find(piece);
        if (it == counts.end()) throw std::invalid_argument("counts missing a piece");
        return it->second;
    };

    // component root -> its edge pieces
    std::map<std::string, std::vector<SemanticPiece>> comps;
    for (const auto& e : p.edges)
        comps[sets.find(e.src)].push_back({PieceKind::Edge, e.id});

    std::vector<std::vector<SemanticPiece>> comp_list;
    for (auto& [root, pieces] : comps) {
        std::sort(pieces.begin(), pieces.end(),
                  [&](const SemanticPiece& a, const SemanticPiece& b) {
                      size_t ca = count_of(a), cb = count_of(b);
                      if (ca != cb) return ca < cb;
                      return a.element < b.element;
                  });
        comp_list.push_back(std::move(pieces));
    }
    std::sort(comp_list.begin(), comp_list.end(),
              [](const std::vector<SemanticPiece>& a, const std::vector<SemanticPiece>& b) {
                  if (a.size() != b.size()) return a.size() > b.size();
                  std::string ma, mb;
                  for (const auto& x : a) ma = ma.empty() ? x.element : std::min(ma, x.element);
                  for (const auto& x : b) mb = mb.empty() ? x.element : std::min(mb, x.element);
                  return ma < mb;
              });

    std::vector<SemanticPiece> order;
    for (const auto& comp : comp_list)
        order.insert(order.end(), comp.begin(), comp.end());

    std::vector<SemanticPiece> isolated;
    for (const auto& n : p.nodes)
        if (p.is_isolated(n)) isolated.push_back({PieceKind::IsolatedNode, n});
    std::sort(isolated.begin(), isolated.end(),
              [&](const SemanticPiece& a, const SemanticPiece& b) {
                  size_t ca = count_of(a), cb = count_of(b);
                  if (ca != cb) return ca < cb;
                  return a.element < b.element;
              });
    order.insert(order.end(), isolated.begin(), isolated.end());
    return order;
}

namespace {

// Key identifying a complete match up to swaps of events within a
// same-event set (events sharing the set attribute's value).
std::string same_set_key(const PartialMatch& m, const SystemGraph& g,
                         const std::string& attr) {
    std::ostringstream out;
    for (const auto& [pe, ev_id] : m.ps.edge_map) {
        const SystemEvent* ev = g.event(ev_id);
        const Value* set_id = nullptr;
        if (ev) {
            auto it = ev->attrs.find(attr);
            if (it != ev->attrs.end()) set_id = &it->second;
        }
        out << "e:" << pe << "=";
        if (set_id)
            out << "set:" << set_id->str();
        else
            out << "ev:" << ev_id;
        out << ";";
    }
    for (const auto& [pn, at] : m.ps.node_map)
        out << "n:" << pn << "=" << at.object_id << "@" << at.time.str() << ";";
    for (const auto& [pn, inc] : m.ps.incidental) out << "i:" << pn << "=" << inc.object_id << ";";
    for (const auto& [v, val] : m.conds.bindings) out << "b:" << v << "=" << val.str() << ";";
    return out.str();
}

struct Grower {
    const PolicyGraph& policy;
    const InitialMatches& initial;
    const std::vector<SemanticPiece>& order;
    const std::optional<std::string>& same_event_attr;
    const SystemGraph* graph;  // only needed for same-event sets
    GrowStats* stats;
    EvalLog* log;

    std::vector<PartialMatch> results;
    std::set<std::string> emitted;

    void emit(const PartialMatch& m) {
        if (same_event_attr && graph) {
            std::string key = same_set_key(m, *graph, *same_event_attr);
            if (!emitted.insert(key).second) return;
        }
        results.push_back(m);
    }

    void rec(size_t level, const PartialMatch& acc) {
        if (level == order.size()) {
            emit(acc);
            return;
        }
        auto it = initial.find(order[level]);
        if (it == initial.end()) return;
        for (const PartialMatch& init : it->second) {
            if (level == 0) {
                rec(1, init);
                continue;
            }
            if (stats) ++stats->combine_attempts;
            PartialMatch merged;
            if (unify_matches(acc, init, merged, log)) rec(level + 1, merged);
        }
    }
};

}  // namespace

std::vector<PartialMatch> grow_matches(const PolicyGraph& p, const InitialMatches& initial,
                                       const std::vector<SemanticPiece>& order,
                                       const std::optional<std::string>& same_event_attr,
                                       const SystemGraph* g, GrowStats* stats, EvalLog* log) {
    if (order.empty()) return {};
    Grower grower{p, initial, order, same_event_attr, g, stats, log, {}, {}};
    grower.rec(0, PartialMatch{});
    return std::move(grower.results);
}

std::vector<PartialMatch> find_matches(const PolicyGraph& p, const SystemGraph& g,
                                       const MatchOptions& opts, GrowStats* stats,
                                       EvalLog* log) {
    InitialMatches initial = initial_matches(p, g, opts, log);
    std::map<SemanticPiece, size_t> counts;
    for (const auto& [piece, list] : initial) counts[piece] = list.size();
    std::vector<SemanticPiece> order = order_pieces(p, counts);
    return grow_matches(p, initial, order, opts.same_event_attr, &g, stats, log);
}

namespace {

VarBindings complete_bindings(const PolicyGraph& p, const PartialMatch& m) {
    if (!m.conds.true_expr_p())
        throw std::logic_error("complete match has unresolved conditions: " +
                               render_predicate(m.conds.condition));
    for (const auto& v : p.vars) {
        if (!m.conds.bindings.count(v))
            throw std::logic_error("complete match left variable $" + v + " unbound");
    }
    return m.conds.bindings;
}

std::optional<ViolationReport> check_requirement(const PolicyGraph& p, const SystemGraph& g,
                                                 const PartialMatch& m, EvalLog* log) {
    VarBindings b = complete_bindings(p, m);
    std::vector<FailedPred> failed;
    for (const auto& pe : p.edges) {
        const SystemEvent* ev = g.event(m.ps.edge_map.at(pe.id));
        VarConditions c = eval_pred(p.requirement_of(pe.id), ev->attrs, b, log);
        if (!c.true_expr_p()) failed.push_back({pe.id, PredRole::Requirement});
    }
    for (const auto& n : p.nodes) {
        VarConditions c = eval_pred(p.requirement_of(n), AttrSet{}, b, log);
        if (!c.true_expr_p()) failed.push_back({n, PredRole::Requirement});
    }
    if (failed.empty()) return std::nullopt;
    return ViolationReport{p.name, m, std::move(b), std::move(failed)};
}

void require_lint_clean(const PolicyGraph& p) {
    auto diags = lint_policy(p);
    if (has_lint_errors(diags)) {
        std::string msg = "policy '" + p.name + "' fails lint:";
        for (const auto& d : diags)
            if (d.severity == Severity::Error) msg += " [" + d.code + "] " + d.message;
        throw std::invalid_argument(msg);
    }
}

}  // namespace

std::vector<ViolationReport> find_violations(const PolicyGraph& p, const SystemGraph& g,
                                             const MatchOptions& opts, EvalLog* log) {
    require_lint_clean(p);
    std::vector<ViolationReport> out;
    for (const PartialMatch& m : find_matches(p, g, opts, nullptr, log)) {
        auto v = check_requirement(p, g, m, log);
        if (v) out.push_back(std::move(*v));
    }
    return out;
}

std::vector<ViolationReport> find_violations_incremental(const PolicyGraph& p,
                                                         const SystemGraph& g,
                                                         IncrementalCache& cache,
                                                         const MatchOptions& opts,
                                                         EvalLog* log) {
    require_lint_clean(p);
    MatchOptions new_opts = opts;
    new_opts.new_only = cache.watermark;
    InitialMatches fresh = initial_matches(p, g, new_opts, log);

    // Extend the cache, remembering which entries are new this round.
    InitialMatches new_per_piece;
    for (auto& [piece, list] : fresh) {
        auto& cached = cache.initial[piece];
        for (auto& m : list) {
            cached.push_back(m);
            new_per_piece[piece].push_back(std::move(m));
        }
    }

    // One growth pass per piece, with that piece's list replaced by only the
    // new entries; the union is exactly the matches involving new material.
    std::map<std::string, PartialMatch> found;
    for (const auto& [piece, new_list] : new_per_piece) {
        if (new_list.empty()) continue;
        InitialMatches lists = cache.initial;
        lists[piece] = new_list;
        std::map<SemanticPiece, size_t> counts;
        for (const auto& [pc, l] : lists) counts[pc] = l.size();
        std::vector<SemanticPiece> order = order_pieces(p, counts);
        for (PartialMatch& m :
             grow_matches(p, lists, order, opts.same_event_attr, &g, nullptr, log))
            found.emplace(match_key(m), std::move(m));
    }

    std::vector<ViolationReport> out;
    for (auto& [key, m] : found) {
        if (opts.same_event_attr) {
            std::string set_key = same_set_key(m, g, *opts.same_event_attr);
            if (!cache.reported_sets.insert(set_key).second) continue;
        }
        auto v = check_requirement(p, g, m, log);
        if (v) out.push_back(std::move(*v));
    }
    cache.watermark = g.epoch();
    return out;
}

bool check_composition(const std::vector<PolicyGraph>& ps, const SystemGraph& g) {
    return std::any_of(ps.begin(), ps.end(), [&](const PolicyGraph& p) {
        return !find_violations(p, g).empty();
    });
}

}  // namespace lasco
