#include "lasco/distsim.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace lasco {

std::set<std::string> Topology::scope(const std::string& dept) const {
    std::set<std::string> out;
    std::vector<std::string> stack{dept};
    while (!stack.empty()) {
        std::string d = stack.back();
        stack.pop_back();
        const Department& dep = departments.at(d);
        out.insert(dep.hosts.begin(), dep.hosts.end());
        for (const auto& c : dep.children) stack.push_back(c);
    }
    return out;
}

Topology parse_topology(const std::string& text) {
    Topology topo;
    std::vector<std::pair<int, std::string>> stack;  // (indent, department)
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        size_t indent = raw.find_first_not_of(' ');
        if (indent == std::string::npos) continue;
        std::string body = raw.substr(indent);
        if (body[0] == '#') continue;
        if (body.find('\t') != std::string::npos)
            throw ParseError("tabs not allowed in topology indentation", lineno, 1);

        while (!stack.empty() && stack.back().first >= static_cast<int>(indent)) stack.pop_back();

        if (body.rfind("host ", 0) == 0) {
            std::string host = body.substr(5);
            while (!host.empty() && host.back() == ' ') host.pop_back();
            if (!valid_name(host)) throw ParseError("malformed host name", lineno, 1);
            if (stack.empty()) throw ParseError("host outside any department", lineno, 1);
            if (topo.host_dept.count(host))
                throw ParseError("duplicate host '" + host + "'", lineno, 1);
            topo.host_dept[host] = stack.back().second;
            topo.departments[stack.back().second].hosts.push_back(host);
            continue;
        }

        std::string name = body;
        while (!name.empty() && name.back() == ' ') name.pop_back();
        if (!valid_name(name)) throw ParseError("malformed department name", lineno, 1);
        if (topo.departments.count(name))
            throw ParseError("duplicate department '" + name + "'", lineno, 1);
        Topology::Department dep;
        dep.name = name;
        if (stack.empty()) {
            if (!topo.root.empty())
                throw ParseError("second root department '" + name + "'", lineno, 1);
            topo.root = name;
            dep.depth = 0;
        } else {
            dep.parent = stack.back().second;
            dep.depth = topo.departments.at(dep.parent).depth + 1;
            topo.departments[dep.parent].children.push_back(name);
        }
        topo.departments[name] = std::move(dep);
        stack.emplace_back(static_cast<int>(indent), name);
    }
    if (topo.root.empty()) throw ParseError("empty topology", 1, 1);
    return topo;
}

namespace {

// All hosts carry name = id = host name (the two globally known attributes).
void inject_name(AttrSet& attrs, const std::string& host, int lineno) {
    auto it = attrs.find("name");
    if (it != attrs.end()) {
        if (!(it->second == Value(host)))
            throw ParseError("host snapshot sets name different from its id", lineno, 1);
    } else {
        attrs["name"] = Value(host);
    }
}

}  // namespace

std::vector<Report> parse_trace(const std::string& text, const Topology& topo) {
    std::vector<Report> out;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    std::map<std::string, Time> first_snapshot;
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        size_t start = raw.find_first_not_of(" \t");
        if (start == std::string::npos || raw[start] == '#') continue;
        if (raw[start] != '@')
            throw ParseError("trace record must start with '@<observer>'", lineno, 1);
        size_t sp = raw.find_first_of(" \t", start);
        if (sp == std::string::npos) throw ParseError("missing record after tag", lineno, 1);
        std::string tag = raw.substr(start + 1, sp - start - 1);
        if (!topo.has_host(tag) && !topo.departments.count(tag))
            throw ParseError("unknown observer '" + tag + "'", lineno, 1);
        auto rec = parse_lsh_record(raw.substr(sp + 1), lineno);
        if (!rec) throw ParseError("missing record after tag", lineno, 1);
        Report r;
        r.observed_by = tag;
        r.arrival_order = out.size();
        if (rec->snapshot) {
            r.kind = ReportKind::Snapshot;
            r.snapshot = std::move(*rec->snapshot);
            if (!topo.has_host(r.snapshot.object_id))
                throw ParseError("snapshot of unknown host '" + r.snapshot.object_id + "'",
                                 lineno, 1);
            inject_name(r.snapshot.attrs, r.snapshot.object_id, lineno);
            auto it = first_snapshot.find(r.snapshot.object_id);
            if (it == first_snapshot.end() || r.snapshot.time < it->second)
                first_snapshot[r.snapshot.object_id] = r.snapshot.time;
        } else {
            r.kind = ReportKind::Event;
            r.event = std::move(*rec->event);
            if (!topo.has_host(r.event.src) || !topo.has_host(r.event.dst))
                throw ParseError("event between unknown hosts", lineno, 1);
        }
        out.push_back(std::move(r));
    }
    for (const auto& r : out) {
        if (r.kind != ReportKind::Event) continue;
        for (const std::string* h : {&r.event.src, &r.event.dst}) {
            auto it = first_snapshot.find(*h);
            if (it == first_snapshot.end() || r.event.time < it->second)
                throw ParseError("event " + r.event.event_id + " involves host " + *h +
                                     " with no snapshot at or before its time",
                                 1, 1);
        }
    }
    return out;
}

SystemHistory trace_to_history(const std::vector<Report>& trace) {
    std::set<std::string> seen_events;
    SystemHistory h;
    for (const auto& r : trace) {
        if (r.kind == ReportKind::Snapshot) {
            const ObjectSnapshot& s = r.snapshot;
            auto& snaps = h.instances[s.time].snapshots;
            auto existing = std::find_if(snaps.begin(), snaps.end(), [&](const ObjectSnapshot& o) {
                return o.object_id == s.object_id;
            });
            if (existing != snaps.end()) {
                for (const auto& [k, v] : s.attrs) existing->attrs[k] = v;
            } else {
                snaps.push_back(s);
            }
        } else {
            if (!seen_events.insert(r.event.event_id).second) continue;
            h.instances[r.event.time].events.push_back(r.event);
        }
    }
    return h;
}

namespace {

// Host name anchoring a node's domain predicate: conjunctive-position
// `name = "h"` / `id = "h"` (either operand order).
std::optional<std::string> host_anchor(const PredPtr& p) {
    if (p->op() == PredOp::And) {
        if (auto a = host_anchor(p->lhs())) return a;
        return host_anchor(p->rhs());
    }
    if (p->op() != PredOp::Eq) return std::nullopt;
    auto check = [](const PredPtr& attr, const PredPtr& lit) -> std::optional<std::string> {
        if (attr->op() == PredOp::AttrName && (attr->name() == "name" || attr->name() == "id") &&
            lit->op() == PredOp::Literal && lit->value().is_string())
            return lit->value().as_string();
        return std::nullopt;
    };
    if (auto a = check(p->lhs(), p->rhs())) return a;
    return check(p->rhs(), p->lhs());
}

}  // namespace

Locality classify_locality(const PolicyGraph& p, const std::set<std::string>& engine_scope,
                           const std::set<std::string>& known_hosts) {
    Locality loc;
    for (const auto& n : p.nodes) {
        auto anchor = host_anchor(p.domain_of(n));
        if (!anchor) {
            loc.node[n] = NodeLocality::General;
        } else if (engine_scope.count(*anchor)) {
            loc.node[n] = NodeLocality::Local;
        } else if (known_hosts.count(*anchor)) {
            loc.node[n] = NodeLocality::NonLocal;
        } else {
            loc.node[n] = NodeLocality::General;
        }
    }
    for (const auto& e : p.edges) {
        NodeLocality s = loc.node.at(e.src);
        NodeLocality d = loc.node.at(e.dst);
        if (s == NodeLocality::General || d == NodeLocality::General)
            loc.edge[e.id] = EdgeLocality::General;
        else if (s == NodeLocality::Local && d == NodeLocality::Local)
            loc.edge[e.id] = EdgeLocality::Local;
        else if (s == NodeLocality::NonLocal && d == NodeLocality::NonLocal)
            loc.edge[e.id] = EdgeLocality::NonLocal;
        else
            loc.edge[e.id] = EdgeLocality::HalfLocal;
    }
    return loc;
}

std::string contingent_key(const ContingentMatch& m) {
    std::ostringstream out;
    out << match_key(m.base);
    out << "|cond:" << render_predicate(m.base.conds.condition) << "|";
    for (const auto& c : m.contingents)
        out << "c:" << c.policy_edge
            << (c.end == ContingentCondition::End::Source ? ":s" : ":d") << ";";
    for (const auto& [elem, rc] : m.carried) {
        out << "r:" << elem << "=";
        for (const auto& [v, val] : rc.bindings) out << v << "=" << val.str() << ",";
        out << render_predicate(rc.condition) << ";";
    }
    return out.str();
}

std::optional<ContingentMatch> combine_contingent(const ContingentMatch& a,
                                                  const ContingentMatch& b, EvalLog* log) {
    auto surviving = [](const ContingentMatch& x, const ContingentMatch& y) {
        std::set<ContingentCondition> out;
        for (const auto& c : x.contingents) {
            bool bound_in_other = y.base.ps.edge_map.count(c.policy_edge) > 0;
            bool same_in_other = y.contingents.count(c) > 0;
            // Discharged when the other match bound this edge after
            // evaluating the endpoint in question.
            if (bound_in_other && !same_in_other) continue;
            out.insert(c);
        }
        return out;
    };
    PartialMatch merged;
    if (!unify_matches(a.base, b.base, merged, log)) return std::nullopt;
    ContingentMatch r;
    r.base = std::move(merged);
    r.contingents = surviving(a, b);
    for (const auto& c : surviving(b, a)) r.contingents.insert(c);
    r.carried = a.carried;
    for (const auto& [elem, rc] : b.carried) r.carried.emplace(elem, rc);
    return r;
}

EngineState::EngineState(std::string department, const Topology* topo,
                         const std::vector<PolicyGraph>* policies, bool linear_scan_pool)
    : dept_(std::move(department)),
      topo_(topo),
      policies_(policies),
      linear_scan_pool_(linear_scan_pool) {
    scope_ = topo_->scope(dept_);
    std::set<std::string> known;
    for (const auto& [h, d] : topo_->host_dept) known.insert(h);
    for (const auto& p : *policies_) locality_.push_back(classify_locality(p, scope_, known));
    pools_.resize(policies_->size());
    seen_.resize(policies_->size());
}

std::vector<ContingentMatch> EngineState::new_piece_matches(
    size_t policy_index, const std::vector<const ObjectSnapshot*>& snaps,
    const std::vector<const SystemEvent*>& events) {
    const PolicyGraph& p = (*policies_)[policy_index];
    const auto& direct_hosts = topo_->departments.at(dept_).hosts;
    auto is_direct = [&](const std::string& h) {
        return std::find(direct_hosts.begin(), direct_hosts.end(), h) != direct_hosts.end();
    };
    std::vector<ContingentMatch> out;

    for (const SystemEvent* ev : events) {
        assert(is_direct(ev->src) || is_direct(ev->dst));
        for (const auto& pe : p.edges) {
            if (pe.src == pe.dst && ev->src != ev->dst) continue;
            VarConditions conds = match_edge(p.domain_of(pe.id), ev->attrs, {});
            if (!may_be_sat(conds.condition)) continue;

            std::set<ContingentCondition> contingents;
            bool dead = false;
            auto handle_end = [&](const std::string& node, const std::string& host,
                                  ContingentCondition::End end) {
                if (dead) return;
                if (is_direct(host)) {
                    if (!local_.has_snapshot_at_or_before(host, ev->time)) {
                        dead = true;  // local state unknown: cannot match yet
                        return;
                    }
                    VarConditions c =
                        match_node(p.domain_of(node), local_.effective_attrs(host, ev->time), {});
                    conds = merge_conds(conds, c);
                    if (!may_be_sat(conds.condition)) dead = true;
                    return;
                }
                // Non-local endpoint: only id and name are known here.
                std::set<std::string> attrs_used;
                collect_attr_names(p.domain_of(node), attrs_used);
                bool beyond = std::any_of(attrs_used.begin(), attrs_used.end(),
                                          [](const std::string& a) {
                                              return a != "id" && a != "name";
                                          });
                if (beyond) {
                    contingents.insert({pe.id, end});
                    return;
                }
                AttrSet known{{"id", Value(host)}, {"name", Value(host)}};
                VarConditions c = match_node(p.domain_of(node), known, {});
                conds = merge_conds(conds, c);
                if (!may_be_sat(conds.condition)) dead = true;
            };
            handle_end(pe.src, ev->src, ContingentCondition::End::Source);
            handle_end(pe.dst, ev->dst, ContingentCondition::End::Destination);
            if (dead) continue;
            assert(contingents.size() <= 1);  // one end of the event is always direct

            ContingentMatch m;
            m.base.ps.edge_map.emplace(pe.id, ev->event_id);
            m.base.ps.incidental[pe.src] = {ev->src, {ev->time}};
            m.base.ps.incidental[pe.dst] = {ev->dst, {ev->time}};
            m.base.conds = conds;
            m.contingents = std::move(contingents);
            m.carried.emplace(pe.id, eval_pred(p.requirement_of(pe.id), ev->attrs, {}));
            out.push_back(std::move(m));
        }
    }

    for (const ObjectSnapshot* s : snaps) {
        for (const auto& n : p.nodes) {
            if (!p.is_isolated(n)) continue;
            VarConditions c = match_node(
                p.domain_of(n), local_.effective_attrs(s->object_id, s->time), {});
            if (!may_be_sat(c.condition)) continue;
            ContingentMatch m;
            m.base.ps.node_map.emplace(n, NodeAt{s->object_id, s->time});
            m.base.conds = std::move(c);
            out.push_back(std::move(m));
        }
    }
    return out;
}

std::vector<size_t> EngineState::pool_candidates(const Pool& pool,
                                                 const ContingentMatch& m) const {
    if (linear_scan_pool_) {
        std::vector<size_t> all(pool.entries.size());
        for (size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
    }
    // Intersection of, per bound piece, the entries that agree on the
    // binding or leave the piece unbound.
    std::vector<std::vector<size_t>> sets;
    auto gather = [&](const std::string& piece, const std::string& element_key) {
        std::vector<size_t> s;
        auto bit = pool.by_binding.find(piece);
        if (bit != pool.by_binding.end()) {
            auto eit = bit->second.find(element_key);
            if (eit != bit->second.end()) s = eit->second;
        }
        auto uit = pool.unbound.find(piece);
        if (uit != pool.unbound.end()) {
            s.insert(s.end(), uit->second.begin(), uit->second.end());
            std::sort(s.begin(), s.end());
        }
        sets.push_back(std::move(s));
    };
    for (const auto& [pe, ev] : m.base.ps.edge_map) gather("e:" + pe, ev);
    for (const auto& [pn, at] : m.base.ps.node_map)
        gather("n:" + pn, at.object_id + "@" + at.time.str());
    if (sets.empty()) {
        std::vector<size_t> all(pool.entries.size());
        for (size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
    }
    std::vector<size_t> acc = std::move(sets.front());
    for (size_t i = 1; i < sets.size(); ++i) {
        std::vector<size_t> next;
        std::set_intersection(acc.begin(), acc.end(), sets[i].begin(), sets[i].end(),
                              std::back_inserter(next));
        acc = std::move(next);
    }
    return acc;
}

void EngineState::pool_add(size_t policy_index, const ContingentMatch& m) {
    Pool& pool = pools_[policy_index];
    size_t idx = pool.entries.size();
    pool.entries.push_back(m);
    const PolicyGraph& p = (*policies_)[policy_index];
    for (const auto& piece : semantic_pieces(p)) {
        std::string key =
            (piece.kind == PieceKind::Edge ? "e:" : "n:") + piece.element;
        if (piece.kind == PieceKind::Edge) {
            auto it = m.base.ps.edge_map.find(piece.element);
            if (it != m.base.ps.edge_map.end())
                pool.by_binding[key][it->second].push_back(idx);
            else
                pool.unbound[key].push_back(idx);
        } else {
            auto it = m.base.ps.node_map.find(piece.element);
            if (it != m.base.ps.node_map.end())
                pool.by_binding[key][it->second.object_id + "@" + it->second.time.str()]
                    .push_back(idx);
            else
                pool.unbound[key].push_back(idx);
        }
    }
}

bool EngineState::only_nonlocal_remaining(size_t policy_index, const ContingentMatch& m) const {
    const PolicyGraph& p = (*policies_)[policy_index];
    const Locality& loc = locality_[policy_index];
    bool any_remaining = false;
    for (const auto& piece : semantic_pieces(p)) {
        bool covered = piece.kind == PieceKind::Edge
                           ? m.base.ps.edge_map.count(piece.element) > 0
                           : m.base.ps.node_map.count(piece.element) > 0;
        if (covered) continue;
        any_remaining = true;
        bool nonlocal = piece.kind == PieceKind::Edge
                            ? loc.edge.at(piece.element) == EdgeLocality::NonLocal
                            : loc.node.at(piece.element) == NodeLocality::NonLocal;
        if (!nonlocal) return false;
    }
    return any_remaining;
}

EngineState::StepResult EngineState::step(const std::vector<Report>& batch,
                                          const std::vector<MatchMessage>& incoming,
                                          const Time& now) {
    // All reports for the step are considered together: sort content-wise
    // (arrival order within the step is immaterial), drop duplicate events.
    std::vector<ObjectSnapshot> snaps;
    std::vector<SystemEvent> events;
    for (const auto& r : batch) {
        if (r.kind == ReportKind::Snapshot) {
            auto existing =
                std::find_if(snaps.begin(), snaps.end(), [&](const ObjectSnapshot& s) {
                    return s.object_id == r.snapshot.object_id && s.time == r.snapshot.time;
                });
            if (existing != snaps.end()) {
                for (const auto& [k, v] : r.snapshot.attrs) existing->attrs[k] = v;
            } else {
                snaps.push_back(r.snapshot);
            }
        } else {
            if (!seen_events_.insert(r.event.event_id).second) continue;
            if (std::any_of(events.begin(), events.end(), [&](const SystemEvent& e) {
                    return e.event_id == r.event.event_id;
                }))
                continue;
            events.push_back(r.event);
        }
    }
    std::sort(snaps.begin(), snaps.end(), [](const ObjectSnapshot& a, const ObjectSnapshot& b) {
        if (a.object_id != b.object_id) return a.object_id < b.object_id;
        return a.time < b.time;
    });
    std::sort(events.begin(), events.end(),
              [](const SystemEvent& a, const SystemEvent& b) { return a.event_id < b.event_id; });
    local_.append(snaps, events, /*check_endpoints=*/false);

    std::vector<const ObjectSnapshot*> snap_ptrs;
    for (const auto& s : snaps) snap_ptrs.push_back(&s);
    std::vector<const SystemEvent*> event_ptrs;
    for (const auto& e : events) event_ptrs.push_back(&e);

    StepResult result;
    bool has_parent = !topo_->departments.at(dept_).parent.empty();
    for (size_t pi = 0; pi < policies_->size(); ++pi) {
        const PolicyGraph& p = (*policies_)[pi];
        std::deque<ContingentMatch> queue;
        for (auto& m : new_piece_matches(pi, snap_ptrs, event_ptrs)) queue.push_back(std::move(m));
        for (const auto& msg : incoming)
            if (msg.policy_index == pi) queue.push_back(msg.match);

        while (!queue.empty()) {
            ContingentMatch m = std::move(queue.front());
            queue.pop_front();
            if (!seen_[pi].insert(contingent_key(m)).second) continue;

            for (size_t idx : pool_candidates(pools_[pi], m)) {
                auto merged = combine_contingent(m, pools_[pi].entries[idx]);
                if (merged) queue.push_back(std::move(*merged));
            }

            if (is_complete(p, m.base) && m.contingents.empty()) {
                if (!m.base.conds.true_expr_p())
                    throw std::logic_error("complete match has unresolved conditions");
                VarBindings b = m.base.conds.bindings;
                std::vector<FailedPred> failed;
                for (const auto& [elem, rc] : m.carried) {
                    bool ok = consistent(b, rc.bindings);
                    if (ok) {
                        PredPtr c = fold_constants(substitute_vars(rc.condition, b));
                        ok = c->is_bool_literal(true);
                    }
                    if (!ok) failed.push_back({elem, PredRole::Requirement});
                }
                for (const auto& n : p.nodes) {
                    VarConditions c = eval_pred(p.requirement_of(n), AttrSet{}, b);
                    if (!c.true_expr_p()) failed.push_back({n, PredRole::Requirement});
                }
                if (!failed.empty())
                    result.alerts.push_back(
                        {p.name, dept_, std::move(m), std::move(b), std::move(failed), now});
                continue;  // complete matches are never pooled or forwarded
            }

            if (has_parent) result.upward.push_back({pi, m});
            if (!only_nonlocal_remaining(pi, m)) pool_add(pi, m);
        }
    }
    return result;
}

std::vector<Alert> run_simulation(const Topology& topo,
                                  const std::vector<PolicyGraph>& policies,
                                  const std::vector<Report>& trace, bool linear_scan_pool) {
    for (const auto& p : policies) {
        auto diags = lint_policy(p);
        if (has_lint_errors(diags))
            throw std::invalid_argument("policy '" + p.name + "' fails lint");
    }

    std::map<std::string, EngineState> engines;
    for (const auto& [name, dep] : topo.departments)
        engines.emplace(name, EngineState(name, &topo, &policies, linear_scan_pool));

    // Group reports by time; the time-reorder buffer is this grouping.
    std::map<Time, std::map<std::string, std::vector<Report>>, TimeLess> steps;
    std::vector<Report> ordered = trace;
    std::stable_sort(ordered.begin(), ordered.end(), [](const Report& a, const Report& b) {
        if (a.time() < b.time()) return true;
        if (b.time() < a.time()) return false;
        return a.arrival_order < b.arrival_order;
    });
    for (const auto& r : ordered) {
        if (r.kind == ReportKind::Snapshot) {
            steps[r.time()][topo.host_dept.at(r.snapshot.object_id)].push_back(r);
        } else {
            const std::string& d1 = topo.host_dept.at(r.event.src);
            const std::string& d2 = topo.host_dept.at(r.event.dst);
            steps[r.time()][d1].push_back(r);
            if (d2 != d1) steps[r.time()][d2].push_back(r);
        }
    }

    // Engines ordered deepest first so one sweep per step reaches
    // quiescence (messages only travel child -> parent).
    std::vector<std::string> engine_order;
    for (const auto& [name, dep] : topo.departments) engine_order.push_back(name);
    std::sort(engine_order.begin(), engine_order.end(),
              [&](const std::string& a, const std::string& b) {
                  int da = topo.departments.at(a).depth;
                  int db = topo.departments.at(b).depth;
                  if (da != db) return da > db;
                  return a < b;
              });

    std::vector<Alert> alerts;
    for (auto& [t, by_dept] : steps) {
        std::map<std::string, std::vector<MatchMessage>> mailbox;
        for (const auto& name : engine_order) {
            auto batch_it = by_dept.find(name);
            auto mail_it = mailbox.find(name);
            static const std::vector<Report> no_reports;
            static const std::vector<MatchMessage> no_mail;
            const auto& batch = batch_it == by_dept.end() ? no_reports : batch_it->second;
            const auto& mail = mail_it == mailbox.end() ? no_mail : mail_it->second;
            if (batch.empty() && mail.empty()) continue;
            auto result = engines.at(name).step(batch, mail, t);
            for (auto& a : result.alerts) alerts.push_back(std::move(a));
            const std::string& parent = topo.departments.at(name).parent;
            if (!parent.empty())
                for (auto& msg : result.upward) mailbox[parent].push_back(std::move(msg));
        }
    }
    return alerts;
}

}  // namespace lasco
