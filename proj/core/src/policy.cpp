#include "lasco/policy.hpp"

#include <algorithm>
#include <sstream>

namespace lasco {

const PredPtr& PolicyGraph::domain_of(const std::string& element) const {
    auto it = domain.find(element);
    if (it == domain.end()) throw std::out_of_range("no such element: " + element);
    return it->second;
}

const PredPtr& PolicyGraph::requirement_of(const std::string& element) const {
    auto it = requirement.find(element);
    if (it == requirement.end()) throw std::out_of_range("no such element: " + element);
    return it->second;
}

bool PolicyGraph::is_isolated(const std::string& node) const {
    for (const auto& e : edges)
        if (e.src == node || e.dst == node) return false;
    return true;
}

const PolicyEdge* PolicyGraph::edge(const std::string& id) const {
    for (const auto& e : edges)
        if (e.id == id) return &e;
    return nullptr;
}

PolicyGraph make_policy(std::string name, std::vector<std::string> nodes,
                        std::vector<PolicyEdge> edges, std::vector<ElementPreds> preds,
                        bool explicit_name) {
    PolicyGraph p;
    p.name = std::move(name);
    p.explicit_name = explicit_name;
    p.nodes = std::move(nodes);
    p.edges = std::move(edges);
    for (const auto& e : p.edges) {
        for (const std::string* n : {&e.src, &e.dst}) {
            if (std::find(p.nodes.begin(), p.nodes.end(), *n) == p.nodes.end())
                p.nodes.push_back(*n);
        }
    }
    for (const auto& n : p.nodes) {
        p.domain[n] = true_expr();
        p.requirement[n] = true_expr();
    }
    for (const auto& e : p.edges) {
        if (p.domain.count(e.id))
            throw std::invalid_argument("duplicate element id: " + e.id);
        p.domain[e.id] = true_expr();
        p.requirement[e.id] = true_expr();
    }
    for (auto& ep : preds) {
        if (!p.domain.count(ep.element))
            throw std::invalid_argument("predicates for unknown element: " + ep.element);
        if (ep.domain) p.domain[ep.element] = ep.domain;
        if (ep.requirement) p.requirement[ep.element] = ep.requirement;
    }
    for (const auto& [id, pred] : p.domain) collect_vars(pred, p.vars);
    for (const auto& [id, pred] : p.requirement) collect_vars(pred, p.vars);
    return p;
}

std::vector<SemanticPiece> semantic_pieces(const PolicyGraph& p) {
    std::vector<SemanticPiece> out;
    for (const auto& e : p.edges) out.push_back({PieceKind::Edge, e.id});
    for (const auto& n : p.nodes)
        if (p.is_isolated(n)) out.push_back({PieceKind::IsolatedNode, n});
    return out;
}

bool has_lint_errors(const std::vector<PolicyDiagnostic>& diags) {
    return std::any_of(diags.begin(), diags.end(),
                       [](const PolicyDiagnostic& d) { return d.severity == Severity::Error; });
}

namespace {

std::string synth_edge_id(const PolicyEdge& e, int ordinal) {
    std::string base = e.src + "->" + e.dst;
    if (ordinal > 1) base += "#" + std::to_string(ordinal);
    return base;
}

struct PendingPolicy {
    std::string name;
    bool explicit_name = false;
    std::vector<std::string> nodes;
    std::vector<PolicyEdge> edges;
    std::vector<ElementPreds> preds;
    bool empty() const { return nodes.empty() && edges.empty(); }
};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_tabs(const std::string& s) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t tab = s.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, tab - start));
        start = tab + 1;
    }
}

}  // namespace

std::vector<PolicyGraph> parse_policy_file(const std::string& text,
                                           const std::string& source) {
    std::vector<PolicyGraph> out;
    PendingPolicy cur;
    std::set<std::string> explicit_nodes;
    int lineno = 0;

    auto flush = [&]() {
        if (cur.empty()) {
            cur = PendingPolicy{};
            explicit_nodes.clear();
            return;
        }
        std::string name = cur.explicit_name
                               ? cur.name
                               : source + ":" + std::to_string(out.size() + 1);
        // Assign stable ids to edges: src->dst, with #k for parallels.
        std::map<std::string, int> seen;
        for (auto& e : cur.edges) {
            int ord = ++seen[e.src + "->" + e.dst];
            std::string id = synth_edge_id(e, ord);
            for (auto& ep : cur.preds)
                if (ep.element == e.id) ep.element = id;
            e.id = id;
        }
        out.push_back(make_policy(std::move(name), std::move(cur.nodes),
                                  std::move(cur.edges), std::move(cur.preds),
                                  cur.explicit_name));
        cur = PendingPolicy{};
        explicit_nodes.clear();
    };

    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::string stripped = trim(raw);
        if (stripped.empty()) {
            flush();
            continue;
        }
        if (stripped[0] == '#') {
            std::string body = trim(stripped.substr(1));
            if (body.rfind("name:", 0) == 0) {
                cur.name = trim(body.substr(5));
                cur.explicit_name = !cur.name.empty();
            }
            continue;
        }

        std::vector<std::string> fields = split_tabs(raw);
        if (fields.size() > 3)
            throw ParseError("too many tab-separated fields", lineno, 1);
        std::string head = trim(fields[0]);
        PredPtr dom, req;
        try {
            if (fields.size() >= 2) dom = parse_predicate(fields[1]);
            if (fields.size() >= 3) req = parse_predicate(fields[2]);
        } catch (const ParseError& e) {
            throw ParseError(std::string("in predicate on line ") + std::to_string(lineno) +
                                 ": " + e.what(),
                             lineno, e.col);
        }

        size_t arrow = head.find("->");
        if (arrow != std::string::npos) {
            std::string src = trim(head.substr(0, arrow));
            std::string dst = trim(head.substr(arrow + 2));
            if (!valid_name(src) || !valid_name(dst))
                throw ParseError("malformed edge line", lineno, 1);
            for (const std::string* n : {&src, &dst}) {
                if (std::find(cur.nodes.begin(), cur.nodes.end(), *n) == cur.nodes.end())
                    cur.nodes.push_back(*n);
            }
            std::string tmp_id = "\tedge" + std::to_string(cur.edges.size());
            cur.edges.push_back({tmp_id, src, dst});
            if (dom || req) cur.preds.push_back({tmp_id, dom, req});
        } else {
            if (!valid_name(head)) throw ParseError("malformed line", lineno, 1);
            if (explicit_nodes.count(head))
                throw ParseError("duplicate node line for '" + head + "'", lineno, 1);
            explicit_nodes.insert(head);
            if (std::find(cur.nodes.begin(), cur.nodes.end(), head) == cur.nodes.end())
                cur.nodes.push_back(head);
            if (dom || req) cur.preds.push_back({head, dom, req});
        }
    }
    flush();
    return out;
}

std::string render_policy_file(const std::vector<PolicyGraph>& policies) {
    std::ostringstream out;
    bool first_policy = true;
    for (const auto& p : policies) {
        if (!first_policy) out << "\n";
        first_policy = false;
        if (p.explicit_name) out << "# name: " << p.name << "\n";
        for (const auto& n : p.nodes) {
            bool dom_true = p.domain_of(n)->is_bool_literal(true);
            bool req_true = p.requirement_of(n)->is_bool_literal(true);
            // Edge lines imply their endpoints; emit a node line only when
            // it carries a predicate or would otherwise be lost.
            if (dom_true && req_true && !p.is_isolated(n)) continue;
            out << n;
            if (!req_true)
                out << "\t" << render_predicate(p.domain_of(n)) << "\t"
                    << render_predicate(p.requirement_of(n));
            else
                out << "\t" << render_predicate(p.domain_of(n));
            out << "\n";
        }
        for (const auto& e : p.edges) {
            bool dom_true = p.domain_of(e.id)->is_bool_literal(true);
            bool req_true = p.requirement_of(e.id)->is_bool_literal(true);
            out << e.src << " -> " << e.dst;
            if (!req_true)
                out << "\t" << render_predicate(p.domain_of(e.id)) << "\t"
                    << render_predicate(p.requirement_of(e.id));
            else if (!dom_true)
                out << "\t" << render_predicate(p.domain_of(e.id));
            out << "\n";
        }
    }
    return out.str();
}

bool policies_equal(const PolicyGraph& a, const PolicyGraph& b) {
    if (a.explicit_name != b.explicit_name) return false;
    if (a.explicit_name && a.name != b.name) return false;
    std::set<std::string> an(a.nodes.begin(), a.nodes.end());
    std::set<std::string> bn(b.nodes.begin(), b.nodes.end());
    if (an != bn) return false;
    for (const auto& n : a.nodes) {
        if (!structurally_equal(a.domain_of(n), b.domain_of(n))) return false;
        if (!structurally_equal(a.requirement_of(n), b.requirement_of(n))) return false;
    }
    // Edges compare as a multiset of (src, dst, domain, requirement).
    if (a.edges.size() != b.edges.size()) return false;
    std::vector<bool> used(b.edges.size(), false);
    for (const auto& ea : a.edges) {
        bool found = false;
        for (size_t i = 0; i < b.edges.size(); ++i) {
            if (used[i]) continue;
            const auto& eb = b.edges[i];
            if (ea.src == eb.src && ea.dst == eb.dst &&
                structurally_equal(a.domain_of(ea.id), b.domain_of(eb.id)) &&
                structurally_equal(a.requirement_of(ea.id), b.requirement_of(eb.id))) {
                used[i] = true;
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

}  // namespace lasco
