#pragma once

#include <set>
#include <string>
#include <vector>

#include "lasco/pred.hpp"

namespace lasco {

struct PolicyEdge {
    std::string id;   // unique within the policy; never collides with node names
    std::string src;  // node name
    std::string dst;  // node name
};

/// A policy graph: a directed graph whose nodes and edges each carry one
/// domain predicate and one requirement predicate (implicitly `True` when
/// absent in source text), plus the set of variables used anywhere.
/// Immutable after construction; build through `make_policy` or the file
/// parser so the invariants hold.
struct PolicyGraph {
    std::string name;
    bool explicit_name = false;  // name came from a "# name:" line
    std::vector<std::string> nodes;
    std::vector<PolicyEdge> edges;
    std::map<std::string, PredPtr> domain;       // element id -> predicate
    std::map<std::string, PredPtr> requirement;  // element id -> predicate
    std::set<std::string> vars;

    const PredPtr& domain_of(const std::string& element) const;
    const PredPtr& requirement_of(const std::string& element) const;
    bool is_isolated(const std::string& node) const;
    const PolicyEdge* edge(const std::string& id) const;
};

struct ElementPreds {
    std::string element;  // node name or edge id
    PredPtr domain;       // nullptr means True
    PredPtr requirement;  // nullptr means True
};

/// Builds a policy from explicit parts, filling implicit True predicates,
/// computing the variable set, and checking edge endpoints.
PolicyGraph make_policy(std::string name, std::vector<std::string> nodes,
                        std::vector<PolicyEdge> edges, std::vector<ElementPreds> preds,
                        bool explicit_name = false);

enum class PieceKind { Edge, IsolatedNode };

/// The atomic unit of matching: a policy edge (with its endpoints) or an
/// isolated policy node.
struct SemanticPiece {
    PieceKind kind;
    std::string element;  // edge id or node name

    bool operator==(const SemanticPiece& o) const {
        return kind == o.kind && element == o.element;
    }
    bool operator<(const SemanticPiece& o) const {
        if (kind != o.kind) return kind < o.kind;
        return element < o.element;
    }
};

/// One piece per edge plus one per isolated node.
std::vector<SemanticPiece> semantic_pieces(const PolicyGraph& p);

enum class Severity { Error, Warning };

struct PolicyDiagnostic {
    Severity severity;
    std::string code;
    std::string element;  // empty for policy-level diagnostics
    std::string message;
};

/// Static checks: every variable anchored by a conjunctive-position
/// `$v = <variable-free expr>` in some domain predicate; no attribute
/// operands in node requirement predicates; no statically certain type
/// misuse; warnings for unparenthesized &&/|| mixing.
std::vector<PolicyDiagnostic> lint_policy(const PolicyGraph& p);

bool has_lint_errors(const std::vector<PolicyDiagnostic>& diags);

/// Parses the tab-separated policy file format: one element per line,
/// policies separated by a blank line, '#' starting comment lines. Policies
/// are named `<source>:<index>` unless a "# name: X" comment overrides.
std::vector<PolicyGraph> parse_policy_file(const std::string& text,
                                           const std::string& source = "policy");

std::string render_policy_file(const std::vector<PolicyGraph>& policies);

/// Structural equality used by the round-trip tests: same nodes, edges,
/// predicates, and (when explicit) names.
bool policies_equal(const PolicyGraph& a, const PolicyGraph& b);

}  // namespace lasco
