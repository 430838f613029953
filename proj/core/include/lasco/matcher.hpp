#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lasco/eval.hpp"
#include "lasco/history.hpp"
#include "lasco/policy.hpp"

namespace lasco {

/// Object bound to a non-isolated policy node via its matched edges, with
/// the instants at which adjacent edges matched. Two partial matches sharing
/// a policy node must agree on the object (times may differ).
struct IncidentalBinding {
    std::string object_id;
    std::set<Time, TimeLess> times;
};

/// Policy-to-system bindings: edges to events (one-to-one), isolated nodes
/// to time-stamped object snapshots (one-to-one), plus incidental node
/// bindings recorded as edges match.
struct PsMap {
    std::map<std::string, std::string> edge_map;           // policy edge -> event id
    std::map<std::string, NodeAt> node_map;                // isolated node -> snapshot
    std::map<std::string, IncidentalBinding> incidental;   // policy node -> object
};

struct PartialMatch {
    PsMap ps;
    VarConditions conds;
};

/// Stable identity string for a match: its ps map plus bindings. Used for
/// set comparisons and deduplication.
std::string match_key(const PartialMatch& m);

bool is_complete(const PolicyGraph& p, const PartialMatch& m);

/// Whether two partial matches can merge: ps maps consistent (including
/// one-to-one-ness and incidental agreement) and conditions unifiable.
/// On success `out` holds the unification.
bool unify_matches(const PartialMatch& a, const PartialMatch& b, PartialMatch& out,
                   EvalLog* log = nullptr);

struct MatchOptions {
    /// Exhaustive candidate lists per policy edge / isolated node; when a
    /// piece has a hint, only the listed elements are considered.
    std::map<std::string, std::vector<std::string>> edge_hints;
    std::map<std::string, std::vector<NodeAt>> node_hints;
    /// Events sharing this attribute's value form a same-event set: matches
    /// differing only by a swap within a set are reported once.
    std::optional<std::string> same_event_attr;
    /// Consider only elements with epoch strictly greater than this.
    std::optional<Epoch> new_only;
};

/// Def-for-def aliases of predicate evaluation for pattern nodes and edges.
VarConditions match_node(const PredPtr& pred, const AttrSet& attrs, const VarBindings& b,
                         EvalLog* log = nullptr);
VarConditions match_edge(const PredPtr& pred, const AttrSet& attrs, const VarBindings& b,
                         EvalLog* log = nullptr);

/// Merged conditions of: edge predicate vs event attributes, source node
/// predicate vs the source's effective attributes at the event time, and
/// likewise for the destination. ({}, False) when an endpoint has no
/// snapshot at or before the event time.
VarConditions match_edge_area(const PolicyEdge& pe, const SystemEvent& ev,
                              const std::map<std::string, PredPtr>& preds,
                              const SystemGraph& g, const VarBindings& b,
                              EvalLog* log = nullptr);

using InitialMatches = std::map<SemanticPiece, std::vector<PartialMatch>>;

/// One single-piece partial match per (piece, candidate) whose conditions
/// may be satisfiable.
InitialMatches initial_matches(const PolicyGraph& p, const SystemGraph& g,
                               const MatchOptions& opts = {}, EvalLog* log = nullptr);

/// Search order: connected components by descending piece count (pieces of a
/// component contiguous), within a component ascending by initial-match
/// count, isolated nodes last ascending by count; ties in stable element-id
/// order.
std::vector<SemanticPiece> order_pieces(const PolicyGraph& p,
                                        const std::map<SemanticPiece, size_t>& counts);

struct GrowStats {
    std::uint64_t combine_attempts = 0;  // accumulated-and-initial combinations tried
};

/// Depth-first growth per the engine algorithm: every complete match built
/// from one initial match per piece, keeping only unifiable branches. The
/// graph is consulted only when `same_event_attr` is set (to read each
/// event's set id for deduplication).
std::vector<PartialMatch> grow_matches(const PolicyGraph& p, const InitialMatches& initial,
                                       const std::vector<SemanticPiece>& order,
                                       const std::optional<std::string>& same_event_attr = {},
                                       const SystemGraph* g = nullptr,
                                       GrowStats* stats = nullptr, EvalLog* log = nullptr);

/// All complete domain matches of the policy against the graph.
std::vector<PartialMatch> find_matches(const PolicyGraph& p, const SystemGraph& g,
                                       const MatchOptions& opts = {}, GrowStats* stats = nullptr,
                                       EvalLog* log = nullptr);

enum class PredRole { Domain, Requirement };

struct FailedPred {
    std::string element;
    PredRole role;
};

struct ViolationReport {
    std::string policy;
    PartialMatch match;
    VarBindings bindings;  // the complete bindings of the match
    std::vector<FailedPred> failed;
};

/// Domain matches whose requirement fails: edge requirement predicates are
/// evaluated with the bound event's attributes plus the match bindings, node
/// requirement predicates with the bindings alone. Throws when the policy
/// has lint errors.
std::vector<ViolationReport> find_violations(const PolicyGraph& p, const SystemGraph& g,
                                             const MatchOptions& opts = {},
                                             EvalLog* log = nullptr);

/// Initial-match cache for incremental checking of a growing graph. Valid
/// for one (policy, graph) pair; discard on any policy edit.
struct IncrementalCache {
    Epoch watermark = 0;
    InitialMatches initial;
    std::set<std::string> reported_sets;  // same-event-set keys already reported
};

/// Exactly the violations involving at least one element appended after the
/// cache watermark. Appends are expected in nondecreasing instance order;
/// the concatenation of incremental results over an append sequence then
/// equals the batch result on the final graph.
std::vector<ViolationReport> find_violations_incremental(const PolicyGraph& p,
                                                         const SystemGraph& g,
                                                         IncrementalCache& cache,
                                                         const MatchOptions& opts = {},
                                                         EvalLog* log = nullptr);

/// True iff any policy in the set has at least one violation.
bool check_composition(const std::vector<PolicyGraph>& ps, const SystemGraph& g);

}  // namespace lasco
