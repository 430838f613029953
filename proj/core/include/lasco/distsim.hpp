#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lasco/matcher.hpp"

namespace lasco {

/// A tree of named departments, each directly containing hosts. Hosts are
/// the system objects of the network model: a host's id and name attributes
/// both equal its (globally known) host name; every other attribute is known
/// only to the engine of the host's containing department.
struct Topology {
    struct Department {
        std::string name;
        std::string parent;  // empty for the root
        std::vector<std::string> children;
        std::vector<std::string> hosts;
        int depth = 0;
    };

    std::map<std::string, Department> departments;
    std::string root;
    std::map<std::string, std::string> host_dept;  // host -> containing department

    bool has_host(const std::string& h) const { return host_dept.count(h) > 0; }
    /// All hosts in the department's subtree.
    std::set<std::string> scope(const std::string& dept) const;
};

/// Indented text tree: one department per line, hosts as "host <name>"
/// children.
Topology parse_topology(const std::string& text);

enum class ReportKind { Snapshot, Event };

/// One LSH record tagged with the data source that observed it.
struct Report {
    ReportKind kind;
    std::string observed_by;  // host or department named by the "@" tag
    std::uint64_t arrival_order = 0;
    ObjectSnapshot snapshot;  // when kind == Snapshot
    SystemEvent event;        // when kind == Event

    const Time& time() const { return kind == ReportKind::Snapshot ? snapshot.time : event.time; }
};

/// Trace file: LSH records prefixed with "@<department-or-host>".
std::vector<Report> parse_trace(const std::string& text, const Topology& topo);

/// The merged global view of a trace (name attributes injected), for
/// centralized checking of the same activity.
SystemHistory trace_to_history(const std::vector<Report>& trace);

enum class NodeLocality { Local, NonLocal, General };
enum class EdgeLocality { Local, NonLocal, HalfLocal, General };

struct Locality {
    std::map<std::string, NodeLocality> node;
    std::map<std::string, EdgeLocality> edge;
};

/// A policy node anchored to a host name (conjunctive-position
/// `name = "h"` or `id = "h"` in its domain predicate) inherits that host's
/// locality; unanchored nodes are general. Edge locality derives from the
/// endpoints: local+local -> local, non-local+non-local -> non-local,
/// local+non-local -> half-local, anything involving a general node ->
/// general.
Locality classify_locality(const PolicyGraph& p, const std::set<std::string>& engine_scope,
                           const std::set<std::string>& known_hosts);

/// An endpoint of a matched policy edge whose domain predicate could not be
/// evaluated where the event was seen.
struct ContingentCondition {
    enum class End { Source, Destination };
    std::string policy_edge;
    End end;

    bool operator<(const ContingentCondition& o) const {
        if (policy_edge != o.policy_edge) return policy_edge < o.policy_edge;
        return end < o.end;
    }
    bool operator==(const ContingentCondition& o) const {
        return policy_edge == o.policy_edge && end == o.end;
    }
};

/// A partial match that may carry contingent endpoint obligations plus the
/// residual conditions of eagerly evaluated edge requirement predicates.
/// Never treated as complete while contingents remain.
struct ContingentMatch {
    PartialMatch base;
    std::set<ContingentCondition> contingents;
    std::map<std::string, VarConditions> carried;  // edge id -> requirement residual
};

std::string contingent_key(const ContingentMatch& m);

/// Merges two contingent matches for the same policy. A contingent condition
/// is discharged before the merge when the other match binds that policy
/// edge without listing the same condition (it evaluated that endpoint).
/// Returns nothing when the bases do not unify.
std::optional<ContingentMatch> combine_contingent(const ContingentMatch& a,
                                                  const ContingentMatch& b,
                                                  EvalLog* log = nullptr);

struct Alert {
    std::string policy;
    std::string department;
    ContingentMatch match;
    VarBindings bindings;
    std::vector<FailedPred> failed;
    Time time;
};

/// A message between engines: a contingent match for one policy.
struct MatchMessage {
    size_t policy_index;
    ContingentMatch match;
};

/// One department's engine: a reorder/dedup ingest path, a local system
/// graph, and per-policy pools of contingent matches indexed by bound
/// element. Owned by a single simulation; processed deterministically.
class EngineState {
public:
    EngineState(std::string department, const Topology* topo,
                const std::vector<PolicyGraph>* policies, bool linear_scan_pool = false);

    struct StepResult {
        std::vector<Alert> alerts;
        std::vector<MatchMessage> upward;
    };

    /// Ingests one time step's reports plus incoming contingent matches,
    /// growing the pools and evaluating every new match.
    StepResult step(const std::vector<Report>& batch, const std::vector<MatchMessage>& incoming,
                    const Time& now);

    const std::string& department() const { return dept_; }
    const SystemGraph& local_graph() const { return local_; }
    size_t pool_size(size_t policy_index) const { return pools_[policy_index].entries.size(); }

    /// New single-piece contingent matches for one policy from a batch of
    /// already-ingested reports (exposed for tests).
    std::vector<ContingentMatch> new_piece_matches(size_t policy_index,
                                                   const std::vector<const ObjectSnapshot*>& snaps,
                                                   const std::vector<const SystemEvent*>& events);

private:
    struct Pool {
        std::vector<ContingentMatch> entries;
        // piece element -> (bound system element key -> entry indices)
        std::map<std::string, std::map<std::string, std::vector<size_t>>> by_binding;
        std::map<std::string, std::vector<size_t>> unbound;  // piece element -> indices
    };

    std::vector<size_t> pool_candidates(const Pool& pool, const ContingentMatch& m) const;
    void pool_add(size_t policy_index, const ContingentMatch& m);
    bool only_nonlocal_remaining(size_t policy_index, const ContingentMatch& m) const;

    std::string dept_;
    const Topology* topo_;
    const std::vector<PolicyGraph>* policies_;
    bool linear_scan_pool_;
    std::set<std::string> scope_;
    std::vector<Locality> locality_;
    SystemGraph local_;
    std::set<std::string> seen_events_;  // redundant report elimination
    std::vector<Pool> pools_;
    std::vector<std::set<std::string>> seen_;  // per policy: processed match keys
};

/// Deterministic simulation driver: reports are grouped by time, delivered
/// to the engine of each endpoint's containing department (snapshots to the
/// object's department), and each time step is processed bottom-up so
/// messages reach quiescence within the step. Returns all alerts in
/// processing order.
std::vector<Alert> run_simulation(const Topology& topo,
                                  const std::vector<PolicyGraph>& policies,
                                  const std::vector<Report>& trace,
                                  bool linear_scan_pool = false);

}  // namespace lasco
