#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lasco/pred.hpp"
#include "lasco/value.hpp"

namespace lasco {

/// Times are plain numbers: monotonically increasing and synchronized is the
/// only contract.
using Time = Number;

struct TimeLess {
    bool operator()(const Time& a, const Time& b) const { return a < b; }
};

struct ObjectSnapshot {
    std::string object_id;
    Time time;
    AttrSet attrs;  // always carries id = object_id
};

struct SystemEvent {
    std::string event_id;
    std::string src;
    std::string dst;
    Time time;
    AttrSet attrs;  // always carries time and id
};

struct SystemInstance {
    std::vector<ObjectSnapshot> snapshots;
    std::vector<SystemEvent> events;
};

/// Time-ordered sequence of system instances.
struct SystemHistory {
    std::map<Time, SystemInstance, TimeLess> instances;

    bool empty() const { return instances.empty(); }
    std::vector<ObjectSnapshot> all_snapshots() const;
    std::vector<SystemEvent> all_events() const;
};

using Epoch = std::uint64_t;

/// A time-stamped system node: one object snapshot.
struct NodeAt {
    std::string object_id;
    Time time;

    bool operator==(const NodeAt& o) const {
        return object_id == o.object_id && time == o.time;
    }
    bool operator<(const NodeAt& o) const {
        if (object_id != o.object_id) return object_id < o.object_id;
        return time < o.time;
    }
};

/// The graph view of a history: snapshots as nodes, events as edges. Grows
/// by append only; each non-empty batch stamps its items with a fresh epoch
/// so incremental matching can identify new material. Single writer; already
/// ingested epochs never change.
class SystemGraph {
public:
    SystemGraph() = default;

    /// Appends a batch, stamping every item with a fresh epoch. Duplicate
    /// event ids are rejected; an event endpoint must already be known or
    /// appear in this batch (unless `check_endpoints` is cleared, as the
    /// range-filtered graph view does).
    void append(const std::vector<ObjectSnapshot>& snapshots,
                const std::vector<SystemEvent>& events, bool check_endpoints = true);

    const std::vector<ObjectSnapshot>& nodes() const { return snapshots_; }
    const std::vector<SystemEvent>& edges() const { return events_; }
    Epoch node_epoch(size_t i) const { return snapshot_epochs_[i]; }
    Epoch edge_epoch(size_t i) const { return event_epochs_[i]; }
    Epoch epoch() const { return epoch_; }

    const SystemEvent* event(const std::string& event_id) const;

    bool has_snapshot_at_or_before(const std::string& object_id, const Time& t) const;

    /// Attribute view of an object at a time: attribute-level last-write-wins
    /// over all snapshots with snapshot.time <= t. Throws when the object has
    /// no snapshot at or before t.
    AttrSet effective_attrs(const std::string& object_id, const Time& t) const;

private:
    std::vector<ObjectSnapshot> snapshots_;
    std::vector<SystemEvent> events_;
    std::vector<Epoch> snapshot_epochs_;
    std::vector<Epoch> event_epochs_;
    // object id -> indices into snapshots_, kept sorted by (time, index)
    std::map<std::string, std::vector<size_t>> by_object_;
    std::map<std::string, size_t> event_index_;
    Epoch epoch_ = 0;
};

/// Builds the graph view for the times in the given closed range (all times
/// by default). Everything lands in epoch 0... epoch 1; the epoch counter
/// advances once for the whole build.
SystemGraph build_system_graph(const SystemHistory& h,
                               std::optional<std::pair<Time, Time>> range = std::nullopt);

/// Parses the LSH line format:
///   snapshot <time> <object-id> <attr>=<value> ...
///   event <time> <event-id> <src-id> -> <dst-id> <attr>=<value> ...
/// '#' starts a comment line; values are double-quoted strings, decimal
/// numbers, true/false, or {v1,v2,...} sets. The id attribute (and time, for
/// events) is implicit; stating it explicitly with a conflicting value is an
/// error. Lines may arrive in any time order.
SystemHistory parse_history(const std::string& text);

std::string render_history(const SystemHistory& h);

/// Parses a single LSH value literal (also used by the CLI).
Value parse_lsh_value(const std::string& text);

/// One parsed LSH line: a snapshot or an event.
struct LshRecord {
    std::optional<ObjectSnapshot> snapshot;
    std::optional<SystemEvent> event;
};

/// Parses one LSH line; nullopt for blank and comment lines. Does not check
/// cross-record constraints (duplicate ids, endpoint snapshots).
std::optional<LshRecord> parse_lsh_record(const std::string& line, int lineno = 1);

}  // namespace lasco
