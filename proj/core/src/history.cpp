#include "lasco/history.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace lasco {

std::vector<ObjectSnapshot> SystemHistory::all_snapshots() const {
    std::vector<ObjectSnapshot> out;
    for (const auto& [t, inst] : instances)
        out.insert(out.end(), inst.snapshots.begin(), inst.snapshots.end());
    return out;
}

std::vector<SystemEvent> SystemHistory::all_events() const {
    std::vector<SystemEvent> out;
    for (const auto& [t, inst] : instances)
        out.insert(out.end(), inst.events.begin(), inst.events.end());
    return out;
}

void SystemGraph::append(const std::vector<ObjectSnapshot>& snapshots,
                         const std::vector<SystemEvent>& events, bool check_endpoints) {
    if (snapshots.empty() && events.empty()) return;
    for (const auto& e : events) {
        if (event_index_.count(e.event_id))
            throw std::invalid_argument("duplicate event id: " + e.event_id);
    }
    auto endpoint_known = [&](const std::string& id) {
        if (by_object_.count(id)) return true;
        return std::any_of(snapshots.begin(), snapshots.end(),
                           [&](const ObjectSnapshot& s) { return s.object_id == id; });
    };
    if (check_endpoints) {
        for (const auto& e : events) {
            if (!endpoint_known(e.src))
                throw std::invalid_argument("event " + e.event_id +
                                            " references unknown object " + e.src);
            if (!endpoint_known(e.dst))
                throw std::invalid_argument("event " + e.event_id +
                                            " references unknown object " + e.dst);
        }
    }
    ++epoch_;
    for (const auto& s : snapshots) {
        size_t idx = snapshots_.size();
        snapshots_.push_back(s);
        snapshot_epochs_.push_back(epoch_);
        auto& vec = by_object_[s.object_id];
        vec.push_back(idx);
        std::stable_sort(vec.begin(), vec.end(), [&](size_t a, size_t b) {
            return snapshots_[a].time < snapshots_[b].time;
        });
    }
    for (const auto& e : events) {
        event_index_[e.event_id] = events_.size();
        events_.push_back(e);
        event_epochs_.push_back(epoch_);
    }
}

const SystemEvent* SystemGraph::event(const std::string& event_id) const {
    auto it = event_index_.find(event_id);
    return it == event_index_.end() ? nullptr : &events_[it->second];
}

bool SystemGraph::has_snapshot_at_or_before(const std::string& object_id,
                                            const Time& t) const {
    auto it = by_object_.find(object_id);
    if (it == by_object_.end()) return false;
    return !it->second.empty() && (snapshots_[it->second.front()].time <= t);
}

AttrSet SystemGraph::effective_attrs(const std::string& object_id, const Time& t) const {
    auto it = by_object_.find(object_id);
    if (it == by_object_.end())
        throw std::out_of_range("no snapshot of object " + object_id);
    AttrSet merged;
    bool any = false;
    for (size_t idx : it->second) {
        const ObjectSnapshot& s = snapshots_[idx];
        if (t < s.time) break;
        any = true;
        for (const auto& [k, v] : s.attrs) merged[k] = v;
    }
    if (!any)
        throw std::out_of_range("no snapshot of object " + object_id + " at or before " +
                                t.str());
    return merged;
}

SystemGraph build_system_graph(const SystemHistory& h,
                               std::optional<std::pair<Time, Time>> range) {
    SystemGraph g;
    std::vector<ObjectSnapshot> snaps;
    std::vector<SystemEvent> events;
    for (const auto& [t, inst] : h.instances) {
        if (range && (t < range->first || range->second < t)) continue;
        snaps.insert(snaps.end(), inst.snapshots.begin(), inst.snapshots.end());
        events.insert(events.end(), inst.events.begin(), inst.events.end());
    }
    // A range may keep an event while dropping its endpoints' snapshots;
    // such an event stays in the graph and simply matches nothing.
    g.append(snaps, events, /*check_endpoints=*/false);
    return g;
}

namespace {

struct LshLexer {
    const std::string& line;
    size_t i = 0;
    int lineno;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, lineno, static_cast<int>(i) + 1);
    }

    void skip_ws() {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    }

    bool done() {
        skip_ws();
        return i >= line.size();
    }

    std::string word() {
        skip_ws();
        size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (start == i) fail("expected field");
        return line.substr(start, i - start);
    }

    Value value() {
        skip_ws();
        if (i >= line.size()) fail("expected value");
        char c = line[i];
        if (c == '"') {
            size_t j = line.find('"', i + 1);
            if (j == std::string::npos) fail("unterminated string");
            std::string s = line.substr(i + 1, j - i - 1);
            i = j + 1;
            return Value(s);
        }
        if (c == '{') {
            ++i;
            ScalarSet set;
            skip_ws();
            if (i < line.size() && line[i] == '}') {
                ++i;
                return Value(std::move(set));
            }
            while (true) {
                Value v = value();
                if (!v.is_scalar()) fail("nested sets are not allowed");
                set.insert(v.as_scalar());
                skip_ws();
                if (i < line.size() && line[i] == ',') {
                    ++i;
                    continue;
                }
                if (i < line.size() && line[i] == '}') {
                    ++i;
                    return Value(std::move(set));
                }
                fail("expected ',' or '}' in set value");
            }
        }
        // bare token: number or boolean
        size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != ',' &&
               line[i] != '}')
            ++i;
        std::string tok = line.substr(start, i - start);
        if (tok == "true") return Value(true);
        if (tok == "false") return Value(false);
        try {
            size_t pos = 0;
            if (tok.find('.') != std::string::npos) {
                double d = std::stod(tok, &pos);
                if (pos == tok.size()) return Value(Number(d));
            } else {
                long long n = std::stoll(tok, &pos);
                if (pos == tok.size()) return Value(Number(static_cast<std::int64_t>(n)));
            }
        } catch (...) {
        }
        fail("malformed value literal '" + tok + "'");
    }
};

Time parse_time(LshLexer& lex) {
    Value v = lex.value();
    if (!v.is_number()) lex.fail("time must be a number");
    return v.as_number();
}

AttrSet parse_attrs(LshLexer& lex) {
    AttrSet attrs;
    while (!lex.done()) {
        size_t eq_start = lex.i;
        std::string rest = lex.line.substr(lex.i);
        size_t eq = rest.find('=');
        if (eq == std::string::npos) lex.fail("expected <attr>=<value>");
        std::string name = rest.substr(0, eq);
        // trim spaces around the name
        while (!name.empty() && (name.back() == ' ' || name.back() == '\t')) name.pop_back();
        size_t ns = name.find_first_not_of(" \t");
        name = ns == std::string::npos ? "" : name.substr(ns);
        if (!valid_name(name)) {
            lex.i = eq_start;
            lex.fail("malformed attribute name '" + name + "'");
        }
        lex.i = eq_start + eq + 1;
        Value v = lex.value();
        if (attrs.count(name)) lex.fail("duplicate attribute '" + name + "'");
        attrs.emplace(std::move(name), std::move(v));
    }
    return attrs;
}

}  // namespace

Value parse_lsh_value(const std::string& text) {
    LshLexer lex{text, 0, 1};
    Value v = lex.value();
    if (!lex.done()) throw ParseError("trailing input after value", 1, static_cast<int>(lex.i));
    return v;
}

std::optional<LshRecord> parse_lsh_record(const std::string& line, int lineno) {
    LshLexer lex{line, 0, lineno};
    if (lex.done()) return std::nullopt;
    if (line[lex.i] == '#') return std::nullopt;
    std::string kind = lex.word();
    if (kind == "snapshot") {
        Time t = parse_time(lex);
        std::string id = lex.word();
        if (!valid_name(id)) throw ParseError("malformed object id '" + id + "'", lineno, 1);
        AttrSet attrs = parse_attrs(lex);
        if (auto it = attrs.find("id"); it != attrs.end()) {
            if (!(it->second == Value(id)))
                throw ParseError("explicit id conflicts with object id", lineno, 1);
        }
        if (auto it = attrs.find("time"); it != attrs.end()) {
            if (!(it->second == Value(t)))
                throw ParseError("explicit time conflicts with snapshot time", lineno, 1);
        }
        attrs["id"] = Value(id);
        LshRecord r;
        r.snapshot = ObjectSnapshot{id, t, std::move(attrs)};
        return r;
    }
    if (kind == "event") {
        Time t = parse_time(lex);
        std::string id = lex.word();
        std::string src = lex.word();
        std::string arrow = lex.word();
        if (arrow != "->") throw ParseError("expected '->' in event line", lineno, 1);
        std::string dst = lex.word();
        if (!valid_name(id) || !valid_name(src) || !valid_name(dst))
            throw ParseError("malformed event line", lineno, 1);
        AttrSet attrs = parse_attrs(lex);
        if (auto it = attrs.find("time"); it != attrs.end()) {
            if (!(it->second == Value(t)))
                throw ParseError("explicit time conflicts with event time", lineno, 1);
        }
        if (auto it = attrs.find("id"); it != attrs.end()) {
            if (!(it->second == Value(id)))
                throw ParseError("explicit id conflicts with event id", lineno, 1);
        }
        attrs["time"] = Value(t);
        attrs["id"] = Value(id);
        LshRecord r;
        r.event = SystemEvent{id, src, dst, t, std::move(attrs)};
        return r;
    }
    throw ParseError("unknown record kind '" + kind + "'", lineno, 1);
}

SystemHistory parse_history(const std::string& text) {
    SystemHistory h;
    std::set<std::string> event_ids;
    // (object id, first snapshot time), for endpoint validation
    std::map<std::string, Time> first_snapshot;

    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    std::vector<SystemEvent> pending_events;
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        auto rec = parse_lsh_record(raw, lineno);
        if (!rec) continue;
        if (rec->snapshot) {
            ObjectSnapshot& s = *rec->snapshot;
            auto fit = first_snapshot.find(s.object_id);
            if (fit == first_snapshot.end() || s.time < fit->second)
                first_snapshot[s.object_id] = s.time;
            // An object appears once per instance: repeated lines for the
            // same (object, time) merge, later lines winning per attribute.
            auto& snaps = h.instances[s.time].snapshots;
            auto existing = std::find_if(snaps.begin(), snaps.end(), [&](const ObjectSnapshot& o) {
                return o.object_id == s.object_id;
            });
            if (existing != snaps.end()) {
                for (auto& [k, v] : s.attrs) existing->attrs[k] = v;
            } else {
                snaps.push_back(std::move(s));
            }
        } else {
            SystemEvent& e = *rec->event;
            if (!event_ids.insert(e.event_id).second)
                throw ParseError("duplicate event id '" + e.event_id + "'", lineno, 1);
            pending_events.push_back(std::move(e));
        }
    }
    for (auto& e : pending_events) {
        for (const std::string* obj : {&e.src, &e.dst}) {
            auto it = first_snapshot.find(*obj);
            if (it == first_snapshot.end() || e.time < it->second)
                throw ParseError("event " + e.event_id + " references object " + *obj +
                                     " with no snapshot at or before its time",
                                 1, 1);
        }
        h.instances[e.time].events.push_back(std::move(e));
    }
    return h;
}

std::string render_history(const SystemHistory& h) {
    std::ostringstream out;
    for (const auto& [t, inst] : h.instances) {
        for (const auto& s : inst.snapshots) {
            out << "snapshot " << t.str() << " " << s.object_id;
            for (const auto& [k, v] : s.attrs) {
                if (k == "id") continue;
                out << " " << k << "=" << v.str();
            }
            out << "\n";
        }
        for (const auto& e : inst.events) {
            out << "event " << t.str() << " " << e.event_id << " " << e.src << " -> "
                << e.dst;
            for (const auto& [k, v] : e.attrs) {
                if (k == "id" || k == "time") continue;
                out << " " << k << "=" << v.str();
            }
            out << "\n";
        }
    }
    return out.str();
}

}  // namespace lasco
