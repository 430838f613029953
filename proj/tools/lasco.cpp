// Command-line front end: lint, batch/incremental checking, distributed
// simulation, and predicate debugging.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "lasco/distsim.hpp"
#include "lasco/matcher.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolations = 1;
constexpr int kExitError = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json value_to_json(const lasco::Value& v) {
    if (v.is_bool()) return v.as_bool();
    if (v.is_number())
        return v.as_number().is_int() ? json(v.as_number().as_int())
                                      : json(v.as_number().as_double());
    if (v.is_string()) return v.as_string();
    json arr = json::array();
    for (const auto& s : v.as_set()) arr.push_back(value_to_json(lasco::Value::from_scalar(s)));
    return arr;
}

json violation_to_json(const lasco::ViolationReport& v) {
    json j;
    j["type"] = "violation";
    j["policy"] = v.policy;
    json edges = json::object();
    for (const auto& [pe, ev] : v.match.ps.edge_map) edges[pe] = ev;
    j["edges"] = edges;
    json nodes = json::object();
    for (const auto& [pn, at] : v.match.ps.node_map)
        nodes[pn] = {{"object", at.object_id}, {"time", value_to_json(lasco::Value(at.time))}};
    j["nodes"] = nodes;
    json inc = json::object();
    for (const auto& [pn, b] : v.match.ps.incidental) inc[pn] = b.object_id;
    j["incidental"] = inc;
    json bindings = json::object();
    for (const auto& [var, val] : v.bindings) bindings[var] = value_to_json(val);
    j["bindings"] = bindings;
    json failed = json::array();
    for (const auto& f : v.failed)
        failed.push_back({{"element", f.element},
                          {"role", f.role == lasco::PredRole::Domain ? "domain" : "requirement"}});
    j["failed"] = failed;
    return j;
}

std::string violation_to_text(const lasco::ViolationReport& v) {
    std::ostringstream out;
    out << "violation " << v.policy << ":";
    for (const auto& [pe, ev] : v.match.ps.edge_map) out << " " << pe << "=" << ev;
    for (const auto& [pn, at] : v.match.ps.node_map)
        out << " " << pn << "=" << at.object_id << "@" << at.time.str();
    out << ";";
    bool first = true;
    for (const auto& [var, val] : v.bindings) {
        out << (first ? " " : ", ") << "$" << var << "=" << val.str();
        first = false;
    }
    out << "; failed:";
    for (const auto& f : v.failed)
        out << " " << f.element
            << (f.role == lasco::PredRole::Domain ? " (domain)" : " (requirement)");
    return out.str();
}

void sort_reports(std::vector<lasco::ViolationReport>& reports) {
    std::sort(reports.begin(), reports.end(),
              [](const lasco::ViolationReport& a, const lasco::ViolationReport& b) {
                  if (a.policy != b.policy) return a.policy < b.policy;
                  return lasco::match_key(a.match) < lasco::match_key(b.match);
              });
}

// Collapse matches that differ only in isolated-node snapshot times.
void collapse_isolated(std::vector<lasco::ViolationReport>& reports) {
    std::set<std::string> seen;
    std::vector<lasco::ViolationReport> kept;
    for (auto& r : reports) {
        std::ostringstream key;
        key << r.policy << "|";
        for (const auto& [pe, ev] : r.match.ps.edge_map) key << "e:" << pe << "=" << ev << ";";
        for (const auto& [pn, at] : r.match.ps.node_map)
            key << "n:" << pn << "=" << at.object_id << ";";
        for (const auto& [var, val] : r.bindings) key << "b:" << var << "=" << val.str() << ";";
        if (seen.insert(key.str()).second) kept.push_back(std::move(r));
    }
    reports = std::move(kept);
}

int cmd_lint(const std::string& policy_path) {
    std::string text = read_file(policy_path);
    auto policies = lasco::parse_policy_file(text, policy_path);
    if (policies.empty()) std::cout << "warning: " << policy_path << ": zero policies\n";
    bool errors = false;
    for (const auto& p : policies) {
        for (const auto& d : lasco::lint_policy(p)) {
            bool err = d.severity == lasco::Severity::Error;
            errors = errors || err;
            std::cout << (err ? "error" : "warning") << " [" << d.code << "] " << p.name;
            if (!d.element.empty()) std::cout << " (" << d.element << ")";
            std::cout << ": " << d.message << "\n";
        }
    }
    return errors ? kExitError : kExitOk;
}

int cmd_check(const std::string& policy_path, const std::string& history_path,
              bool incremental, const std::string& format, bool collapse) {
    auto policies = lasco::parse_policy_file(read_file(policy_path), policy_path);
    lasco::SystemHistory history = lasco::parse_history(read_file(history_path));
    for (const auto& p : policies) {
        if (lasco::has_lint_errors(lasco::lint_policy(p))) {
            std::cerr << "error: policy '" << p.name << "' fails lint; run `lasco lint`\n";
            return kExitError;
        }
    }

    std::vector<lasco::ViolationReport> reports;
    if (!incremental) {
        lasco::SystemGraph g = lasco::build_system_graph(history);
        for (const auto& p : policies)
            for (auto& v : lasco::find_violations(p, g)) reports.push_back(std::move(v));
    } else {
        // Feed the history one instance at a time through the cache path.
        lasco::SystemGraph g;
        std::vector<lasco::IncrementalCache> caches(policies.size());
        for (const auto& [t, inst] : history.instances) {
            g.append(inst.snapshots, inst.events);
            for (size_t i = 0; i < policies.size(); ++i)
                for (auto& v : lasco::find_violations_incremental(policies[i], g, caches[i]))
                    reports.push_back(std::move(v));
        }
    }
    if (collapse) collapse_isolated(reports);
    sort_reports(reports);
    for (const auto& r : reports) {
        if (format == "structured")
            std::cout << violation_to_json(r).dump() << "\n";
        else
            std::cout << violation_to_text(r) << "\n";
    }
    if (format == "text")
        std::cout << reports.size() << " violation" << (reports.size() == 1 ? "" : "s") << "\n";
    return reports.empty() ? kExitOk : kExitViolations;
}

int cmd_simulate(const std::string& topo_path, const std::string& policy_path,
                 const std::string& trace_path, const std::string& format) {
    lasco::Topology topo = lasco::parse_topology(read_file(topo_path));
    auto policies = lasco::parse_policy_file(read_file(policy_path), policy_path);
    auto trace = lasco::parse_trace(read_file(trace_path), topo);
    auto alerts = lasco::run_simulation(topo, policies, trace);
    for (const auto& a : alerts) {
        if (format == "structured") {
            json j;
            j["type"] = "alert";
            j["policy"] = a.policy;
            j["department"] = a.department;
            j["time"] = value_to_json(lasco::Value(a.time));
            json edges = json::object();
            for (const auto& [pe, ev] : a.match.base.ps.edge_map) edges[pe] = ev;
            j["edges"] = edges;
            json bindings = json::object();
            for (const auto& [var, val] : a.bindings) bindings[var] = value_to_json(val);
            j["bindings"] = bindings;
            std::cout << j.dump() << "\n";
            continue;
        }
        std::cout << "alert " << a.policy << " at " << a.department << " t=" << a.time.str()
                  << ":";
        for (const auto& [pe, ev] : a.match.base.ps.edge_map) std::cout << " " << pe << "=" << ev;
        for (const auto& [pn, at] : a.match.base.ps.node_map)
            std::cout << " " << pn << "=" << at.object_id << "@" << at.time.str();
        bool first = true;
        for (const auto& [var, val] : a.bindings) {
            std::cout << (first ? "; " : ", ") << "$" << var << "=" << val.str();
            first = false;
        }
        std::cout << "\n";
    }
    if (format == "text")
        std::cout << alerts.size() << " alert" << (alerts.size() == 1 ? "" : "s") << "\n";
    return alerts.empty() ? kExitOk : kExitViolations;
}

lasco::Value parse_cli_value(const std::string& text) {
    if (lasco::valid_name(text) && text != "true" && text != "false") {
        // bare-word sugar for strings, so shells need no nested quotes
        bool numeric = text.find_first_not_of("0123456789.") == std::string::npos;
        if (!numeric) return lasco::Value(text);
    }
    return lasco::parse_lsh_value(text);
}

int cmd_pred(const std::string& expr, const std::vector<std::string>& attr_args,
             const std::vector<std::string>& bind_args) {
    lasco::PredPtr p = lasco::parse_predicate(expr);
    lasco::AttrSet attrs;
    for (const auto& a : attr_args) {
        size_t eq = a.find('=');
        if (eq == std::string::npos) throw std::runtime_error("expected k=v in --attrs");
        attrs[a.substr(0, eq)] = parse_cli_value(a.substr(eq + 1));
    }
    lasco::VarBindings binds;
    for (const auto& b : bind_args) {
        size_t eq = b.find('=');
        if (eq == std::string::npos) throw std::runtime_error("expected v=val in --bind");
        std::string name = b.substr(0, eq);
        if (!name.empty() && name[0] == '$') name = name.substr(1);
        binds[name] = parse_cli_value(b.substr(eq + 1));
    }
    lasco::EvalLog log;
    lasco::VarConditions c = lasco::eval_pred(p, attrs, binds, &log);
    std::cout << "bindings:";
    for (const auto& [var, val] : c.bindings) std::cout << " $" << var << "=" << val.str();
    std::cout << "\ncondition: " << lasco::render_predicate(c.condition) << "\n";
    for (const auto& w : log.warnings) std::cout << "warning: " << w << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LaSCO policy engine"};
    app.require_subcommand(1);

    std::string policy_path, history_path, topo_path, trace_path, expr;
    std::string format = "text";
    bool incremental = false;
    bool collapse = false;
    std::vector<std::string> attr_args, bind_args;

    auto* lint = app.add_subcommand("lint", "Check a policy file for static errors");
    lint->add_option("policy", policy_path, "policy file")->required();

    auto* check = app.add_subcommand("check", "Report policy violations in a history");
    check->add_option("policy", policy_path, "policy file")->required();
    check->add_option("history", history_path, "history file (LSH)")->required();
    check->add_flag("--incremental-replay", incremental,
                    "feed the history instance by instance through the incremental engine");
    check->add_option("--format", format, "text|structured")
        ->check(CLI::IsMember({"text", "structured"}));
    check->add_flag("--collapse-isolated", collapse,
                    "report per-object isolated-node matches once");

    auto* simulate = app.add_subcommand("simulate", "Run the distributed enforcement simulator");
    simulate->add_option("topology", topo_path, "department tree file")->required();
    simulate->add_option("policy", policy_path, "policy file")->required();
    simulate->add_option("trace", trace_path, "tagged LSH trace file")->required();
    simulate->add_option("--format", format, "text|structured")
        ->check(CLI::IsMember({"text", "structured"}));

    auto* pred = app.add_subcommand("pred", "Evaluate one predicate against attributes");
    pred->add_option("expression", expr, "predicate text")->required();
    pred->add_option("--attrs", attr_args, "attribute values, k=v");
    pred->add_option("--bind", bind_args, "variable bindings, v=val");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (lint->parsed()) return cmd_lint(policy_path);
        if (check->parsed())
            return cmd_check(policy_path, history_path, incremental, format, collapse);
        if (simulate->parsed()) return cmd_simulate(topo_path, policy_path, trace_path, format);
        if (pred->parsed()) return cmd_pred(expr, attr_args, bind_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
