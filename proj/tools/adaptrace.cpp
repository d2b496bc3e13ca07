#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "adaptrace/core_semantics.hpp"
#include "adaptrace/dynamic_types.hpp"
#include "adaptrace/parse.hpp"
#include "adaptrace/preprocess.hpp"
#include "adaptrace/static_types.hpp"
#include "adaptrace/workload.hpp"

using namespace adaptrace;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRejected = 1;
constexpr int kExitUsage = 2;

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

unsigned long long default_seed() {
    if (const char* env = std::getenv("ADAPTRACE_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
        }
    }
    return 1;
}

struct LoadedScript {
    Script script;
    Preprocessed pre;
    ValueEnv static_env;
    DynEnv dyn_env;
};

// Parse + preprocess or fail with diagnostics.
std::optional<LoadedScript> load_script(const std::string& path, bool lint, int& exit_code) {
    auto text = read_file(path);
    if (!text) {
        std::cerr << "adaptrace: cannot read '" << path << "'\n";
        exit_code = kExitUsage;
        return std::nullopt;
    }
    LoadedScript out;
    try {
        out.script = parse_script(*text);
        out.pre = preprocess(out.script.formula);
    } catch (const ParseError& e) {
        std::cerr << path << ":" << format_error(e) << "\n";
        exit_code = kExitRejected;
        return std::nullopt;
    } catch (const PreprocessError& e) {
        std::cerr << path << ": " << e.what() << "\n";
        exit_code = kExitRejected;
        return std::nullopt;
    }
    if (lint) {
        for (const auto& w : out.pre.warnings) std::cerr << "warning: " << w.message << "\n";
        for (const auto& w : lint_blocking(out.pre.formula))
            std::cerr << "warning: " << w.message << "\n";
    }
    out.static_env = env_from_types(out.script.types);
    out.dyn_env = dyn_env_from_types(out.script.types);
    exit_code = kExitOk;
    return out;
}

bool uses_adaptation_syntax(const FPtr& f) {
    if (f->kind == FormulaKind::AdaptA || f->kind == FormulaKind::AdaptS) return true;
    if (f->kind == FormulaKind::Nec && f->mode != NecMode::Core) return true;
    bool found = false;
    if (f->left) found = found || uses_adaptation_syntax(f->left);
    if (f->right) found = found || uses_adaptation_syntax(f->right);
    return found;
}

std::vector<Value> trace_universe(const Script& s, const Trace& t) {
    std::set<Value> pids;
    for (const auto& name : s.pids) pids.insert(Value::pid(name));
    for (const auto& a : t)
        for (const auto& p : action_pids(a)) pids.insert(p);
    return {pids.begin(), pids.end()};
}

int cmd_typecheck(const std::string& path, bool derivation, bool lint, bool json_out) {
    int code;
    auto loaded = load_script(path, lint, code);
    if (!loaded) return code;
    TypeCheckResult r =
        typecheck({}, loaded->static_env, loaded->pre.formula, derivation);
    if (json_out) {
        nlohmann::json j;
        j["accepted"] = r.ok;
        if (!r.ok) {
            j["rule"] = r.rejection.rule;
            j["message"] = r.rejection.message;
        }
        if (derivation) j["derivation"] = r.derivation;
        std::cout << j.dump() << "\n";
    } else {
        if (derivation)
            for (const auto& line : r.derivation) std::cout << line << "\n";
        if (r.ok) {
            std::cout << "accepted\n";
        } else {
            std::cout << "rejected at " << r.rejection.rule << ": " << r.rejection.message
                      << "\n";
        }
    }
    return r.ok ? kExitOk : kExitRejected;
}

Workload make_workload(const std::string& name, bool faulty, int requests, int clients,
                       const std::vector<int>& malicious, bool external_view) {
    if (name == "incdec") return workload_incdec(faulty, requests, 40, !external_view);
    if (name == "webserver")
        return workload_webserver(clients, {malicious.begin(), malicious.end()});
    throw std::runtime_error("unknown workload '" + name + "' (incdec|webserver)");
}

int cmd_run(const std::string& path, const std::string& trace_path,
            const std::string& workload_name, bool faulty, int requests, int clients,
            const std::vector<int>& malicious, const std::string& mode_name,
            unsigned long long seed, bool unsafe, bool external_view, bool json_out) {
    int code;
    auto loaded = load_script(path, true, code);
    if (!loaded) return code;

    auto log_line = [&](const EngineEvent& ev) {
        nlohmann::json j;
        j["step"] = ev.step;
        j["rule"] = ev.rule;
        j["label"] = ev.label;
        if (!ev.env_delta.empty()) j["envDelta"] = ev.env_delta;
        if (!ev.used_delta.empty()) j["usedDelta"] = ev.used_delta;
        if (!ev.verdict.empty()) j["verdict"] = ev.verdict;
        std::cout << j.dump() << "\n";
    };

    PredicateTable preds = default_predicates();

    if (!trace_path.empty()) {
        auto text = read_file(trace_path);
        if (!text) {
            std::cerr << "adaptrace: cannot read '" << trace_path << "'\n";
            return kExitUsage;
        }
        Trace t;
        try {
            t = parse_trace(*text, loaded->script.pids);
        } catch (const ParseError& e) {
            std::cerr << trace_path << ":" << format_error(e) << "\n";
            return kExitRejected;
        }
        if (!uses_adaptation_syntax(loaded->pre.formula)) {
            CoreVerdict v = run_core(loaded->pre.formula, t, preds);
            const char* names[] = {"violated", "trivially-satisfied", "inconclusive"};
            const char* name = v.kind == CoreVerdictKind::Violated
                                   ? names[0]
                                   : (v.kind == CoreVerdictKind::TriviallySatisfied
                                          ? names[1]
                                          : names[2]);
            if (json_out) {
                nlohmann::json j;
                j["verdict"] = name;
                j["residual"] = to_string(v.residual);
                std::cout << j.dump() << "\n";
            } else {
                std::cout << "verdict: " << name << "\n";
            }
            return v.kind == CoreVerdictKind::Violated ? kExitRejected : kExitOk;
        }
        // The synchronization-safety gate concerns scripts that use
        // adaptation syntax themselves, not blocking modes introduced by the
        // synchronous-falsity encoding.
        TypeCheckResult tc = typecheck({}, loaded->static_env, loaded->pre.formula);
        bool gated = uses_adaptation_syntax(loaded->script.formula);
        if (gated && !tc.ok && !unsafe) {
            std::cerr << "refusing to run: rejected at " << tc.rejection.rule << ": "
                      << tc.rejection.message << " (pass --unsafe to explore anyway)\n";
            return kExitRejected;
        }
        SystemState sys = SystemState::all_unblocked(trace_universe(loaded->script, t));
        if (gated && !tc.ok && unsafe) {
            TypedConfiguration c{sys,
                                 {loaded->dyn_env, initial_scope(loaded->dyn_env),
                                  loaded->pre.formula}};
            ExplorationReport rep = dt_explore(c, t, 10000, preds);
            std::cout << (json_out ? rep.json() : rep.text());
            return kExitOk;
        }
        TypedConfiguration c{sys,
                             {loaded->dyn_env, initial_scope(loaded->dyn_env),
                              loaded->pre.formula}};
        EngineResult r = dt_run(c, t, preds, log_line);
        if (!json_out)
            std::cout << "adaptations applied: " << r.adaptations_applied << "\n";
        return r.verdict == EngineResult::Verdict::Violated ? kExitRejected : kExitOk;
    }

    // Workload-driven run: protocol simulation, then a step log replaying the
    // committed events through the reference engine.
    Workload w;
    try {
        w = make_workload(workload_name, faulty, requests, clients, malicious,
                          external_view);
    } catch (const std::exception& e) {
        std::cerr << "adaptrace: " << e.what() << "\n";
        return kExitUsage;
    }
    auto mode = instr_mode_from(mode_name);
    if (!mode) {
        std::cerr << "adaptrace: unknown mode '" << mode_name << "'\n";
        return kExitUsage;
    }
    TypeCheckResult tc = typecheck({}, loaded->static_env, loaded->pre.formula);
    if (*mode == InstrMode::RA && !tc.ok && !unsafe) {
        std::cerr << "refusing to run: rejected at " << tc.rejection.rule << ": "
                  << tc.rejection.message << " (pass --unsafe to explore anyway)\n";
        return kExitRejected;
    }

    InstrumentedSpec spec;
    try {
        spec = instrument(loaded->script.formula, *mode);
    } catch (const ModeConflict& e) {
        std::cerr << "mode conflict: " << e.what() << "\n";
        return kExitRejected;
    }

    if (!tc.ok && unsafe) {
        // Derive the workload's event trace without interference, then
        // explore the script against it and report error configurations.
        InstrumentedSpec plain;
        plain.mode = InstrMode::CA;
        plain.formula = f_tru();
        SimResult base = simulate_protocol(plain, w, seed, preds, {});
        std::vector<Value> universe;
        for (const auto& p : w.pids) universe.push_back(p);
        TypedConfiguration c{SystemState::all_unblocked(universe),
                             {loaded->dyn_env, initial_scope(loaded->dyn_env),
                              loaded->pre.formula}};
        ExplorationReport rep = dt_explore(c, base.event_log, 10000, preds);
        std::cout << (json_out ? rep.json() : rep.text());
        return kExitOk;
    }

    SimResult sim = simulate_protocol(spec, w, seed, preds, loaded->dyn_env);
    std::vector<Value> universe;
    for (const auto& p : w.pids) universe.push_back(p);
    TypedConfiguration c{SystemState::all_unblocked(universe),
                         {loaded->dyn_env, initial_scope(loaded->dyn_env),
                          loaded->pre.formula}};
    dt_run(c, sim.event_log, preds, log_line);
    std::cout << (json_out ? sim.stats.json() + "\n" : sim.stats.text());
    return sim.stats.violations > 0 && !unsafe ? kExitRejected : kExitOk;
}

int cmd_explore(const std::string& path, const std::string& trace_path, long budget,
                bool typed, bool json_out) {
    int code;
    auto loaded = load_script(path, true, code);
    if (!loaded) return code;
    auto text = read_file(trace_path);
    if (!text) {
        std::cerr << "adaptrace: cannot read '" << trace_path << "'\n";
        return kExitUsage;
    }
    Trace t;
    try {
        t = parse_trace(*text, loaded->script.pids);
    } catch (const ParseError& e) {
        std::cerr << trace_path << ":" << format_error(e) << "\n";
        return kExitRejected;
    }
    PredicateTable preds = default_predicates();
    SystemState sys = SystemState::all_unblocked(trace_universe(loaded->script, t));
    ExplorationReport rep;
    if (typed) {
        TypedConfiguration c{sys,
                             {loaded->dyn_env, initial_scope(loaded->dyn_env),
                              loaded->pre.formula}};
        rep = dt_explore(c, t, budget, preds);
    } else {
        Configuration c{sys, loaded->pre.formula};
        rep = explore(c, t, budget, preds);
    }
    std::cout << (json_out ? rep.json() : rep.text());
    return kExitOk;
}

int cmd_bench(int clients, int seeds, unsigned long long seed0, bool json_out) {
    PredicateTable preds = default_predicates();

    auto load = [&](const char* src) {
        Script s = parse_script(src);
        return s;
    };

    // Hybrid inc/dec property with synchronous detections.
    Script incdec_hybrid = load(
        "pids: i, j, k, h\n"
        "max Y. [i ? {inc, x:dat, y:upid}] (([j ! y . {res, w:dat}] ((if w = x + 1 then Y) "
        "& (if w > x + 1 then sff) & (if w < x + 1 then ff))) & ([_ ! y . err] sff))");
    // Hybrid webserver property: traversal requests fail synchronously.
    Script ws_hybrid = load(
        "pids: acceptor\n"
        "max X. [acceptor ? {hId:upid, next, _}]\n"
        "[hId ret {yaws, do_recv, 3, {ok, {http_req, 'GET', {abs_path, path:dat}, _}}}]\n"
        "[hId ret {yaws, do_recv, 3, {ok, h1:dat}}]\n"
        "[hId ret {yaws, do_recv, 3, {ok, h2:dat}}]\n"
        "[hId ret {yaws, do_recv, 3, {ok, h3:dat}}]\n"
        "[hId ret {yaws, do_recv, 3, {ok, h4:dat}}]\n"
        "[hId ret {yaws, do_recv, 3, {ok, h5:dat}}]\n"
        "[hId ret {yaws, do_recv, 3, {ok, h6:dat}}]\n"
        "[hId ret {yaws, do_recv, 3, {ok, http_eoh}}]\n"
        "if path = '/pic.png' or path = '/site.html'\n"
        "then ([hId call {yaws_sendfile, send, [_, path, _, _]}] X)\n"
        "else sff");

    std::vector<BenchCase> cases;
    // The plain invariant properties observe the service externally.
    cases.push_back({"incdec", workload_incdec(false, 3, 40, false),
                     incdec_hybrid.formula, dyn_env_from_types(incdec_hybrid.types)});
    cases.push_back({"webserver", workload_webserver(clients), ws_hybrid.formula,
                     dyn_env_from_types(ws_hybrid.types)});

    std::vector<unsigned long long> seedlist;
    for (int s = 0; s < seeds; ++s) seedlist.push_back(seed0 + static_cast<unsigned>(s));
    BenchReport rep = bench({InstrMode::CA, InstrMode::AMSD, InstrMode::SMSI}, cases,
                            seedlist, preds);
    std::cout << (json_out ? rep.json() : rep.text());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Runtime verification and adaptation for simulated actor systems"};
    app.require_subcommand(1);
    std::string format = "text";
    app.add_option("--format", format, "Output format (text|json)")
        ->check(CLI::IsMember({"text", "json"}));

    // typecheck ---------------------------------------------------------------
    auto* tc = app.add_subcommand("typecheck", "Statically check an adaptation script");
    std::string tc_script;
    bool tc_derivation = false, tc_nolint = false;
    tc->add_option("script", tc_script, "Script file")->required();
    tc->add_flag("--derivation", tc_derivation, "Print the typing derivation");
    tc->add_flag("--no-lint", tc_nolint, "Suppress blocking/release lint warnings");

    // run ----------------------------------------------------------------------
    auto* run = app.add_subcommand("run", "Run a script against a trace or workload");
    std::string run_script, run_trace, run_workload = "incdec", run_mode = "RA";
    bool run_faulty = false, run_unsafe = false, run_external = false;
    int run_requests = 3, run_clients = 1;
    std::vector<int> run_malicious;
    unsigned long long run_seed = default_seed();
    run->add_option("script", run_script, "Script file")->required();
    run->add_option("--trace", run_trace, "Trace file (one event per line)");
    run->add_option("--workload", run_workload, "Workload name (incdec|webserver)");
    run->add_flag("--faulty", run_faulty, "Fault-inject the inc/dec workload");
    run->add_option("--requests", run_requests, "Client requests (incdec)");
    run->add_option("--clients", run_clients, "Client count (webserver)");
    run->add_option("--malicious", run_malicious, "Malicious client indices (webserver)");
    run->add_option("--mode", run_mode, "Instrumentation mode (CA|SMSI|AMSD|RA)");
    run->add_option("--seed", run_seed, "Scheduler seed (default: ADAPTRACE_SEED or 1)");
    run->add_flag("--unsafe", run_unsafe,
                  "Explore and report error configurations instead of refusing "
                  "rejected scripts");
    run->add_flag("--external-view", run_external,
                  "Observe the inc/dec service externally (no internal forward "
                  "events)");

    // explore --------------------------------------------------------------------
    auto* ex = app.add_subcommand("explore", "Enumerate monitor/system interleavings");
    std::string ex_script, ex_trace;
    long ex_budget = 10000;
    bool ex_typed = false;
    ex->add_option("script", ex_script, "Script file")->required();
    ex->add_option("--trace", ex_trace, "Trace file")->required();
    ex->add_option("--budget", ex_budget, "State budget");
    ex->add_flag("--typed", ex_typed, "Explore with dynamic type checks");

    // bench ------------------------------------------------------------------------
    auto* be = app.add_subcommand("bench", "Synchronization-count benchmarking matrix");
    int be_clients = 5, be_seeds = 5;
    unsigned long long be_seed = default_seed();
    be->add_option("--clients", be_clients, "Webserver clients");
    be->add_option("--seeds", be_seeds, "Number of seeds");
    be->add_option("--seed", be_seed, "First seed");

    CLI11_PARSE(app, argc, argv);
    bool json_out = format == "json";

    try {
        if (tc->parsed()) return cmd_typecheck(tc_script, tc_derivation, !tc_nolint, json_out);
        if (run->parsed())
            return cmd_run(run_script, run_trace, run_workload, run_faulty, run_requests,
                           run_clients, run_malicious, run_mode, run_seed, run_unsafe,
                           run_external, json_out);
        if (ex->parsed()) return cmd_explore(ex_script, ex_trace, ex_budget, ex_typed, json_out);
        if (be->parsed()) return cmd_bench(be_clients, be_seeds, be_seed, json_out);
    } catch (const std::exception& e) {
        std::cerr << "adaptrace: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
