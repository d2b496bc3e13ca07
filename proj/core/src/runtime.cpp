#include "adaptrace/runtime.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace adaptrace {

// ---- SystemState ------------------------------------------------------------

SystemState SystemState::all_unblocked(const std::vector<Value>& pids) {
    SystemState s;
    for (const auto& p : pids) s.procs[p] = ProcStatus::Unblocked;
    return s;
}

bool SystemState::blocked(const Value& pid) const {
    auto it = procs.find(pid);
    return it != procs.end() && it->second == ProcStatus::Blocked;
}

std::string SystemState::str() const {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (const auto& [p, st] : procs) {
        if (!first) os << ", ";
        first = false;
        os << to_string(p) << (st == ProcStatus::Blocked ? ":blocked" : ":running");
    }
    os << '}';
    return os.str();
}

bool operator==(const SystemState& a, const SystemState& b) { return a.procs == b.procs; }

// ---- MonLabel ---------------------------------------------------------------

MonLabel MonLabel::tau() { return MonLabel{}; }
MonLabel MonLabel::sys(Action a) {
    MonLabel l;
    l.kind = MonLabelKind::Sys;
    l.act = std::move(a);
    return l;
}
MonLabel MonLabel::adapt_async(std::vector<Value> refs) {
    MonLabel l;
    l.kind = MonLabelKind::AdA;
    l.refs = std::move(refs);
    return l;
}
MonLabel MonLabel::adapt_sync(AdaptKind k, std::vector<Value> refs) {
    MonLabel l;
    l.kind = MonLabelKind::AdS;
    l.akind = k;
    l.refs = std::move(refs);
    return l;
}
MonLabel MonLabel::release(std::vector<Value> refs) {
    MonLabel l;
    l.kind = MonLabelKind::Rel;
    l.refs = std::move(refs);
    return l;
}
MonLabel MonLabel::block(std::vector<Value> refs) {
    MonLabel l;
    l.kind = MonLabelKind::Blk;
    l.refs = std::move(refs);
    return l;
}

std::string MonLabel::str() const {
    auto refs_str = [&] {
        std::string s = "(";
        for (size_t i = 0; i < refs.size(); ++i) {
            if (i) s += ",";
            s += to_string(refs[i]);
        }
        return s + ")";
    };
    switch (kind) {
        case MonLabelKind::Tau: return "tau";
        case MonLabelKind::Sys: return "sys " + to_string(act);
        case MonLabelKind::AdA: return "adaptA" + refs_str();
        case MonLabelKind::AdS: return std::string(to_string(akind)) + refs_str();
        case MonLabelKind::Rel: return "release" + refs_str();
        case MonLabelKind::Blk: return "block" + refs_str();
    }
    return "?";
}

// ---- monitor transitions -------------------------------------------------------

namespace {

std::optional<std::vector<Value>> closed_refs(const RefList& rl) {
    std::vector<Value> out;
    for (const auto& r : rl) {
        if (r.is_var) return std::nullopt;  // must be substituted away before acting
        out.push_back(r.val);
    }
    return out;
}

std::vector<Value> closed_refs_or_throw(const RefList& rl, const char* what) {
    auto v = closed_refs(rl);
    if (!v) throw EvalError(std::string("open actor reference in a ") + what + " list: " +
                            to_string(rl));
    return *v;
}

}  // namespace

std::vector<std::pair<MonLabel, FPtr>> mon_steps(const FPtr& f, const PredicateTable& preds) {
    std::vector<std::pair<MonLabel, FPtr>> out;
    switch (f->kind) {
        case FormulaKind::AdaptA: {
            auto refs = closed_refs_or_throw(f->adaptees, "adaptation");
            out.emplace_back(MonLabel::adapt_async(refs), f_release(f->releases, f->left));
            return out;
        }
        case FormulaKind::AdaptS: {
            auto refs = closed_refs_or_throw(f->adaptees, "adaptation");
            out.emplace_back(MonLabel::adapt_sync(f->akind, refs),
                             f_release(f->releases, f->left));
            return out;
        }
        case FormulaKind::Release: {
            auto refs = closed_refs_or_throw(f->adaptees, "release");
            out.emplace_back(MonLabel::release(refs), f->left);
            return out;
        }
        case FormulaKind::Block: {
            auto refs = closed_refs_or_throw(f->adaptees, "block");
            out.emplace_back(MonLabel::block(refs), f->left);
            return out;
        }
        case FormulaKind::If:
            out.emplace_back(MonLabel::tau(),
                             eval_bool(f->cond, preds) ? f->left : f->right);
            return out;
        case FormulaKind::Max:
            out.emplace_back(MonLabel::tau(), subst_formula_var(f->left, f->var, f));
            return out;
        case FormulaKind::Clear:
            out.emplace_back(MonLabel::tau(), f->left);
            return out;
        case FormulaKind::And: {
            for (auto& [l, g] : mon_steps(f->left, preds))
                out.emplace_back(l, f_and(g, f->right));
            for (auto& [l, g] : mon_steps(f->right, preds))
                out.emplace_back(l, f_and(f->left, g));
            return out;
        }
        default: return out;
    }
}

std::optional<FPtr> mon_observe(const FPtr& f, const Action& a) {
    switch (f->kind) {
        case FormulaKind::Tru: return f_tru();
        case FormulaKind::Fls: return f_fls();
        case FormulaKind::Nec: {
            if (auto s = match_patterns(f->pat, a)) {
                FPtr cont = apply_subst(f->left, *s);
                if (f->mode == NecMode::Blocking)
                    return f_block({Ref::value(subject_pid(a))}, cont);
                return cont;
            }
            if (f->mode == NecMode::Core) return f_tru();
            return f_release(f->releases, f_tru());
        }
        case FormulaKind::And: {
            auto l = mon_observe(f->left, a);
            if (!l) return std::nullopt;
            auto r = mon_observe(f->right, a);
            if (!r) return std::nullopt;
            return f_and(*l, *r);
        }
        default: return std::nullopt;
    }
}

std::optional<SystemState> sys_steps(const SystemState& s, const MonLabel& l) {
    switch (l.kind) {
        case MonLabelKind::Tau: return s;
        case MonLabelKind::Sys: {
            Value subj = subject_pid(l.act);
            if (!s.contains(subj) || s.blocked(subj)) return std::nullopt;
            for (const auto& p : action_pids(l.act))
                if (!s.contains(p)) return std::nullopt;
            return s;
        }
        case MonLabelKind::Blk: {
            // Suspension is a state, not a counter: blocking an already
            // suspended pid is a no-op (the instrumentation keys one nonce
            // per actor).
            SystemState out = s;
            for (const auto& p : l.refs) {
                auto it = out.procs.find(p);
                if (it == out.procs.end()) return std::nullopt;
                it->second = ProcStatus::Blocked;
            }
            return out;
        }
        case MonLabelKind::Rel: {
            SystemState out = s;
            for (const auto& p : l.refs) {
                auto it = out.procs.find(p);
                if (it == out.procs.end() || it->second == ProcStatus::Unblocked)
                    return std::nullopt;
                it->second = ProcStatus::Unblocked;
            }
            return out;
        }
        case MonLabelKind::AdA: {
            for (const auto& p : l.refs)
                if (!s.contains(p)) return std::nullopt;
            return s;
        }
        case MonLabelKind::AdS: {
            for (const auto& p : l.refs)
                if (!s.contains(p) || !s.blocked(p)) return std::nullopt;
            return s;
        }
    }
    return std::nullopt;
}

SystemState sys_spawn(const SystemState& s, const Value& pid) {
    SystemState out = s;
    out.procs[pid] = ProcStatus::Unblocked;
    return out;
}

std::vector<ConfigStep> config_steps(const Configuration& c,
                                     const std::optional<Action>& pending,
                                     const PredicateTable& preds) {
    std::vector<ConfigStep> out;
    auto internal = mon_steps(c.mon, preds);
    if (!internal.empty()) {
        for (auto& [label, g] : internal) {
            if (label.kind == MonLabelKind::Tau) {
                out.push_back({{c.sys, struct_eq_normalize(g)}, "iMon", label});
            } else if (auto s2 = sys_steps(c.sys, label)) {
                out.push_back({{*s2, struct_eq_normalize(g)}, "iAda", label});
            }
            // A refused interaction yields no successor; is_error flags it.
        }
        return out;
    }
    if (!pending) return out;
    MonLabel evt = MonLabel::sys(*pending);
    auto s2 = sys_steps(c.sys, evt);
    if (!s2) return out;  // suspended subject: the event cannot happen yet
    if (auto g = mon_observe(c.mon, *pending)) {
        out.push_back({{*s2, struct_eq_normalize(*g)}, "iAct", evt});
    } else {
        out.push_back({{*s2, f_tru()}, "iTrm", evt});
    }
    return out;
}

bool is_error(const Configuration& c, const PredicateTable& preds) {
    for (const auto& [label, g] : mon_steps(c.mon, preds)) {
        (void)g;
        if (label.kind != MonLabelKind::AdS && label.kind != MonLabelKind::Rel) continue;
        if (!sys_steps(c.sys, label)) return true;
    }
    return false;
}

// ---- exploration -----------------------------------------------------------------

namespace {

struct Node {
    SystemState sys;
    FPtr mon;
    size_t pos;
    long parent;       // index into nodes, -1 for root
    std::string move;  // description of the edge from parent
};

std::string state_key(const Node& n) {
    return n.sys.str() + "|" + to_string(n.mon) + "|" + std::to_string(n.pos);
}

Witness witness_for(const std::vector<Node>& nodes, long idx) {
    std::vector<std::string> steps;
    for (long i = idx; i >= 0 && nodes[i].parent >= 0; i = nodes[i].parent)
        steps.push_back(nodes[i].move);
    std::reverse(steps.begin(), steps.end());
    for (size_t i = 0; i < steps.size(); ++i)
        steps[i] = std::to_string(i + 1) + ": " + steps[i];
    Witness w;
    w.steps = std::move(steps);
    w.final_state = nodes[idx].sys.str() + " |> " + to_string(nodes[idx].mon);
    return w;
}

}  // namespace

ExplorationReport explore(const Configuration& c, const Trace& t, long budget,
                          const PredicateTable& preds) {
    ExplorationReport rep;
    std::vector<Node> nodes;
    std::unordered_map<std::string, long> visited;
    std::deque<long> frontier;

    Node root{c.sys, struct_eq_normalize(c.mon), 0, -1, ""};
    visited[state_key(root)] = 0;
    nodes.push_back(std::move(root));
    frontier.push_back(0);

    while (!frontier.empty()) {
        if (rep.states_explored >= budget) {
            rep.budget_exhausted = true;
            break;
        }
        long idx = frontier.back();
        frontier.pop_back();
        rep.states_explored++;

        Configuration cur{nodes[idx].sys, nodes[idx].mon};
        if (is_error(cur, preds)) {
            rep.error_configs++;
            if (!rep.error_witness) rep.error_witness = witness_for(nodes, idx);
        }
        if (cur.mon->kind == FormulaKind::Fls) {
            rep.violations++;
            if (!rep.violation_witness) rep.violation_witness = witness_for(nodes, idx);
            continue;  // verdicts are final
        }
        if (cur.mon->kind == FormulaKind::Tru) {
            rep.trivially_satisfied++;
            if (!rep.trivial_witness) rep.trivial_witness = witness_for(nodes, idx);
            continue;
        }

        std::optional<Action> pending;
        if (nodes[idx].pos < t.size()) pending = t[nodes[idx].pos];
        auto steps = config_steps(cur, pending, preds);
        if (steps.empty()) {
            if (nodes[idx].pos >= t.size())
                rep.completed_runs++;
            else
                rep.stuck_runs++;
            continue;
        }
        for (auto& st : steps) {
            size_t npos = nodes[idx].pos + (st.rule == "iAct" || st.rule == "iTrm" ? 1 : 0);
            Node n{st.next.sys, st.next.mon, npos, idx, st.rule + " " + st.label.str()};
            if (st.rule == "iAda" && st.label.kind == MonLabelKind::AdS &&
                !rep.clean_adaptation_witness) {
                Witness w = witness_for(nodes, idx);
                w.steps.push_back(std::to_string(w.steps.size() + 1) + ": " + n.move);
                w.final_state = n.sys.str() + " |> " + to_string(n.mon);
                rep.clean_adaptation_witness = std::move(w);
            }
            std::string key = state_key(n);
            auto [it, fresh] = visited.emplace(key, static_cast<long>(nodes.size()));
            if (fresh) {
                nodes.push_back(std::move(n));
                frontier.push_back(it->second);
            }
        }
    }
    return rep;
}

std::string ExplorationReport::text() const {
    std::ostringstream os;
    os << "states explored:      " << states_explored << "\n"
       << "budget exhausted:     " << (budget_exhausted ? "yes" : "no") << "\n"
       << "error configurations: " << error_configs << "\n"
       << "violations:           " << violations << "\n"
       << "trivially satisfied:  " << trivially_satisfied << "\n"
       << "completed runs:       " << completed_runs << "\n"
       << "stuck schedules:      " << stuck_runs << "\n";
    if (aborts_type_mismatch || aborts_aliasing)
        os << "aborts:               " << aborts_type_mismatch << " type-mismatch, "
           << aborts_aliasing << " aliasing\n";
    auto dump = [&](const char* name, const std::optional<Witness>& w) {
        if (!w) return;
        os << name << ":\n";
        for (const auto& s : w->steps) os << "  " << s << "\n";
        os << "  => " << w->final_state << "\n";
    };
    dump("error witness", error_witness);
    dump("violation witness", violation_witness);
    dump("trivial-satisfaction witness", trivial_witness);
    dump("abort witness", abort_witness);
    dump("valid-adaptation witness", clean_adaptation_witness);
    return os.str();
}

std::string ExplorationReport::json() const {
    nlohmann::json j;
    j["statesExplored"] = states_explored;
    j["budgetExhausted"] = budget_exhausted;
    j["errorConfigs"] = error_configs;
    j["violations"] = violations;
    j["triviallySatisfied"] = trivially_satisfied;
    j["completedRuns"] = completed_runs;
    j["stuckRuns"] = stuck_runs;
    j["abortsTypeMismatch"] = aborts_type_mismatch;
    j["abortsAliasing"] = aborts_aliasing;
    auto put = [&](const char* name, const std::optional<Witness>& w) {
        if (!w) return;
        nlohmann::json jw;
        jw["steps"] = w->steps;
        jw["finalState"] = w->final_state;
        j[name] = jw;
    };
    put("errorWitness", error_witness);
    put("violationWitness", violation_witness);
    put("trivialWitness", trivial_witness);
    put("abortWitness", abort_witness);
    put("validAdaptationWitness", clean_adaptation_witness);
    return j.dump();
}

}  // namespace adaptrace
