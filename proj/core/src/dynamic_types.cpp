#include "adaptrace/dynamic_types.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <unordered_map>

namespace adaptrace {

std::string to_string(const DynEnv& g) {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (const auto& [v, t] : g) {
        if (!first) os << ", ";
        first = false;
        os << to_string(v) << ':' << to_string(t);
    }
    os << '}';
    return os.str();
}

std::string to_string(const ScopeEnv& d) {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (const auto& [v, ws] : d) {
        if (!first) os << ", ";
        first = false;
        os << to_string(v) << ":{";
        bool f2 = true;
        for (const auto& w : ws) {
            if (!f2) os << ',';
            f2 = false;
            os << w;
        }
        os << '}';
    }
    os << '}';
    return os.str();
}

ScopeEnv initial_scope(const DynEnv& g) {
    ScopeEnv d;
    for (const auto& [v, t] : g)
        if (t == VType::Lpid) d[v] = {};
    return d;
}

DynEnv dyn_env_from_types(const std::map<std::string, VType>& types) {
    DynEnv g;
    for (const auto& [name, t] : types) g[Value::pid(name)] = t;
    return g;
}

// ---- after -----------------------------------------------------------------

DynEnv after(const DynEnv& g, const MonLabel& l) {
    switch (l.kind) {
        case MonLabelKind::Blk: {
            DynEnv out = g;
            for (const auto& v : l.refs) {
                auto it = out.find(v);
                if (it == out.end()) continue;  // untracked pid
                if (it->second == VType::LpidB) continue;  // re-blocking is a no-op
                if (it->second != VType::Lpid)
                    throw EvalError("after: blocking " + to_string(v) + " typed " +
                                    to_string(it->second));
                it->second = VType::LpidB;
            }
            return out;
        }
        case MonLabelKind::Rel: {
            DynEnv out = g;
            for (const auto& v : l.refs) {
                auto it = out.find(v);
                if (it == out.end()) continue;
                if (it->second != VType::LpidB)
                    throw EvalError("after: releasing " + to_string(v) + " typed " +
                                    to_string(it->second));
                it->second = VType::Lpid;
            }
            return out;
        }
        default: return g;
    }
}

bool after_event_extension(const DynEnv& before, const DynEnv& extended) {
    for (const auto& [v, t] : before) {
        auto it = extended.find(v);
        if (it == extended.end() || it->second != t) return false;
    }
    return true;
}

// ---- necessity step -----------------------------------------------------------

namespace {

std::variant<DynEnv, Incompatibility> process_bindings(const Pattern& pat, const Subst& s) {
    DynEnv fresh;
    auto tb = typed_bindings(pat);
    for (const auto& [x, t] : tb) {
        auto it = s.find(x);
        if (it == s.end()) continue;  // opaque position; nothing to track
        auto jt = fresh.find(it->second);
        if (jt != fresh.end() && jt->second != t)
            return Incompatibility{Incompatibility::Kind::TypeMismatch,
                                   to_string(it->second) + " bound at both " +
                                       to_string(jt->second) + " and " + to_string(t)};
        fresh[it->second] = t;
    }
    // Two distinct linear binders may not receive the same pid.
    for (auto a = tb.begin(); a != tb.end(); ++a) {
        if (a->second != VType::Lpid) continue;
        for (auto b = std::next(a); b != tb.end(); ++b) {
            if (b->second != VType::Lpid) continue;
            auto va = s.find(a->first);
            auto vb = s.find(b->first);
            if (va != s.end() && vb != s.end() && va->second == vb->second)
                return Incompatibility{Incompatibility::Kind::Aliasing,
                                       a->first + " and " + b->first + " both bound to " +
                                           to_string(va->second)};
        }
    }
    return fresh;
}

}  // namespace

std::variant<TypedMonitor, Incompatibility, NoMatchResidual> dt_necessity_step(
    const TypedMonitor& m, const Action& a) {
    const Formula& f = *m.formula;
    if (f.kind != FormulaKind::Nec) throw EvalError("dt_necessity_step on a non-necessity");
    auto s = match_patterns(f.pat, a);
    if (!s) return NoMatchResidual{f_release(f.releases, f_tru())};

    auto pb = process_bindings(f.pat, *s);
    if (auto* inc = std::get_if<Incompatibility>(&pb)) return *inc;
    const DynEnv& fresh = std::get<DynEnv>(pb);

    // lpidb is the tracked blocked state of lpid, not a separate class; a
    // same-class rebinding is judged by the in-use (aliasing) check below.
    auto type_class = [](VType t) {
        return t == VType::LpidB ? VType::Lpid : t;
    };
    DynEnv env = m.env;
    for (const auto& [v, t] : fresh) {
        auto it = env.find(v);
        if (it != env.end()) {
            if (type_class(it->second) != type_class(t))
                return Incompatibility{Incompatibility::Kind::TypeMismatch,
                                       to_string(v) + ":" + to_string(t) +
                                           " conflicts with assumption " + to_string(v) + ":" +
                                           to_string(it->second)};
        }
    }
    for (const auto& [v, t] : fresh) {
        (void)t;
        if (m.used.count(v))
            return Incompatibility{Incompatibility::Kind::Aliasing,
                                   "linear id " + to_string(v) + " is still in use"};
    }
    for (const auto& [v, t] : fresh) env.emplace(v, t);  // existing entries keep their state

    ScopeEnv used = m.used;
    for (const auto& [v, t] : fresh)
        if (t == VType::Lpid) used[v] = f.pat.scope;

    FPtr cont = apply_subst(f.left, *s);
    if (f.mode == NecMode::Blocking) cont = f_block({Ref::value(subject_pid(a))}, cont);
    return TypedMonitor{std::move(env), std::move(used), std::move(cont)};
}

TypedMonitor dt_max_unfold(const TypedMonitor& m) {
    const Formula& f = *m.formula;
    if (f.kind != FormulaKind::Max) throw EvalError("dt_max_unfold on a non-fixpoint");
    FPtr repl = f_clear(f.var, m.formula);
    return {m.env, m.used, subst_formula_var(f.left, f.var, repl)};
}

TypedMonitor dt_clear(const TypedMonitor& m, const std::string& x) {
    ScopeEnv used;
    for (const auto& [v, ws] : m.used)
        if (!ws.count(x)) used.emplace(v, ws);
    return {m.env, std::move(used), m.formula};
}

// ---- full event step ---------------------------------------------------------------

std::variant<TypedMonitor, Incompatibility, CannotObserve> dt_observe(const TypedMonitor& m,
                                                                      const Action& a) {
    const Formula& f = *m.formula;
    switch (f.kind) {
        case FormulaKind::Tru:
        case FormulaKind::Fls:
            return m;
        case FormulaKind::Nec: {
            auto r = dt_necessity_step(m, a);
            if (auto* ok = std::get_if<TypedMonitor>(&r)) return std::move(*ok);
            if (auto* inc = std::get_if<Incompatibility>(&r)) return *inc;
            return TypedMonitor{m.env, m.used, std::get<NoMatchResidual>(r).residual};
        }
        case FormulaKind::And: {
            auto l = dt_observe({m.env, m.used, f.left}, a);
            if (std::holds_alternative<CannotObserve>(l)) return CannotObserve{};
            if (auto* inc = std::get_if<Incompatibility>(&l)) return *inc;
            auto r = dt_observe({m.env, m.used, f.right}, a);
            if (std::holds_alternative<CannotObserve>(r)) return CannotObserve{};
            if (auto* inc = std::get_if<Incompatibility>(&r)) return *inc;
            const auto& lm = std::get<TypedMonitor>(l);
            const auto& rm = std::get<TypedMonitor>(r);

            DynEnv env = lm.env;
            for (const auto& [v, t] : rm.env) {
                auto it = env.find(v);
                if (it != env.end()) {
                    if (it->second != t)
                        return Incompatibility{Incompatibility::Kind::TypeMismatch,
                                               "branches disagree on " + to_string(v)};
                } else {
                    env.emplace(v, t);
                }
            }
            // Fresh linear ids must not be introduced by both branches at once.
            for (const auto& [v, ws] : lm.used) {
                (void)ws;
                if (!m.used.count(v) && rm.used.count(v))
                    return Incompatibility{Incompatibility::Kind::Aliasing,
                                           "both branches bind linear id " + to_string(v)};
            }
            ScopeEnv used = lm.used;
            for (const auto& [v, ws] : rm.used) {
                auto it = used.find(v);
                if (it == used.end())
                    used.emplace(v, ws);
                else
                    it->second.insert(ws.begin(), ws.end());
            }
            return TypedMonitor{std::move(env), std::move(used),
                                f_and(lm.formula, rm.formula)};
        }
        default:
            return CannotObserve{};
    }
}

std::variant<TypedMonitor, Incompatibility> dt_conjunction_step(const TypedMonitor& m,
                                                                const Action& a) {
    auto r = dt_observe(m, a);
    if (auto* ok = std::get_if<TypedMonitor>(&r)) return std::move(*ok);
    if (auto* inc = std::get_if<Incompatibility>(&r)) return *inc;
    throw EvalError("dt_conjunction_step: monitor cannot observe " + to_string(a));
}

// ---- internal moves ------------------------------------------------------------------

namespace {

std::optional<std::vector<Value>> closed_values(const RefList& rl) {
    std::vector<Value> out;
    for (const auto& r : rl) {
        if (r.is_var) return std::nullopt;
        out.push_back(r.val);
    }
    return out;
}

}  // namespace

std::vector<DtMove> dt_mon_steps(const TypedMonitor& m, const PredicateTable& preds) {
    std::vector<DtMove> out;
    const Formula& f = *m.formula;
    switch (f.kind) {
        case FormulaKind::AdaptA:
        case FormulaKind::AdaptS: {
            auto refs = closed_values(f.adaptees);
            if (!refs) throw EvalError("open adaptation list: " + to_string(f.adaptees));
            MonLabel l = f.kind == FormulaKind::AdaptA
                             ? MonLabel::adapt_async(*refs)
                             : MonLabel::adapt_sync(f.akind, *refs);
            out.push_back({l, {m.env, m.used, f_release(f.releases, f.left)}, false});
            return out;
        }
        case FormulaKind::Release: {
            auto refs = closed_values(f.adaptees);
            if (!refs) throw EvalError("open release list: " + to_string(f.adaptees));
            DtMove mv{MonLabel::release(*refs), {m.env, m.used, f.left}, false};
            for (const auto& v : *refs) {
                auto it = m.env.find(v);
                if (it == m.env.end()) continue;  // untracked pid: no discipline
                if (it->second != VType::LpidB) {
                    mv.env_refused = true;
                    break;
                }
            }
            if (!mv.env_refused) mv.next.env = after(m.env, mv.label);
            out.push_back(std::move(mv));
            return out;
        }
        case FormulaKind::Block: {
            auto refs = closed_values(f.adaptees);
            if (!refs) throw EvalError("open block list: " + to_string(f.adaptees));
            DtMove mv{MonLabel::block(*refs), {m.env, m.used, f.left}, false};
            for (const auto& v : *refs) {
                auto it = m.env.find(v);
                if (it == m.env.end()) continue;
                if (it->second != VType::Lpid && it->second != VType::LpidB) {
                    mv.env_refused = true;
                    break;
                }
            }
            if (!mv.env_refused) mv.next.env = after(m.env, mv.label);
            out.push_back(std::move(mv));
            return out;
        }
        case FormulaKind::If: {
            FPtr next = eval_bool(f.cond, preds) ? f.left : f.right;
            out.push_back({MonLabel::tau(), {m.env, m.used, next}, false});
            return out;
        }
        case FormulaKind::Max:
            out.push_back({MonLabel::tau(), dt_max_unfold(m), false});
            return out;
        case FormulaKind::Clear: {
            TypedMonitor cleared = dt_clear(m, f.var);
            cleared.formula = f.left;
            out.push_back({MonLabel::tau(), std::move(cleared), false});
            return out;
        }
        case FormulaKind::And: {
            for (auto& mv : dt_mon_steps({m.env, m.used, f.left}, preds)) {
                mv.next.formula = f_and(mv.next.formula, f.right);
                out.push_back(std::move(mv));
            }
            for (auto& mv : dt_mon_steps({m.env, m.used, f.right}, preds)) {
                mv.next.formula = f_and(f.left, mv.next.formula);
                out.push_back(std::move(mv));
            }
            return out;
        }
        default: return out;
    }
}

bool dt_is_error(const TypedConfiguration& c, const PredicateTable& preds) {
    for (const auto& mv : dt_mon_steps(c.mon, preds)) {
        if (mv.label.kind == MonLabelKind::AdS) {
            if (!sys_steps(c.sys, mv.label)) return true;
        } else if (mv.label.kind == MonLabelKind::Rel) {
            if (mv.env_refused || !sys_steps(c.sys, mv.label)) return true;
        }
    }
    return false;
}

// ---- exploration --------------------------------------------------------------------

namespace {

struct DtNode {
    SystemState sys;
    TypedMonitor mon;
    size_t pos;
    long parent;
    std::string move;
};

std::string dt_state_key(const DtNode& n) {
    return n.sys.str() + "|" + to_string(n.mon.env) + "|" + to_string(n.mon.used) + "|" +
           to_string(n.mon.formula) + "|" + std::to_string(n.pos);
}

Witness dt_witness(const std::vector<DtNode>& nodes, long idx) {
    std::vector<std::string> steps;
    for (long i = idx; i >= 0 && nodes[i].parent >= 0; i = nodes[i].parent)
        steps.push_back(nodes[i].move);
    std::reverse(steps.begin(), steps.end());
    for (size_t i = 0; i < steps.size(); ++i)
        steps[i] = std::to_string(i + 1) + ": " + steps[i];
    Witness w;
    w.steps = std::move(steps);
    w.final_state = nodes[idx].sys.str() + " |> " + to_string(nodes[idx].mon.formula);
    return w;
}

}  // namespace

ExplorationReport dt_explore(const TypedConfiguration& c, const Trace& t, long budget,
                             const PredicateTable& preds) {
    ExplorationReport rep;
    std::vector<DtNode> nodes;
    std::unordered_map<std::string, long> visited;
    std::deque<long> frontier;

    TypedMonitor m0 = c.mon;
    m0.formula = struct_eq_normalize(m0.formula);
    DtNode root{c.sys, std::move(m0), 0, -1, ""};
    visited[dt_state_key(root)] = 0;
    nodes.push_back(std::move(root));
    frontier.push_back(0);

    auto add = [&](DtNode n) -> long {
        n.mon.formula = struct_eq_normalize(n.mon.formula);
        std::string key = dt_state_key(n);
        auto [it, fresh] = visited.emplace(key, static_cast<long>(nodes.size()));
        if (fresh) {
            nodes.push_back(std::move(n));
            frontier.push_back(it->second);
        }
        return it->second;
    };

    while (!frontier.empty()) {
        if (rep.states_explored >= budget) {
            rep.budget_exhausted = true;
            break;
        }
        long idx = frontier.back();
        frontier.pop_back();
        rep.states_explored++;

        TypedConfiguration cur{nodes[idx].sys, nodes[idx].mon};
        // Internal consistency: a blocked-linear assumption implies the pid
        // really is suspended.
        for (const auto& [v, ty] : cur.mon.env)
            if (ty == VType::LpidB && !cur.sys.blocked(v))
                throw EvalError("well-formedness broken: " + to_string(v) +
                                " tracked blocked but running");
        if (dt_is_error(cur, preds)) {
            rep.error_configs++;
            if (!rep.error_witness) rep.error_witness = dt_witness(nodes, idx);
        }
        if (cur.mon.formula->kind == FormulaKind::Fls) {
            rep.violations++;
            if (!rep.violation_witness) rep.violation_witness = dt_witness(nodes, idx);
            continue;
        }
        if (cur.mon.formula->kind == FormulaKind::Tru) {
            rep.trivially_satisfied++;
            if (!rep.trivial_witness) rep.trivial_witness = dt_witness(nodes, idx);
            continue;
        }

        auto internal = dt_mon_steps(cur.mon, preds);
        bool expanded = false;
        if (!internal.empty()) {
            for (auto& mv : internal) {
                if (mv.env_refused) continue;
                if (mv.label.kind == MonLabelKind::Tau) {
                    add({cur.sys, mv.next, nodes[idx].pos, idx, "iMon " + mv.label.str()});
                    expanded = true;
                } else if (auto s2 = sys_steps(cur.sys, mv.label)) {
                    std::string move = "iAda " + mv.label.str();
                    if (mv.label.kind == MonLabelKind::AdS &&
                        !rep.clean_adaptation_witness) {
                        Witness w = dt_witness(nodes, idx);
                        w.steps.push_back(std::to_string(w.steps.size() + 1) + ": " + move);
                        w.final_state = s2->str() + " |> " + to_string(mv.next.formula);
                        rep.clean_adaptation_witness = std::move(w);
                    }
                    add({*s2, mv.next, nodes[idx].pos, idx, std::move(move)});
                    expanded = true;
                }
            }
            if (!expanded) rep.stuck_runs++;
            continue;
        }

        if (nodes[idx].pos >= t.size()) {
            rep.completed_runs++;
            continue;
        }
        const Action& e = t[nodes[idx].pos];
        MonLabel evt = MonLabel::sys(e);
        if (!sys_steps(cur.sys, evt)) {
            rep.stuck_runs++;  // suspended subject: event cannot happen yet
            continue;
        }
        auto r = dt_observe(cur.mon, e);
        if (auto* ok = std::get_if<TypedMonitor>(&r)) {
            add({cur.sys, std::move(*ok), nodes[idx].pos + 1, idx, "iAct " + evt.str()});
        } else if (auto* inc = std::get_if<Incompatibility>(&r)) {
            if (inc->kind == Incompatibility::Kind::TypeMismatch)
                rep.aborts_type_mismatch++;
            else
                rep.aborts_aliasing++;
            long ni = add({cur.sys,
                           {cur.mon.env, cur.mon.used, f_tru()},
                           nodes[idx].pos + 1,
                           idx,
                           "iTrm abort(" +
                               std::string(inc->kind == Incompatibility::Kind::TypeMismatch
                                               ? "type-mismatch"
                                               : "aliasing") +
                               ": " + inc->detail + ")"});
            if (!rep.abort_witness) rep.abort_witness = dt_witness(nodes, ni);
        } else {
            add({cur.sys,
                 {cur.mon.env, cur.mon.used, f_tru()},
                 nodes[idx].pos + 1,
                 idx,
                 "iTrm " + evt.str()});
        }
    }
    return rep;
}

// ---- deterministic engine -------------------------------------------------------------

namespace {

std::string env_delta(const DynEnv& before, const DynEnv& now) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [v, t] : now) {
        auto it = before.find(v);
        if (it != before.end() && it->second == t) continue;
        if (!first) os << ", ";
        first = false;
        os << to_string(v) << ':' << to_string(t);
    }
    return os.str();
}

std::string used_delta(const ScopeEnv& before, const ScopeEnv& now) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [v, ws] : now) {
        auto it = before.find(v);
        if (it != before.end() && it->second == ws) continue;
        if (!first) os << ", ";
        first = false;
        os << "+" << to_string(v);
    }
    for (const auto& [v, ws] : before) {
        (void)ws;
        if (!now.count(v)) {
            if (!first) os << ", ";
            first = false;
            os << "-" << to_string(v);
        }
    }
    return os.str();
}

}  // namespace

EngineResult dt_run(const TypedConfiguration& c, const Trace& t, const PredicateTable& preds,
                    const std::function<void(const EngineEvent&)>& log) {
    EngineResult res;
    SystemState sys = c.sys;
    TypedMonitor mon = c.mon;
    long step = 0;
    bool stuck = false;

    auto emit = [&](const std::string& rule, const std::string& label, const DynEnv& eb,
                    const ScopeEnv& ub, const std::string& verdict = "") {
        if (!log) return;
        EngineEvent ev;
        ev.step = ++step;
        ev.rule = rule;
        ev.label = label;
        ev.env_delta = env_delta(eb, mon.env);
        ev.used_delta = used_delta(ub, mon.used);
        ev.verdict = verdict;
        log(ev);
    };

    auto settle = [&]() {
        for (int fuel = 0; fuel < 100000; ++fuel) {
            mon.formula = struct_eq_normalize(mon.formula);
            auto moves = dt_mon_steps(mon, preds);
            if (moves.empty()) return;
            bool applied = false;
            bool refused = false;
            for (auto& mv : moves) {
                if (mv.env_refused) {
                    refused = true;
                    continue;
                }
                if (mv.label.kind == MonLabelKind::Tau) {
                    DynEnv eb = mon.env;
                    ScopeEnv ub = mon.used;
                    mon = mv.next;
                    emit("iMon", mv.label.str(), eb, ub);
                    applied = true;
                    break;
                }
                if (auto s2 = sys_steps(sys, mv.label)) {
                    DynEnv eb = mon.env;
                    ScopeEnv ub = mon.used;
                    sys = *s2;
                    mon = mv.next;
                    if (mv.label.kind == MonLabelKind::AdS ||
                        mv.label.kind == MonLabelKind::AdA)
                        res.adaptations_applied++;
                    emit("iAda", mv.label.str(), eb, ub);
                    applied = true;
                    break;
                }
                if (mv.label.kind == MonLabelKind::AdS || mv.label.kind == MonLabelKind::Rel)
                    refused = true;
            }
            if (!applied) {
                if (refused) {
                    res.error_configs++;
                    emit("stuck", "refused monitor action", mon.env, mon.used);
                }
                stuck = true;
                return;
            }
        }
        throw EvalError("internal move loop did not settle (unguarded script?)");
    };

    settle();
    for (const auto& e : t) {
        if (stuck || mon.formula->kind == FormulaKind::Fls ||
            mon.formula->kind == FormulaKind::Tru)
            break;
        MonLabel evt = MonLabel::sys(e);
        if (!sys_steps(sys, evt)) {
            emit("stuck", "subject of " + to_string(e) + " is suspended", mon.env, mon.used);
            stuck = true;
            break;
        }
        auto r = dt_observe(mon, e);
        if (auto* ok = std::get_if<TypedMonitor>(&r)) {
            DynEnv eb = mon.env;
            ScopeEnv ub = mon.used;
            mon = std::move(*ok);
            emit("iAct", evt.str(), eb, ub);
        } else if (auto* inc = std::get_if<Incompatibility>(&r)) {
            res.abort = *inc;
            res.abort->detail += " [env " + to_string(mon.env) + ", in use " +
                                 to_string(mon.used) + "]";
            res.verdict = EngineResult::Verdict::Aborted;
            mon.formula = f_tru();
            emit("iTrm",
                 std::string("abort ") +
                     (inc->kind == Incompatibility::Kind::TypeMismatch ? "type-mismatch"
                                                                       : "aliasing") +
                     ": " + res.abort->detail,
                 mon.env, mon.used, "aborted");
            res.final_monitor = mon;
            return res;
        } else {
            DynEnv eb = mon.env;
            ScopeEnv ub = mon.used;
            mon.formula = f_tru();
            emit("iTrm", evt.str(), eb, ub);
        }
        settle();
    }

    mon.formula = struct_eq_normalize(mon.formula);
    if (mon.formula->kind == FormulaKind::Fls) {
        res.verdict = EngineResult::Verdict::Violated;
        emit("verdict", "", mon.env, mon.used, "violated");
    } else if (mon.formula->kind == FormulaKind::Tru) {
        res.verdict = EngineResult::Verdict::TriviallySatisfied;
        emit("verdict", "", mon.env, mon.used, "trivially-satisfied");
    } else {
        res.verdict = EngineResult::Verdict::Inconclusive;
        emit("verdict", "", mon.env, mon.used, "inconclusive");
    }
    res.final_monitor = mon;
    return res;
}

}  // namespace adaptrace
