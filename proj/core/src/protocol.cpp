#include "adaptrace/protocol.hpp"

#include <algorithm>
#include <sstream>

#include "adaptrace/preprocess.hpp"
#include "json.hpp"

namespace adaptrace {

const char* to_string(InstrMode m) {
    switch (m) {
        case InstrMode::CA: return "CA";
        case InstrMode::SMSI: return "SMSI";
        case InstrMode::AMSD: return "AMSD";
        case InstrMode::RA: return "RA";
    }
    return "?";
}

std::optional<InstrMode> instr_mode_from(const std::string& s) {
    if (s == "CA" || s == "ca") return InstrMode::CA;
    if (s == "SMSI" || s == "smsi") return InstrMode::SMSI;
    if (s == "AMSD" || s == "amsd") return InstrMode::AMSD;
    if (s == "RA" || s == "ra") return InstrMode::RA;
    return std::nullopt;
}

// ---- instrumentation ---------------------------------------------------------

namespace {

bool has_sync_adaptations(const FPtr& f) {
    if (f->kind == FormulaKind::AdaptS) return true;
    bool found = false;
    if (f->left) found = found || has_sync_adaptations(f->left);
    if (f->right) found = found || has_sync_adaptations(f->right);
    return found;
}

FPtr force_mode(const FPtr& f, NecMode mode, bool keep_releases) {
    switch (f->kind) {
        case FormulaKind::Nec:
            return f_nec(mode, f->pat, keep_releases ? f->releases : RefList{},
                         force_mode(f->left, mode, keep_releases));
        case FormulaKind::And:
            return f_and(force_mode(f->left, mode, keep_releases),
                         force_mode(f->right, mode, keep_releases));
        case FormulaKind::If:
            return f_if(f->cond, force_mode(f->left, mode, keep_releases),
                        force_mode(f->right, mode, keep_releases));
        case FormulaKind::Max:
            return f_max(f->var, force_mode(f->left, mode, keep_releases));
        case FormulaKind::AdaptA:
            return f_adapt_async(f->adaptees, f->releases,
                                 force_mode(f->left, mode, keep_releases));
        case FormulaKind::AdaptS:
            return f_adapt_sync(f->akind, f->adaptees, f->releases,
                                force_mode(f->left, mode, keep_releases));
        case FormulaKind::Clear:
            return f_clear(f->var, force_mode(f->left, mode, keep_releases));
        default: return f;
    }
}

// Core necessities default to asynchronous reporting.
FPtr core_to_async(const FPtr& f) {
    switch (f->kind) {
        case FormulaKind::Nec:
            return f_nec(f->mode == NecMode::Core ? NecMode::Async : f->mode, f->pat,
                         f->releases, core_to_async(f->left));
        case FormulaKind::And: return f_and(core_to_async(f->left), core_to_async(f->right));
        case FormulaKind::If:
            return f_if(f->cond, core_to_async(f->left), core_to_async(f->right));
        case FormulaKind::Max: return f_max(f->var, core_to_async(f->left));
        case FormulaKind::AdaptA:
            return f_adapt_async(f->adaptees, f->releases, core_to_async(f->left));
        case FormulaKind::AdaptS:
            return f_adapt_sync(f->akind, f->adaptees, f->releases, core_to_async(f->left));
        case FormulaKind::Clear: return f_clear(f->var, core_to_async(f->left));
        default: return f;
    }
}

void collect_blocking_patterns(const FPtr& f, std::vector<Pattern>& out) {
    if (f->kind == FormulaKind::Nec && f->mode == NecMode::Blocking) out.push_back(f->pat);
    if (f->left) collect_blocking_patterns(f->left, out);
    if (f->right) collect_blocking_patterns(f->right, out);
}

}  // namespace

InstrumentedSpec instrument(const FPtr& f, InstrMode mode) {
    InstrumentedSpec spec;
    spec.mode = mode;
    Preprocessed pre = preprocess(f, /*run_syn_enc=*/true);
    switch (mode) {
        case InstrMode::CA:
            if (has_sync_adaptations(pre.formula))
                throw ModeConflict(
                    "script requires synchronous adaptations; they cannot be applied "
                    "under completely asynchronous monitoring");
            spec.formula = force_mode(pre.formula, NecMode::Async, /*keep_releases=*/false);
            break;
        case InstrMode::SMSI:
            spec.formula = force_mode(pre.formula, NecMode::Blocking, /*keep_releases=*/false);
            spec.all_events_sync = true;
            break;
        case InstrMode::AMSD:
        case InstrMode::RA:
            spec.formula = core_to_async(pre.formula);
            break;
    }
    collect_blocking_patterns(spec.formula, spec.sync_patterns);
    return spec;
}

// ---- workload helpers -----------------------------------------------------------

void add_link(Workload& w, const Value& a, const Value& b) {
    if (compare(a, b) < 0)
        w.links.insert({a, b});
    else
        w.links.insert({b, a});
}

bool linked(const Workload& w, const Value& a, const Value& b) {
    return compare(a, b) < 0 ? w.links.count({a, b}) != 0 : w.links.count({b, a}) != 0;
}

Workload apply_adaptation_effect(AdaptKind kind, const std::vector<Value>& targets,
                                 const Workload& w) {
    Workload out = w;
    for (const auto& t : targets) {
        auto it = out.actors.find(t);
        if (it == out.actors.end())
            throw TargetAbsent("adaptation target " + to_string(t) + " is not in the workload");
        switch (kind) {
            case AdaptKind::Kill: {
                out.actors.erase(it);
                for (auto li = out.links.begin(); li != out.links.end();)
                    li = (li->first == t || li->second == t) ? out.links.erase(li)
                                                             : std::next(li);
                break;
            }
            case AdaptKind::Purge:
                it->second.mailbox.clear();
                break;
            case AdaptKind::Restart:
                it->second.mailbox.clear();
                it->second.regs.clear();
                it->second.pc = 0;
                break;
            case AdaptKind::SLink:
            case AdaptKind::SUnlink: {
                for (const auto& o : targets) {
                    if (o == t) continue;
                    if (kind == AdaptKind::SLink) {
                        add_link(out, t, o);
                    } else {
                        if (compare(t, o) < 0)
                            out.links.erase({t, o});
                        else
                            out.links.erase({o, t});
                    }
                }
                break;
            }
            case AdaptKind::Generic:
                break;  // abstract asynchronous adaptation: recorded, no state change
        }
    }
    return out;
}

// ---- simulation ------------------------------------------------------------------

namespace {

struct WireMsg {
    enum class Kind { Evt, Ack, Adpt };
    Kind kind = Kind::Evt;
    Action act;                      // Evt
    Value subject;                   // Evt
    std::optional<long long> nonce;  // Evt: null = fire-and-forget
    AdaptKind akind = AdaptKind::Generic;  // Adpt
};

struct Suspension {
    long long nonce = 0;
    std::vector<AdaptKind> pending;  // applied when the ack arrives
};

class Sim : public SimServices {
  public:
    Sim(const InstrumentedSpec& spec, const Workload& w, unsigned long long seed,
        const PredicateTable& preds, const DynEnv& env)
        : spec_(spec), w_(w), preds_(preds), rng_(seed) {
        mon_.env = env;
        mon_.used = initial_scope(env);
        mon_.formula = spec.formula;
    }

    SimResult run() {
        settle_monitor();
        const long tick_cap = 1000000;
        while (stats_.ticks < tick_cap) {
            stats_.ticks++;
            bool progress = false;
            progress |= deliver_one();
            progress |= monitor_handle_one();
            progress |= step_one_actor();
            stats_.total_suspended_steps += static_cast<long>(suspended_.size());
            if (!progress && channels_empty() && inbox_.empty()) {
                stats_.quiescent = true;
                break;
            }
        }
        SimResult res;
        res.stats = stats_;
        res.final_workload = w_;
        res.event_log = std::move(event_log_);
        return res;
    }

    // -- SimServices -----------------------------------------------------------

    void emit(const Action& a) override {
        stats_.events++;
        event_log_.push_back(a);
        Value subj = subject_pid(a);
        bool sync = spec_.mode != InstrMode::CA &&
                    (spec_.all_events_sync || matches_sync_pattern(a));
        WireMsg m;
        m.kind = WireMsg::Kind::Evt;
        m.act = a;
        m.subject = subj;
        if (sync) {
            m.nonce = next_nonce_++;
            suspended_[subj] = Suspension{*m.nonce, {}};
            stats_.blocking_handshakes++;
        }
        // Events reach the monitor through the single tracer channel in
        // commit order; only control and data messages reorder across
        // senders.
        push("$trace", "$mon", std::move(m));
    }

    void send_value(const Value& to, Value msg) override {
        // Data messages bypass the monitor: delivered through their own channel.
        data_channels_[{current_actor_.name, to.name}].push_back(std::move(msg));
    }

  private:
    bool matches_sync_pattern(const Action& a) const {
        for (const auto& p : spec_.sync_patterns)
            if (match_patterns(p, a)) return true;
        return false;
    }

    void push(const std::string& from, const std::string& to, WireMsg m) {
        channels_[{from, to}].push_back(std::move(m));
    }

    bool channels_empty() const {
        for (const auto& [k, q] : channels_)
            if (!q.empty()) return false;
        for (const auto& [k, q] : data_channels_)
            if (!q.empty()) return false;
        return true;
    }

    // Delivers the head of one randomly chosen nonempty channel.
    bool deliver_one() {
        std::vector<std::pair<const std::pair<std::string, std::string>*, int>> ready;
        for (auto& [k, q] : channels_)
            if (!q.empty()) ready.push_back({&k, 0});
        for (auto& [k, q] : data_channels_)
            if (!q.empty()) ready.push_back({&k, 1});
        if (ready.empty()) return false;
        auto& pick = ready[rng_() % ready.size()];
        if (pick.second == 1) {
            auto& q = data_channels_[*pick.first];
            Value msg = std::move(q.front());
            q.pop_front();
            auto it = w_.actors.find(Value::pid(pick.first->second));
            if (it != w_.actors.end() && it->second.alive)
                it->second.mailbox.push_back(std::move(msg));
            return true;
        }
        auto& q = channels_[*pick.first];
        WireMsg m = std::move(q.front());
        q.pop_front();
        if (pick.first->second == "$mon") {
            inbox_.push_back(std::move(m));
        } else {
            receive_control(Value::pid(pick.first->second), std::move(m));
        }
        return true;
    }

    // A suspended actor pattern-matches its own nonce, reading out of order.
    void receive_control(const Value& pid, WireMsg m) {
        auto it = suspended_.find(pid);
        if (m.kind == WireMsg::Kind::Adpt) {
            if (it == suspended_.end() || it->second.nonce != m.nonce)
                throw ProtocolViolation("adaptation request with an unissued nonce for " +
                                        to_string(pid));
            it->second.pending.push_back(m.akind);
            return;
        }
        if (m.kind == WireMsg::Kind::Ack) {
            if (it == suspended_.end() || it->second.nonce != m.nonce)
                throw ProtocolViolation("acknowledgement with an unissued nonce for " +
                                        to_string(pid));
            for (AdaptKind k : it->second.pending) {
                w_ = apply_adaptation_effect(k, {pid}, w_);
                stats_.adaptations[to_string(k)]++;
            }
            suspended_.erase(it);
            return;
        }
        throw ProtocolViolation("unexpected wire message at an actor");
    }

    void send_ack(const Value& pid, long long nonce) {
        WireMsg m;
        m.kind = WireMsg::Kind::Ack;
        m.nonce = nonce;
        stats_.acks++;
        push("$mon", pid.name, std::move(m));
    }

    void send_adpt(const Value& pid, AdaptKind k, long long nonce) {
        WireMsg m;
        m.kind = WireMsg::Kind::Adpt;
        m.akind = k;
        m.nonce = nonce;
        stats_.adpt_messages++;
        push("$mon", pid.name, std::move(m));
    }

    void flush_outstanding_acks() {
        for (const auto& [pid, n] : nonce_map_) send_ack(pid, n);
        nonce_map_.clear();
    }

    // Applies the monitor's internal moves until quiescence.
    void settle_monitor() {
        if (!active_) return;
        for (int fuel = 0; fuel < 100000; ++fuel) {
            mon_.formula = struct_eq_normalize(mon_.formula);
            if (mon_.formula->kind == FormulaKind::Fls) {
                stats_.violations++;
                active_ = false;  // withhold acknowledgements: offenders stay suspended
                return;
            }
            if (mon_.formula->kind == FormulaKind::Tru) {
                active_ = false;
                flush_outstanding_acks();
                return;
            }
            auto moves = dt_mon_steps(mon_, preds_);
            if (moves.empty()) return;
            bool applied = false;
            for (auto& mv : moves) {
                if (mv.env_refused) {
                    stats_.refused_releases++;
                    continue;
                }
                switch (mv.label.kind) {
                    case MonLabelKind::Tau:
                    case MonLabelKind::Blk:
                        // Blocking already happened system-side via the nonce.
                        mon_ = mv.next;
                        applied = true;
                        break;
                    case MonLabelKind::Rel: {
                        for (const auto& p : mv.label.refs) {
                            auto it = nonce_map_.find(p);
                            if (it == nonce_map_.end()) {
                                stats_.refused_releases++;
                                continue;
                            }
                            send_ack(p, it->second);
                            nonce_map_.erase(it);
                        }
                        mon_ = mv.next;
                        applied = true;
                        break;
                    }
                    case MonLabelKind::AdS: {
                        for (const auto& p : mv.label.refs) {
                            auto it = nonce_map_.find(p);
                            if (it == nonce_map_.end()) {
                                stats_.refused_adaptations++;
                                continue;
                            }
                            send_adpt(p, mv.label.akind, it->second);
                        }
                        mon_ = mv.next;
                        applied = true;
                        break;
                    }
                    case MonLabelKind::AdA: {
                        std::vector<Value> present;
                        for (const auto& p : mv.label.refs)
                            if (w_.actors.count(p)) present.push_back(p);
                        if (!present.empty()) {
                            w_ = apply_adaptation_effect(AdaptKind::Generic, present, w_);
                            stats_.adaptations[to_string(AdaptKind::Generic)]++;
                        } else if (!mv.label.refs.empty()) {
                            stats_.refused_adaptations++;
                        } else {
                            stats_.adaptations[to_string(AdaptKind::Generic)]++;
                        }
                        mon_ = mv.next;
                        applied = true;
                        break;
                    }
                    default: break;
                }
                if (applied) break;
            }
            if (!applied) return;  // only refused moves remain
        }
        throw EvalError("monitor settle loop did not terminate");
    }

    bool monitor_handle_one() {
        if (inbox_.empty()) return false;
        WireMsg m = std::move(inbox_.front());
        inbox_.pop_front();
        if (!active_) {
            if (m.nonce) send_ack(m.subject, *m.nonce);  // dead monitor releases immediately
            return true;
        }
        if (m.nonce) nonce_map_[m.subject] = *m.nonce;
        auto r = dt_observe(mon_, m.act);
        if (auto* ok = std::get_if<TypedMonitor>(&r)) {
            mon_ = std::move(*ok);
        } else if (std::holds_alternative<Incompatibility>(r)) {
            stats_.aborts++;
            active_ = false;
            flush_outstanding_acks();
            return true;
        } else {
            mon_.formula = f_tru();  // cannot observe: monitoring terminates
        }
        settle_monitor();
        if (spec_.mode != InstrMode::RA && active_) {
            // Outside the adaptation protocol the monitor acknowledges each
            // handled event unless a violation suspended the offender.
            if (m.nonce) {
                auto it = nonce_map_.find(m.subject);
                if (it != nonce_map_.end()) {
                    send_ack(m.subject, it->second);
                    nonce_map_.erase(it);
                }
            }
        }
        return true;
    }

    bool step_one_actor() {
        std::vector<Value> runnable;
        for (auto& [pid, a] : w_.actors)
            if (a.alive && !suspended_.count(pid)) runnable.push_back(pid);
        if (runnable.empty()) return false;
        size_t start = rng_() % runnable.size();
        for (size_t i = 0; i < runnable.size(); ++i) {
            const Value& pid = runnable[(start + i) % runnable.size()];
            auto it = w_.actors.find(pid);
            if (it == w_.actors.end()) continue;  // killed meanwhile
            current_actor_ = pid;
            if (it->second.behavior && it->second.behavior(it->second, *this)) return true;
        }
        return false;
    }

    const InstrumentedSpec& spec_;
    Workload w_;
    PredicateTable preds_;
    std::mt19937_64 rng_;

    TypedMonitor mon_;
    bool active_ = true;
    std::map<Value, long long> nonce_map_;  // suspended pid -> nonce awaiting release
    long long next_nonce_ = 1;

    std::map<std::pair<std::string, std::string>, std::deque<WireMsg>> channels_;
    std::map<std::pair<std::string, std::string>, std::deque<Value>> data_channels_;
    std::deque<WireMsg> inbox_;
    std::map<Value, Suspension> suspended_;
    Value current_actor_;

    ProtocolStats stats_;
    std::vector<Action> event_log_;
};

}  // namespace

SimResult simulate_protocol(const InstrumentedSpec& spec, const Workload& w,
                            unsigned long long seed, const PredicateTable& preds,
                            const DynEnv& initial_env) {
    Sim sim(spec, w, seed, preds, initial_env);
    return sim.run();
}

std::string ProtocolStats::text() const {
    std::ostringstream os;
    os << "events:              " << events << "\n"
       << "blocking handshakes: " << blocking_handshakes << "\n"
       << "adaptation messages: " << adpt_messages << "\n"
       << "acks:                " << acks << "\n"
       << "suspended steps:     " << total_suspended_steps << "\n"
       << "ticks:               " << ticks << "\n"
       << "violations:          " << violations << "\n"
       << "aborts:              " << aborts << "\n"
       << "quiescent:           " << (quiescent ? "yes" : "no") << "\n";
    if (refused_adaptations || refused_releases)
        os << "refused:             " << refused_adaptations << " adaptations, "
           << refused_releases << " releases\n";
    if (!adaptations.empty()) {
        os << "adaptations applied: ";
        bool first = true;
        for (const auto& [k, n] : adaptations) {
            if (!first) os << ", ";
            first = false;
            os << k << "=" << n;
        }
        os << "\n";
    }
    return os.str();
}

std::string ProtocolStats::json() const {
    nlohmann::json j;
    j["events"] = events;
    j["blockingHandshakes"] = blocking_handshakes;
    j["adptMessages"] = adpt_messages;
    j["acks"] = acks;
    j["totalSuspendedSteps"] = total_suspended_steps;
    j["ticks"] = ticks;
    j["violations"] = violations;
    j["aborts"] = aborts;
    j["refusedAdaptations"] = refused_adaptations;
    j["refusedReleases"] = refused_releases;
    j["quiescent"] = quiescent;
    j["adaptations"] = adaptations;
    return j.dump();
}

}  // namespace adaptrace
