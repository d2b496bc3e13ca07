#ifndef ADAPTRACE_PROTOCOL_HPP
#define ADAPTRACE_PROTOCOL_HPP

#include <deque>
#include <random>

#include "adaptrace/dynamic_types.hpp"

namespace adaptrace {

// ---------------------------------------------------------------------------
// Instrumentation modes
// ---------------------------------------------------------------------------

/// CA: completely asynchronous reporting. SMSI: every event is reported with
/// a fresh nonce and suspends its subject until acknowledged. AMSD: only the
/// critical events encoded from synchronous falsities suspend. RA: the
/// script's declared modes drive suspension, and releases/adaptations follow
/// the monitor's lists.
enum class InstrMode { CA, SMSI, AMSD, RA };

const char* to_string(InstrMode m);
std::optional<InstrMode> instr_mode_from(const std::string& s);

class ModeConflict : public std::runtime_error {
  public:
    explicit ModeConflict(const std::string& what) : std::runtime_error(what) {}
};

struct InstrumentedSpec {
    InstrMode mode = InstrMode::CA;
    FPtr formula;                        // normalized, mode-adjusted
    std::vector<Pattern> sync_patterns;  // system-side suspension set
    bool all_events_sync = false;        // SMSI
};

/// Normalizes the script and tags every necessity with its reporting
/// discipline for the chosen mode. Forcing a script with synchronous
/// adaptations into CA is a conflict, not a silent degradation.
InstrumentedSpec instrument(const FPtr& f, InstrMode mode);

// ---------------------------------------------------------------------------
// Workloads
// ---------------------------------------------------------------------------

struct Actor;
class SimServices {
  public:
    virtual ~SimServices() = default;
    virtual void emit(const Action& a) = 0;                    // report a monitored event
    virtual void send_value(const Value& to, Value msg) = 0;   // asynchronous message
};

/// One scheduler step of an actor: consume/produce as needed, commit at most
/// one monitored event, and return whether any progress was made.
using Behavior = std::function<bool(Actor&, SimServices&)>;

struct Actor {
    Value pid;
    std::string role;
    std::deque<Value> mailbox;
    bool alive = true;

    long pc = 0;
    std::map<std::string, long long> regs;   // behavior-local state (reset by restart)
    std::map<std::string, Value> params;     // configuration (survives restart)

    Behavior behavior;
};

struct Workload {
    std::vector<Value> pids;
    std::map<Value, Actor> actors;
    std::set<std::pair<Value, Value>> links;  // unordered pairs, stored ordered
    std::map<std::string, VType> types;       // suggested initial value environment
};

void add_link(Workload& w, const Value& a, const Value& b);
bool linked(const Workload& w, const Value& a, const Value& b);

class TargetAbsent : public std::runtime_error {
  public:
    explicit TargetAbsent(const std::string& what) : std::runtime_error(what) {}
};

/// Interprets an adaptation on the workload state: silent kill removes the
/// actor and its links without notifying peers, purge empties the mailbox,
/// restart resets the behavior state keeping the pid, slink/sunlink edit the
/// link set, and the generic asynchronous adaptation is recorded only.
Workload apply_adaptation_effect(AdaptKind kind, const std::vector<Value>& targets,
                                 const Workload& w);

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

class ProtocolViolation : public std::runtime_error {
  public:
    explicit ProtocolViolation(const std::string& what) : std::runtime_error(what) {}
};

struct ProtocolStats {
    long events = 0;
    long blocking_handshakes = 0;
    long adpt_messages = 0;
    long acks = 0;
    long total_suspended_steps = 0;
    long ticks = 0;
    long violations = 0;
    long aborts = 0;
    long refused_adaptations = 0;  // adaptation sent to a non-suspended actor
    long refused_releases = 0;
    bool quiescent = false;
    std::map<std::string, long> adaptations;  // kind -> applications

    std::string text() const;
    std::string json() const;
};

struct SimResult {
    ProtocolStats stats;
    Workload final_workload;
    std::vector<Action> event_log;  // events in commit order
};

/// Discrete-event simulation of the instrumentation protocol: per-sender
/// FIFO channels with seeded reordering across senders, nonce handshakes for
/// suspension, adaptation requests delivered before the releasing
/// acknowledgement, and verdicts delegated to the typed monitor engine.
SimResult simulate_protocol(const InstrumentedSpec& spec, const Workload& w,
                            unsigned long long seed, const PredicateTable& preds = {},
                            const DynEnv& initial_env = {});

}  // namespace adaptrace

#endif
