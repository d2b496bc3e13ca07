#ifndef ADAPTRACE_RUNTIME_HPP
#define ADAPTRACE_RUNTIME_HPP

#include "adaptrace/core_semantics.hpp"

namespace adaptrace {

// ---------------------------------------------------------------------------
// Abstract systems
// ---------------------------------------------------------------------------

enum class ProcStatus { Unblocked, Blocked };

/// Finite map from pids to their suspension status.
struct SystemState {
    std::map<Value, ProcStatus> procs;

    static SystemState all_unblocked(const std::vector<Value>& pids);
    bool contains(const Value& pid) const { return procs.count(pid) != 0; }
    bool blocked(const Value& pid) const;
    std::string str() const;
};

bool operator==(const SystemState& a, const SystemState& b);

// ---------------------------------------------------------------------------
// Monitor labels
// ---------------------------------------------------------------------------

enum class MonLabelKind { Tau, Sys, AdA, AdS, Rel, Blk };

struct MonLabel {
    MonLabelKind kind = MonLabelKind::Tau;
    Action act;                // Sys
    AdaptKind akind = AdaptKind::Generic;  // AdS
    std::vector<Value> refs;   // AdA, AdS, Rel, Blk (closed refs)

    static MonLabel tau();
    static MonLabel sys(Action a);
    static MonLabel adapt_async(std::vector<Value> refs);
    static MonLabel adapt_sync(AdaptKind k, std::vector<Value> refs);
    static MonLabel release(std::vector<Value> refs);
    static MonLabel block(std::vector<Value> refs);

    std::string str() const;
};

/// An abstract system paired with a monitor in runtime syntax.
struct Configuration {
    SystemState sys;
    FPtr mon;
};

// ---------------------------------------------------------------------------
// Transitions
// ---------------------------------------------------------------------------

/// Enumerates the monitor's enabled internal transitions: adaptation,
/// release and block interactions, plus silent steps (condition evaluation,
/// fixpoint unfolding, clear). Conjunctions offer the moves of either branch.
std::vector<std::pair<MonLabel, FPtr>> mon_steps(const FPtr& f,
                                                 const PredicateTable& preds = {});

/// The monitor's event transition, when it can observe the action: matching
/// necessities bind and continue (blocking ones prefix a block of the
/// subject), mismatches collapse to a release of the necessity's list, and
/// conjunctions step both branches. Nullopt when the monitor cannot observe.
std::optional<FPtr> mon_observe(const FPtr& f, const Action& a);

/// System reaction to a monitor label; nullopt when the system refuses
/// (blocking an already-blocked pid, releasing or synchronously adapting an
/// unblocked/absent one, or an event whose subject is suspended).
std::optional<SystemState> sys_steps(const SystemState& s, const MonLabel& l);

/// Injects a fresh pid (harness-driven spawning).
SystemState sys_spawn(const SystemState& s, const Value& pid);

/// All successor configurations under monitor-action precedence: while any
/// internal move is enabled only internal successors are produced; otherwise
/// the pending action fires (or terminates an unobservant monitor).
struct ConfigStep {
    Configuration next;
    std::string rule;   // iAda | iMon | iAct | iTrm
    MonLabel label;
};
std::vector<ConfigStep> config_steps(const Configuration& c,
                                     const std::optional<Action>& pending,
                                     const PredicateTable& preds = {});

/// A configuration is erroneous when the monitor offers a synchronous
/// adaptation or a release that the system prohibits.
bool is_error(const Configuration& c, const PredicateTable& preds = {});

// ---------------------------------------------------------------------------
// Exploration
// ---------------------------------------------------------------------------

struct Witness {
    std::vector<std::string> steps;  // numbered choice list
    std::string final_state;
};

struct ExplorationReport {
    long states_explored = 0;
    bool budget_exhausted = false;

    long error_configs = 0;
    long violations = 0;
    long trivially_satisfied = 0;
    long completed_runs = 0;   // trace consumed, verdict still open
    long stuck_runs = 0;       // schedule cannot continue before trace end
    long aborts_type_mismatch = 0;  // dynamically typed exploration only
    long aborts_aliasing = 0;

    std::optional<Witness> error_witness;
    std::optional<Witness> violation_witness;
    std::optional<Witness> trivial_witness;
    std::optional<Witness> abort_witness;
    /// A schedule on which a synchronous adaptation was validly applied.
    std::optional<Witness> clean_adaptation_witness;

    std::string text() const;
    std::string json() const;
};

/// Systematic DFS over all interleavings of internal monitor moves and trace
/// events, up to `budget` distinct states.
ExplorationReport explore(const Configuration& c, const Trace& t, long budget,
                          const PredicateTable& preds = {});

}  // namespace adaptrace

#endif
