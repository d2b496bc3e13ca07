#ifndef ADAPTRACE_DYNAMIC_TYPES_HPP
#define ADAPTRACE_DYNAMIC_TYPES_HPP

#include <variant>

#include "adaptrace/runtime.hpp"
#include "adaptrace/static_types.hpp"

namespace adaptrace {

/// Runtime value environment: type assumptions learned about concrete values.
using DynEnv = std::map<Value, VType>;

/// Scoping environment: linear pids currently in use, mapped to the fixpoint
/// variables under which they were bound. Entries with an empty scope set are
/// universally scoped and survive every clear.
using ScopeEnv = std::map<Value, std::set<std::string>>;

std::string to_string(const DynEnv& g);
std::string to_string(const ScopeEnv& d);

/// Initial scoping environment: every statically known linear pid, scoped
/// universally.
ScopeEnv initial_scope(const DynEnv& g);
DynEnv dyn_env_from_types(const std::map<std::string, VType>& types);

struct TypedMonitor {
    DynEnv env;
    ScopeEnv used;
    FPtr formula;
};

struct TypedConfiguration {
    SystemState sys;
    TypedMonitor mon;
};

struct Incompatibility {
    enum class Kind { TypeMismatch, Aliasing };
    Kind kind = Kind::TypeMismatch;
    std::string detail;
};

struct NoMatchResidual {
    FPtr residual;  // release(RL) tt
};

struct CannotObserve {};

/// How a value environment changes under a monitor label: block flips linear
/// entries to blocked-linear, release the reverse, events may extend it
/// (validated by after_event_extension), everything else is the identity.
DynEnv after(const DynEnv& g, const MonLabel& l);
bool after_event_extension(const DynEnv& before, const DynEnv& extended);

/// One dynamically checked necessity step: on a match the environment is
/// extended with the matched process bindings, aliasing against in-use
/// linear pids is rejected, and blocking necessities prefix a block of the
/// action's subject. On a mismatch the release residual is returned.
std::variant<TypedMonitor, Incompatibility, NoMatchResidual> dt_necessity_step(
    const TypedMonitor& m, const Action& a);

/// Fixpoint unfolding with a clear-prefixed replacement.
TypedMonitor dt_max_unfold(const TypedMonitor& m);

/// Drops every in-use entry scoped under x; universally scoped entries stay.
TypedMonitor dt_clear(const TypedMonitor& m, const std::string& x);

/// Steps a conjunction on an event with branch-local environment evolution,
/// then merges; simultaneous fresh linear bindings of the same pid across
/// branches are an aliasing incompatibility.
std::variant<TypedMonitor, Incompatibility> dt_conjunction_step(const TypedMonitor& m,
                                                                const Action& a);

/// Full event transition for any runtime formula.
std::variant<TypedMonitor, Incompatibility, CannotObserve> dt_observe(
    const TypedMonitor& m, const Action& a);

/// Internal (adaptation/release/block/silent) moves with their environment
/// updates. env_refused marks a release/block whose type-environment
/// precondition fails (possible only for unchecked scripts).
struct DtMove {
    MonLabel label;
    TypedMonitor next;
    bool env_refused = false;
};
std::vector<DtMove> dt_mon_steps(const TypedMonitor& m, const PredicateTable& preds = {});

/// Error configuration over typed monitors: a synchronous adaptation or a
/// release the system (or the runtime environment) prohibits.
bool dt_is_error(const TypedConfiguration& c, const PredicateTable& preds = {});

/// All-interleavings exploration; type incompatibilities abort the monitor
/// (it terminates as tt) and are reported, never errors.
ExplorationReport dt_explore(const TypedConfiguration& c, const Trace& t, long budget,
                             const PredicateTable& preds = {});

// ---------------------------------------------------------------------------
// Deterministic engine (single schedule; used by the CLI and the protocol
// simulator)
// ---------------------------------------------------------------------------

struct EngineEvent {
    long step = 0;
    std::string rule;      // rNc1/rNc2/rNc3/rMax/rClr/rTru/rFls/iAda/iTrm/...
    std::string label;
    std::string env_delta;
    std::string used_delta;
    std::string verdict;   // set on the final record
};

struct EngineResult {
    enum class Verdict { Inconclusive, Violated, TriviallySatisfied, Aborted };
    Verdict verdict = Verdict::Inconclusive;
    std::optional<Incompatibility> abort;
    long adaptations_applied = 0;
    long error_configs = 0;
    TypedMonitor final_monitor;
};

/// Runs the typed monitor deterministically over a trace against an abstract
/// system: internal moves are applied eagerly in enumeration order before
/// each event. Logging callback receives one record per engine step.
EngineResult dt_run(const TypedConfiguration& c, const Trace& t,
                    const PredicateTable& preds = {},
                    const std::function<void(const EngineEvent&)>& log = {});

}  // namespace adaptrace

#endif
