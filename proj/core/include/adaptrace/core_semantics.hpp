#ifndef ADAPTRACE_CORE_SEMANTICS_HPP
#define ADAPTRACE_CORE_SEMANTICS_HPP

#include <variant>

#include "adaptrace/ast.hpp"
#include "adaptrace/match.hpp"

namespace adaptrace {

using Trace = std::vector<Action>;

enum class CoreVerdictKind { Violated, TriviallySatisfied, Inconclusive };

struct CoreVerdict {
    CoreVerdictKind kind = CoreVerdictKind::Inconclusive;
    FPtr residual;
};

class FuelExhausted : public std::runtime_error {
  public:
    FuelExhausted() : std::runtime_error("fixpoint unfolding fuel exhausted") {}
};

/// Exhaustively applies ff-absorption and tt-units over conjunctions, then
/// orders conjuncts canonically. Two formulas equivalent under the structural
/// rules normalize identically.
FPtr struct_eq_normalize(const FPtr& f);

struct NoTau {};

/// One silent reduction, leftmost-innermost: condition evaluation, fixpoint
/// unfolding, or a conjunct's tau. NoTau when none applies.
std::variant<FPtr, NoTau> tau_step(const FPtr& f, const PredicateTable& preds = {});

/// All taus, bounded by twice the number of fixpoint binders per call (a
/// guarded formula unfolds each binder at most once between events).
FPtr tau_fixpoint(const FPtr& f, const PredicateTable& preds = {});

/// One event transition on a tau-quiescent formula: a matching necessity
/// binds and continues, a mismatch collapses the necessity to tt,
/// conjunctions step both sides, verdicts are idempotent.
FPtr alpha_step(const FPtr& f, const Action& a, const PredicateTable& preds = {});

/// Weak-transition run over the whole trace; interleaves tau fixpoints and
/// event steps and classifies the normalized residual.
CoreVerdict run_core(const FPtr& f, const Trace& t, const PredicateTable& preds = {});

/// Independent implementation of the finite-trace violation relation, kept
/// deliberately separate from the reduction path above.
bool violates_oracle(const FPtr& f, const Trace& t, const PredicateTable& preds = {});

struct Mismatch {
    bool oracle_violates = false;
    bool lts_violates = false;
    Trace trace;
    std::string formula;
};

/// Checks that the violation relation and the reduction semantics agree on
/// (f, t). Returns the disagreement as data when they do not.
std::optional<Mismatch> correspondence_check(const FPtr& f, const Trace& t,
                                             const PredicateTable& preds = {});

/// Convenience: read a trace file body.
Trace trace_from_text(const std::string& text, const std::set<std::string>& pids);

}  // namespace adaptrace

#endif
