#ifndef ADAPTRACE_MATCH_HPP
#define ADAPTRACE_MATCH_HPP

#include <functional>

#include "adaptrace/ast.hpp"

namespace adaptrace {

/// Matches two patterns (either may be open or closed; a closed pattern is a
/// system action). Kinds must agree, or either side may be the whole-action
/// wildcard. Variable-vs-value positions yield bindings, variable-vs-variable
/// yields none, and conflicting bindings make the whole match fail.
/// Returns the substitution, or nullopt on mismatch.
std::optional<Subst> match_patterns(const Pattern& a, const Pattern& b);

/// The subject of a pattern: the sender for Send, the single subject
/// otherwise. Nullopt when the subject position is a wildcard or not an
/// identifier (and for the whole-action wildcard).
std::optional<Ref> subject_of(const Pattern& p);

/// Pid of a closed action's subject. Precondition: p is a closed action.
Value subject_pid(const Action& a);

/// All pids mentioned anywhere in a closed action.
std::vector<Value> action_pids(const Action& a);

/// The process bindings introduced by a pattern: variables annotated upid or
/// lpid. Dat-annotated and unannotated variables are excluded.
std::map<std::string, VType> typed_bindings(const Pattern& p);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// A closed boolean condition evaluates totally and deterministically.
/// Predicate calls are resolved against a user-supplied table.
using PredicateFn = std::function<bool(const std::vector<Value>&)>;
using PredicateTable = std::map<std::string, PredicateFn>;

class EvalError : public std::runtime_error {
  public:
    explicit EvalError(const std::string& what) : std::runtime_error(what) {}
};

/// Evaluates a closed term (arithmetic requires integer operands; throws
/// EvalError on open terms or non-integer arithmetic).
Value eval_term(const Term& t);

/// Evaluates a closed condition. Lt/Gt on non-integers is false.
bool eval_bool(const BoolExpr& b, const PredicateTable& preds);

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

Term apply_subst(const Term& t, const Subst& s);
Pattern apply_subst(const Pattern& p, const Subst& s);
BoolExpr apply_subst(const BoolExpr& b, const Subst& s);
RefList apply_subst(const RefList& rl, const Subst& s);

/// Replaces free term variables throughout patterns, conditions and actor
/// lists. Binder occurrences shadow: the bound name is dropped from the
/// substitution for the binder's scope.
FPtr apply_subst(const FPtr& f, const Subst& s);

/// Capture-avoiding substitution of the fixpoint variable x by g.
FPtr subst_formula_var(const FPtr& f, const std::string& x, const FPtr& g);

}  // namespace adaptrace

#endif
