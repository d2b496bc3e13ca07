#ifndef ADAPTRACE_AST_HPP
#define ADAPTRACE_AST_HPP

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace adaptrace {

// ---------------------------------------------------------------------------
// Values
// ---------------------------------------------------------------------------

enum class ValueKind { Pid, Atom, Int, Tuple, List };

/// A closed data value: an actor identifier, an atom, an integer, or a
/// tuple/list of values. Pid and Atom names live in disjoint namespaces.
struct Value {
    ValueKind kind = ValueKind::Atom;
    std::string name;          // Pid, Atom
    long long num = 0;         // Int
    std::vector<Value> items;  // Tuple, List

    static Value pid(std::string n);
    static Value atom(std::string n);
    static Value integer(long long n);
    static Value tuple(std::vector<Value> xs);
    static Value list(std::vector<Value> xs);

    bool is_pid() const { return kind == ValueKind::Pid; }
};

int compare(const Value& a, const Value& b);
bool operator==(const Value& a, const Value& b);
bool operator!=(const Value& a, const Value& b);
bool operator<(const Value& a, const Value& b);

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Value types of the adaptation-script type system. LpidB (a blocked linear
/// id) is used internally for tracking and never appears in source scripts.
enum class VType { Dat, Upid, Lpid, LpidB };

const char* to_string(VType t);

// ---------------------------------------------------------------------------
// Pattern terms
// ---------------------------------------------------------------------------

enum class TermKind { Wildcard, Var, Lit, Tuple, List, Arith };
enum class ArithOp { Add, Sub };

/// A term inside an event pattern: a wildcard, a variable (possibly the
/// binding occurrence, possibly type-annotated), a literal value, a
/// tuple/list of terms, or an arithmetic expression over terms.
struct Term {
    TermKind kind = TermKind::Wildcard;
    std::string var;                // Var
    bool binder = false;            // Var: this occurrence binds the name
    std::optional<VType> annot;     // Var: annotation (binding occurrence)
    Value lit;                      // Lit
    std::vector<Term> items;        // Tuple, List, Arith (two operands)
    ArithOp op = ArithOp::Add;      // Arith

    static Term wildcard();
    static Term variable(std::string name, std::optional<VType> annot = {}, bool binder = false);
    static Term value(Value v);
    static Term tuple(std::vector<Term> xs);
    static Term list(std::vector<Term> xs);
    static Term arith(ArithOp op, Term lhs, Term rhs);

    bool is_closed() const;  // no Var, no Wildcard anywhere
};

int compare(const Term& a, const Term& b);
bool operator==(const Term& a, const Term& b);
bool operator!=(const Term& a, const Term& b);

/// Converts a closed, arithmetic-free term back to the value it denotes.
std::optional<Value> term_to_value(const Term& t);
Term value_to_term(const Value& v);

// ---------------------------------------------------------------------------
// Event patterns and actions
// ---------------------------------------------------------------------------

/// Send carries the committing sender as subject plus a target; Recv, Call
/// and Ret carry a single subject. Any is the whole-action wildcard; it is
/// produced internally (top-pattern analysis) and rejected in source.
enum class PatternKind { Send, Recv, Call, Ret, Any };

struct Pattern {
    PatternKind kind = PatternKind::Any;
    Term subject;
    Term target;   // Send only
    Term payload;
    std::set<std::string> scope;  // enclosing fixpoint variables (decoration)

    static Pattern send(Term subject, Term target, Term payload);
    static Pattern recv(Term subject, Term payload);
    static Pattern call(Term subject, Term payload);
    static Pattern ret(Term subject, Term payload);
    static Pattern any();

    /// Closed in every term position: usable as a system action.
    bool is_closed() const;
};

/// System actions are closed patterns whose subject is a pid.
using Action = Pattern;

int compare(const Pattern& a, const Pattern& b);  // ignores scope decoration
bool operator==(const Pattern& a, const Pattern& b);
bool operator!=(const Pattern& a, const Pattern& b);

// ---------------------------------------------------------------------------
// Actor references
// ---------------------------------------------------------------------------

/// An entry of an adaptation or release list: either a term variable to be
/// substituted at runtime or a concrete value (normally a pid).
struct Ref {
    bool is_var = false;
    std::string var;
    Value val;

    static Ref variable(std::string name);
    static Ref value(Value v);
    static Ref pid(std::string name) { return value(Value::pid(std::move(name))); }
};

using RefList = std::vector<Ref>;

int compare(const Ref& a, const Ref& b);
bool operator==(const Ref& a, const Ref& b);
bool operator<(const Ref& a, const Ref& b);

// ---------------------------------------------------------------------------
// Boolean conditions
// ---------------------------------------------------------------------------

enum class BoolKind { Lit, Cmp, And, Or, Not, Pred };
enum class CmpOp { Eq, Ne, Lt, Gt };

struct BoolExpr {
    BoolKind kind = BoolKind::Lit;
    bool lit = true;                 // Lit
    CmpOp op = CmpOp::Eq;            // Cmp
    Term lhs, rhs;                   // Cmp
    std::vector<BoolExpr> children;  // And, Or (2), Not (1)
    std::string pred;                // Pred: name in the predicate table
    std::vector<Term> args;          // Pred

    static BoolExpr literal(bool b);
    static BoolExpr cmp(CmpOp op, Term lhs, Term rhs);
    static BoolExpr conj(BoolExpr l, BoolExpr r);
    static BoolExpr disj(BoolExpr l, BoolExpr r);
    static BoolExpr negate(BoolExpr c);
    static BoolExpr predicate(std::string name, std::vector<Term> args);
};

int compare(const BoolExpr& a, const BoolExpr& b);
bool operator==(const BoolExpr& a, const BoolExpr& b);
bool operator!=(const BoolExpr& a, const BoolExpr& b);

// ---------------------------------------------------------------------------
// Formulas
// ---------------------------------------------------------------------------

enum class NecMode { Core, Async, Blocking };

/// Synchronous adaptation kinds share one semantics at the runtime layer;
/// the tag selects the concrete effect applied by the workload simulator.
enum class AdaptKind { Generic, Kill, Restart, Purge, SLink, SUnlink };

const char* to_string(AdaptKind k);
const char* to_string(NecMode m);

enum class FormulaKind {
    Tru,
    Fls,
    SyncFls,
    And,
    Nec,
    Max,
    FVar,
    If,
    AdaptA,
    AdaptS,
    Block,    // runtime only
    Release,  // runtime only
    Clear,    // runtime only
};

struct Formula;
using FPtr = std::shared_ptr<const Formula>;

struct Formula {
    FormulaKind kind = FormulaKind::Tru;
    FPtr left;   // And: left conjunct; Nec/Max/Adapt*/Block/Release/Clear: body; If: then
    FPtr right;  // And: right conjunct; If: else

    NecMode mode = NecMode::Core;  // Nec
    Pattern pat;                   // Nec
    RefList releases;              // Nec, AdaptA, AdaptS
    std::string var;               // Max, FVar, Clear
    BoolExpr cond;                 // If
    AdaptKind akind = AdaptKind::Generic;  // AdaptA (Generic), AdaptS
    RefList adaptees;              // AdaptA, AdaptS
};

FPtr f_tru();
FPtr f_fls();
FPtr f_sync_fls();
FPtr f_and(FPtr l, FPtr r);
FPtr f_nec(NecMode mode, Pattern pat, RefList releases, FPtr body);
FPtr f_max(std::string var, FPtr body);
FPtr f_fvar(std::string name);
FPtr f_if(BoolExpr cond, FPtr then_f, FPtr else_f);
FPtr f_adapt_async(RefList adaptees, RefList releases, FPtr body);
FPtr f_adapt_sync(AdaptKind kind, RefList adaptees, RefList releases, FPtr body);
FPtr f_block(RefList refs, FPtr body);
FPtr f_release(RefList refs, FPtr body);
FPtr f_clear(std::string var, FPtr body);

int compare(const FPtr& a, const FPtr& b);
bool equal(const FPtr& a, const FPtr& b);

// ---------------------------------------------------------------------------
// Substitutions
// ---------------------------------------------------------------------------

/// A finite map from term variables to values. Merging conflicting bindings
/// fails rather than overriding.
using Subst = std::map<std::string, Value>;

/// Union of two substitutions; nullopt when they disagree on a shared key.
std::optional<Subst> merge_substs(const Subst& a, const Subst& b);

// ---------------------------------------------------------------------------
// Printing (concrete syntax; parse(print(f)) round-trips)
// ---------------------------------------------------------------------------

std::string to_string(const Value& v);
std::string to_string(const Term& t);
std::string to_string(const Pattern& p);
std::string to_string(const Ref& r);
std::string to_string(const RefList& rl);
std::string to_string(const BoolExpr& b);
std::string to_string(const FPtr& f);
std::string to_string(const Subst& s);

}  // namespace adaptrace

#endif
