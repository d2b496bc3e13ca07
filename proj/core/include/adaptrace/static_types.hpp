#ifndef ADAPTRACE_STATIC_TYPES_HPP
#define ADAPTRACE_STATIC_TYPES_HPP

#include <variant>

#include "adaptrace/ast.hpp"

namespace adaptrace {

/// Key of a value environment: a statically known pid or a term variable.
struct EnvKey {
    bool is_var = false;
    std::string name;

    static EnvKey pid(std::string n) { return {false, std::move(n)}; }
    static EnvKey var(std::string n) { return {true, std::move(n)}; }
    static std::optional<EnvKey> from_ref(const Ref& r);

    bool operator<(const EnvKey& o) const {
        if (is_var != o.is_var) return !is_var;
        return name < o.name;
    }
    bool operator==(const EnvKey& o) const { return is_var == o.is_var && name == o.name; }
    std::string str() const { return name; }
};

using ValueEnv = std::map<EnvKey, VType>;
using FormulaEnv = std::map<std::string, ValueEnv>;
using ReleaseSet = std::set<EnvKey>;

std::string to_string(const ValueEnv& g);

/// Union of two environments when they agree on shared keys; the first
/// conflicting key otherwise.
std::variant<ValueEnv, EnvKey> env_extend(const ValueEnv& g, const ValueEnv& g2);

/// Enumerates every way of dividing g between two branches: unrestricted
/// entries are copied to both sides, each linear entry goes to exactly one.
class SplitEnumerator {
  public:
    explicit SplitEnumerator(const ValueEnv& g);

    unsigned long long count() const { return 1ull << linear_.size(); }
    /// Split number `mask`: bit i set sends the i-th linear entry right.
    std::pair<ValueEnv, ValueEnv> at(unsigned long long mask) const;

  private:
    ValueEnv shared_;
    std::vector<std::pair<EnvKey, VType>> linear_;
};

/// Side-effect adjustment: every ref in q typed blocked-linear becomes
/// linear; everything else is unchanged; refs absent from g are ignored.
ValueEnv apply_release_effects(const ValueEnv& g, const ReleaseSet& q);

/// The top guarding patterns of every branch; the whole-action wildcard
/// stands in for unguarded branches.
std::vector<Pattern> top_patterns(const FPtr& f);

/// One-way mutual exclusion: the actors f releases when trivially satisfied,
/// provided f can never match together with g. Nullopt when inconclusive.
std::optional<ReleaseSet> vexcl(const FPtr& f, const FPtr& g);

/// Mutual exclusion of two conjuncts: their release sets, or nullopt.
std::optional<std::pair<ReleaseSet, ReleaseSet>> excl(const FPtr& f, const FPtr& g);

// ---------------------------------------------------------------------------
// Type checking
// ---------------------------------------------------------------------------

struct Rejection {
    std::string rule;     // typing rule that failed, e.g. "tAdS"
    std::string message;  // offending judgment in derivation style
};

struct TypeCheckResult {
    bool ok = false;
    Rejection rejection;
    std::vector<std::string> derivation;  // one line per applied rule
};

/// Rule-directed check of a preprocessed (alpha-renamed, decorated) script.
/// The initial environment may not contain blocked-linear entries.
TypeCheckResult typecheck(const FormulaEnv& sigma, const ValueEnv& g, const FPtr& f,
                          bool record_derivation = false);

/// Builds the initial environment from a script's `types:` header.
ValueEnv env_from_types(const std::map<std::string, VType>& types);

}  // namespace adaptrace

#endif
