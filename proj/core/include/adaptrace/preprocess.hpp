#ifndef ADAPTRACE_PREPROCESS_HPP
#define ADAPTRACE_PREPROCESS_HPP

#include "adaptrace/ast.hpp"

namespace adaptrace {

struct LintWarning {
    std::string message;
};

class PreprocessError : public std::runtime_error {
  public:
    explicit PreprocessError(const std::string& what) : std::runtime_error(what) {}
};

/// Renames fixpoint variables and term-variable binders so that all binders
/// are pairwise distinct and distinct from free names.
FPtr alpha_rename(const FPtr& f);

/// Every fixpoint variable occurrence must sit under at least one necessity
/// within its binder. Returns the offending variable, or nullopt when ok.
std::optional<std::string> check_guarded(const FPtr& f);

/// Rewrites synchronous falsities into blocking necessities on the first
/// necessity of each path. The returned flag reports a residual synchronous
/// falsity that no necessity guards (an error at top level).
std::pair<bool, FPtr> encode_sync_falsities(const FPtr& f);

/// encode_sync_falsities with the top-level residual flag turned into a
/// PreprocessError.
FPtr syn_enc(const FPtr& f);

/// Decorates every pattern with the set of enclosing fixpoint variables.
FPtr decorate(const FPtr& f);

/// Collapses duplicate entries in adaptation/release lists, warning once per
/// collapsed list.
FPtr collapse_duplicate_refs(const FPtr& f, std::vector<LintWarning>& warnings);

/// Advisory blocking/release lints: (a) a synchronous adaptation on a ref
/// with no preceding blocking necessity on that ref along some path; (b) a
/// blocked ref missing from the release list of an intermediate necessity
/// between its block point and its adaptation.
std::vector<LintWarning> lint_blocking(const FPtr& f);

/// Full normalization pipeline: duplicate-ref collapse, alpha renaming,
/// guardedness check, synchronous-falsity encoding and decoration.
struct Preprocessed {
    FPtr formula;
    std::vector<LintWarning> warnings;
};
Preprocessed preprocess(const FPtr& f, bool run_syn_enc = true);

}  // namespace adaptrace

#endif
