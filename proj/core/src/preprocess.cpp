#include "adaptrace/preprocess.hpp"

#include <algorithm>

#include "adaptrace/match.hpp"

namespace adaptrace {

// ---- alpha renaming ---------------------------------------------------------

namespace {

class Renamer {
  public:
    FPtr run(const FPtr& f) { return formula(f, {}, {}); }

  private:
    std::string fresh(const std::string& base, std::set<std::string>& used) {
        if (!used.count(base)) {
            used.insert(base);
            return base;
        }
        for (int i = 1;; ++i) {
            std::string cand = base + "_" + std::to_string(i);
            if (!used.count(cand)) {
                used.insert(cand);
                return cand;
            }
        }
    }

    Term term(const Term& t, std::map<std::string, std::string>& tmap) {
        switch (t.kind) {
            case TermKind::Var: {
                Term out = t;
                if (t.binder) {
                    std::string nn = fresh(t.var, used_tvars_);
                    tmap[t.var] = nn;
                    out.var = nn;
                } else {
                    auto it = tmap.find(t.var);
                    if (it != tmap.end()) out.var = it->second;
                }
                return out;
            }
            case TermKind::Tuple:
            case TermKind::List:
            case TermKind::Arith: {
                Term out = t;
                for (auto& x : out.items) x = term(x, tmap);
                return out;
            }
            default: return t;
        }
    }

    Pattern pattern(const Pattern& p, std::map<std::string, std::string>& tmap) {
        Pattern out = p;
        if (p.kind == PatternKind::Any) return out;
        out.subject = term(p.subject, tmap);
        if (p.kind == PatternKind::Send) out.target = term(p.target, tmap);
        out.payload = term(p.payload, tmap);
        return out;
    }

    BoolExpr cond(const BoolExpr& b, const std::map<std::string, std::string>& tmap) {
        BoolExpr out = b;
        switch (b.kind) {
            case BoolKind::Cmp:
                out.lhs = rename_uses(b.lhs, tmap);
                out.rhs = rename_uses(b.rhs, tmap);
                break;
            case BoolKind::And:
            case BoolKind::Or:
            case BoolKind::Not:
                for (auto& c : out.children) c = cond(c, tmap);
                break;
            case BoolKind::Pred:
                for (auto& a : out.args) a = rename_uses(a, tmap);
                break;
            default: break;
        }
        return out;
    }

    static Term rename_uses(const Term& t, const std::map<std::string, std::string>& tmap) {
        Term out = t;
        if (t.kind == TermKind::Var) {
            auto it = tmap.find(t.var);
            if (it != tmap.end()) out.var = it->second;
            return out;
        }
        for (auto& x : out.items) x = rename_uses(x, tmap);
        return out;
    }

    static RefList rename_refs(const RefList& rl, const std::map<std::string, std::string>& tmap) {
        RefList out = rl;
        for (auto& r : out) {
            if (r.is_var) {
                auto it = tmap.find(r.var);
                if (it != tmap.end()) r.var = it->second;
            }
        }
        return out;
    }

    FPtr formula(const FPtr& f, std::map<std::string, std::string> fmap,
                 std::map<std::string, std::string> tmap) {
        switch (f->kind) {
            case FormulaKind::Tru:
            case FormulaKind::Fls:
            case FormulaKind::SyncFls:
                return f;
            case FormulaKind::FVar: {
                auto it = fmap.find(f->var);
                return it != fmap.end() ? f_fvar(it->second) : f;
            }
            case FormulaKind::And:
                return f_and(formula(f->left, fmap, tmap), formula(f->right, fmap, tmap));
            case FormulaKind::Nec: {
                Pattern p = pattern(f->pat, tmap);  // binders extend tmap in place
                RefList rl = rename_refs(f->releases, tmap);
                return f_nec(f->mode, std::move(p), std::move(rl), formula(f->left, fmap, tmap));
            }
            case FormulaKind::Max: {
                std::string nn = fresh(f->var, used_fvars_);
                fmap[f->var] = nn;
                return f_max(nn, formula(f->left, fmap, tmap));
            }
            case FormulaKind::If:
                return f_if(cond(f->cond, tmap), formula(f->left, fmap, tmap),
                            formula(f->right, fmap, tmap));
            case FormulaKind::AdaptA:
                return f_adapt_async(rename_refs(f->adaptees, tmap),
                                     rename_refs(f->releases, tmap),
                                     formula(f->left, fmap, tmap));
            case FormulaKind::AdaptS:
                return f_adapt_sync(f->akind, rename_refs(f->adaptees, tmap),
                                    rename_refs(f->releases, tmap),
                                    formula(f->left, fmap, tmap));
            case FormulaKind::Block:
                return f_block(rename_refs(f->adaptees, tmap), formula(f->left, fmap, tmap));
            case FormulaKind::Release:
                return f_release(rename_refs(f->adaptees, tmap), formula(f->left, fmap, tmap));
            case FormulaKind::Clear: {
                auto it = fmap.find(f->var);
                std::string v = it != fmap.end() ? it->second : f->var;
                return f_clear(v, formula(f->left, fmap, tmap));
            }
        }
        return f;
    }

    std::set<std::string> used_fvars_;
    std::set<std::string> used_tvars_;
};

}  // namespace

FPtr alpha_rename(const FPtr& f) { return Renamer{}.run(f); }

// ---- guardedness -------------------------------------------------------------

namespace {
// `open` holds fixpoint variables bound above without an intervening necessity.
std::optional<std::string> guarded(const FPtr& f, std::set<std::string> open) {
    switch (f->kind) {
        case FormulaKind::FVar:
            if (open.count(f->var)) return f->var;
            return std::nullopt;
        case FormulaKind::Nec:
            return guarded(f->left, {});
        case FormulaKind::Max: {
            open.insert(f->var);
            return guarded(f->left, std::move(open));
        }
        case FormulaKind::And:
        case FormulaKind::If: {
            if (auto v = guarded(f->left, open)) return v;
            if (f->right) return guarded(f->right, open);
            return std::nullopt;
        }
        case FormulaKind::AdaptA:
        case FormulaKind::AdaptS:
        case FormulaKind::Block:
        case FormulaKind::Release:
        case FormulaKind::Clear:
            return guarded(f->left, std::move(open));
        default: return std::nullopt;
    }
}
}  // namespace

std::optional<std::string> check_guarded(const FPtr& f) { return guarded(f, {}); }

// ---- synchronous-falsity encoding ----------------------------------------------

std::pair<bool, FPtr> encode_sync_falsities(const FPtr& f) {
    switch (f->kind) {
        case FormulaKind::SyncFls:
            return {true, f_fls()};
        case FormulaKind::Nec: {
            auto [flag, body] = encode_sync_falsities(f->left);
            if (flag)
                return {false, f_nec(NecMode::Blocking, f->pat, f->releases, std::move(body))};
            return {false, f_nec(f->mode, f->pat, f->releases, std::move(body))};
        }
        case FormulaKind::And: {
            auto [b1, l] = encode_sync_falsities(f->left);
            auto [b2, r] = encode_sync_falsities(f->right);
            return {b1 || b2, f_and(std::move(l), std::move(r))};
        }
        case FormulaKind::If: {
            auto [b1, l] = encode_sync_falsities(f->left);
            auto [b2, r] = encode_sync_falsities(f->right);
            return {b1 || b2, f_if(f->cond, std::move(l), std::move(r))};
        }
        case FormulaKind::Max: {
            auto [b, body] = encode_sync_falsities(f->left);
            return {b, f_max(f->var, std::move(body))};
        }
        case FormulaKind::Clear: {  // scope-transparent, like max
            auto [b, body] = encode_sync_falsities(f->left);
            return {b, f_clear(f->var, std::move(body))};
        }
        default:
            return {false, f};
    }
}

FPtr syn_enc(const FPtr& f) {
    auto [flag, out] = encode_sync_falsities(f);
    if (flag)
        throw PreprocessError("synchronous falsity with no preceding necessity");
    return out;
}

// ---- decoration ------------------------------------------------------------------

namespace {
FPtr decorate_in(const FPtr& f, const std::set<std::string>& scope) {
    switch (f->kind) {
        case FormulaKind::Nec: {
            Pattern p = f->pat;
            p.scope = scope;
            return f_nec(f->mode, std::move(p), f->releases, decorate_in(f->left, scope));
        }
        case FormulaKind::Max: {
            std::set<std::string> inner = scope;
            inner.insert(f->var);
            return f_max(f->var, decorate_in(f->left, inner));
        }
        case FormulaKind::And:
            return f_and(decorate_in(f->left, scope), decorate_in(f->right, scope));
        case FormulaKind::If:
            return f_if(f->cond, decorate_in(f->left, scope), decorate_in(f->right, scope));
        case FormulaKind::AdaptA:
            return f_adapt_async(f->adaptees, f->releases, decorate_in(f->left, scope));
        case FormulaKind::AdaptS:
            return f_adapt_sync(f->akind, f->adaptees, f->releases, decorate_in(f->left, scope));
        case FormulaKind::Block:
            return f_block(f->adaptees, decorate_in(f->left, scope));
        case FormulaKind::Release:
            return f_release(f->adaptees, decorate_in(f->left, scope));
        case FormulaKind::Clear:
            return f_clear(f->var, decorate_in(f->left, scope));
        default: return f;
    }
}
}  // namespace

FPtr decorate(const FPtr& f) { return decorate_in(f, {}); }

// ---- duplicate list entries ---------------------------------------------------------

namespace {
RefList dedup(const RefList& rl, const char* what, std::vector<LintWarning>& warnings) {
    RefList out;
    bool dup = false;
    for (const auto& r : rl) {
        bool seen = false;
        for (const auto& o : out)
            if (o == r) seen = true;
        if (seen) {
            dup = true;
            continue;
        }
        out.push_back(r);
    }
    if (dup)
        warnings.push_back({std::string("duplicate entries collapsed in ") + what + " list " +
                            to_string(rl)});
    return out;
}
}  // namespace

FPtr collapse_duplicate_refs(const FPtr& f, std::vector<LintWarning>& warnings) {
    switch (f->kind) {
        case FormulaKind::Nec:
            return f_nec(f->mode, f->pat, dedup(f->releases, "release", warnings),
                         collapse_duplicate_refs(f->left, warnings));
        case FormulaKind::And:
            return f_and(collapse_duplicate_refs(f->left, warnings),
                         collapse_duplicate_refs(f->right, warnings));
        case FormulaKind::If:
            return f_if(f->cond, collapse_duplicate_refs(f->left, warnings),
                        collapse_duplicate_refs(f->right, warnings));
        case FormulaKind::Max:
            return f_max(f->var, collapse_duplicate_refs(f->left, warnings));
        case FormulaKind::AdaptA:
            return f_adapt_async(dedup(f->adaptees, "adaptation", warnings),
                                 dedup(f->releases, "release", warnings),
                                 collapse_duplicate_refs(f->left, warnings));
        case FormulaKind::AdaptS:
            return f_adapt_sync(f->akind, dedup(f->adaptees, "adaptation", warnings),
                                dedup(f->releases, "release", warnings),
                                collapse_duplicate_refs(f->left, warnings));
        case FormulaKind::Block:
            return f_block(dedup(f->adaptees, "block", warnings),
                           collapse_duplicate_refs(f->left, warnings));
        case FormulaKind::Release:
            return f_release(dedup(f->adaptees, "release", warnings),
                             collapse_duplicate_refs(f->left, warnings));
        case FormulaKind::Clear:
            return f_clear(f->var, collapse_duplicate_refs(f->left, warnings));
        default: return f;
    }
}

// ---- blocking/release lints ------------------------------------------------------------

namespace {

struct LintCtx {
    std::vector<LintWarning> warnings;
};

// Necessities passed on the path from the block point; used for lint (b).
struct BlockedAt {
    Ref ref;
    std::vector<const Formula*> intermediate_necs;
};

bool same_ref(const Ref& a, const Ref& b) { return a == b; }

bool in_list(const RefList& rl, const Ref& r) {
    return std::any_of(rl.begin(), rl.end(), [&](const Ref& x) { return same_ref(x, r); });
}

void walk(const FPtr& f, std::vector<BlockedAt> blocked, LintCtx& ctx) {
    switch (f->kind) {
        case FormulaKind::Nec: {
            if (f->mode == NecMode::Blocking) {
                if (auto s = subject_of(f->pat)) blocked.push_back({*s, {}});
            }
            for (auto& b : blocked) b.intermediate_necs.push_back(f.get());
            walk(f->left, std::move(blocked), ctx);
            return;
        }
        case FormulaKind::AdaptS: {
            for (const auto& ad : f->adaptees) {
                auto it = std::find_if(blocked.begin(), blocked.end(),
                                       [&](const BlockedAt& b) { return same_ref(b.ref, ad); });
                if (it == blocked.end()) {
                    ctx.warnings.push_back(
                        {"ref " + to_string(ad) + " is adapted synchronously by " +
                         std::string(to_string(f->akind)) +
                         " but no preceding blocking necessity suspends it on this path"});
                } else {
                    // Skip the necessity that performed the block itself.
                    for (size_t i = 1; i < it->intermediate_necs.size(); ++i) {
                        const Formula* n = it->intermediate_necs[i];
                        if (!in_list(n->releases, ad))
                            ctx.warnings.push_back(
                                {"blocked ref " + to_string(ad) +
                                 " is missing from the release list of an intermediate "
                                 "necessity [" +
                                 to_string(n->pat) + "]"});
                    }
                }
            }
            // Refs released by this adaptation stop being tracked.
            std::vector<BlockedAt> rest;
            for (auto& b : blocked)
                if (!in_list(f->releases, b.ref)) rest.push_back(std::move(b));
            walk(f->left, std::move(rest), ctx);
            return;
        }
        case FormulaKind::AdaptA:
        case FormulaKind::Release: {
            std::vector<BlockedAt> rest;
            for (auto& b : blocked)
                if (!(f->kind == FormulaKind::Release ? in_list(f->adaptees, b.ref)
                                                      : in_list(f->releases, b.ref)))
                    rest.push_back(std::move(b));
            walk(f->left, std::move(rest), ctx);
            return;
        }
        case FormulaKind::And:
        case FormulaKind::If:
            walk(f->left, blocked, ctx);
            if (f->right) walk(f->right, std::move(blocked), ctx);
            return;
        case FormulaKind::Max:
        case FormulaKind::Block:
        case FormulaKind::Clear:
            walk(f->left, std::move(blocked), ctx);
            return;
        default: return;
    }
}

}  // namespace

std::vector<LintWarning> lint_blocking(const FPtr& f) {
    LintCtx ctx;
    walk(f, {}, ctx);
    return ctx.warnings;
}

Preprocessed preprocess(const FPtr& f, bool run_syn_enc) {
    Preprocessed out;
    out.formula = collapse_duplicate_refs(f, out.warnings);
    out.formula = alpha_rename(out.formula);
    if (auto v = check_guarded(out.formula))
        throw PreprocessError("unguarded fixpoint variable " + *v);
    if (run_syn_enc) out.formula = syn_enc(out.formula);
    out.formula = decorate(out.formula);
    return out;
}

}  // namespace adaptrace
