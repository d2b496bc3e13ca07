#include "adaptrace/core_semantics.hpp"

#include <algorithm>

#include "adaptrace/match.hpp"
#include "adaptrace/parse.hpp"

namespace adaptrace {

// ---- structural equivalence ---------------------------------------------------

namespace {

void flatten_and(const FPtr& f, std::vector<FPtr>& out) {
    if (f->kind == FormulaKind::And) {
        flatten_and(f->left, out);
        flatten_and(f->right, out);
    } else {
        out.push_back(f);
    }
}

int count_max_binders(const FPtr& f) {
    int n = f->kind == FormulaKind::Max ? 1 : 0;
    if (f->left) n += count_max_binders(f->left);
    if (f->right) n += count_max_binders(f->right);
    return n;
}

}  // namespace

FPtr struct_eq_normalize(const FPtr& f) {
    switch (f->kind) {
        case FormulaKind::And: {
            std::vector<FPtr> conjuncts;
            flatten_and(f, conjuncts);
            std::vector<FPtr> normed;
            for (const auto& c : conjuncts) {
                FPtr n = struct_eq_normalize(c);
                if (n->kind == FormulaKind::Fls) return f_fls();
                if (n->kind == FormulaKind::Tru) continue;  // unit
                if (n->kind == FormulaKind::And) {
                    flatten_and(n, normed);
                } else {
                    normed.push_back(n);
                }
            }
            if (normed.empty()) return f_tru();
            std::sort(normed.begin(), normed.end(),
                      [](const FPtr& a, const FPtr& b) { return compare(a, b) < 0; });
            FPtr acc = normed.back();
            for (size_t i = normed.size() - 1; i-- > 0;) acc = f_and(normed[i], acc);
            return acc;
        }
        case FormulaKind::Nec:
            return f_nec(f->mode, f->pat, f->releases, struct_eq_normalize(f->left));
        case FormulaKind::Max:
            return f_max(f->var, struct_eq_normalize(f->left));
        case FormulaKind::If:
            return f_if(f->cond, struct_eq_normalize(f->left), struct_eq_normalize(f->right));
        case FormulaKind::AdaptA:
            return f_adapt_async(f->adaptees, f->releases, struct_eq_normalize(f->left));
        case FormulaKind::AdaptS:
            return f_adapt_sync(f->akind, f->adaptees, f->releases,
                                struct_eq_normalize(f->left));
        case FormulaKind::Block:
            return f_block(f->adaptees, struct_eq_normalize(f->left));
        case FormulaKind::Release:
            return f_release(f->adaptees, struct_eq_normalize(f->left));
        case FormulaKind::Clear:
            return f_clear(f->var, struct_eq_normalize(f->left));
        default: return f;
    }
}

// ---- silent reductions ------------------------------------------------------------

namespace {

struct TauResult {
    FPtr next;
    bool unfolded = false;  // the step was a fixpoint unfolding
};

std::optional<TauResult> tau_step_impl(const FPtr& f, const PredicateTable& preds) {
    switch (f->kind) {
        case FormulaKind::If:
            return TauResult{eval_bool(f->cond, preds) ? f->left : f->right, false};
        case FormulaKind::Max:
            return TauResult{subst_formula_var(f->left, f->var, f), true};
        case FormulaKind::And: {
            if (auto l = tau_step_impl(f->left, preds))
                return TauResult{f_and(l->next, f->right), l->unfolded};
            if (auto r = tau_step_impl(f->right, preds))
                return TauResult{f_and(f->left, r->next), r->unfolded};
            return std::nullopt;
        }
        default: return std::nullopt;
    }
}

}  // namespace

std::variant<FPtr, NoTau> tau_step(const FPtr& f, const PredicateTable& preds) {
    if (auto r = tau_step_impl(f, preds)) return r->next;
    return NoTau{};
}

FPtr tau_fixpoint(const FPtr& f, const PredicateTable& preds) {
    // Condition evaluation strictly shrinks the formula; only unfoldings are
    // charged against the fuel. A guarded formula unfolds each binder at
    // most once between events.
    FPtr cur = f;
    int fuel = 2 * count_max_binders(f) + 4;
    while (true) {
        auto next = tau_step_impl(cur, preds);
        if (!next) return cur;
        if (next->unfolded && --fuel < 0) throw FuelExhausted();
        cur = next->next;
    }
}

FPtr alpha_step(const FPtr& f, const Action& a, const PredicateTable& preds) {
    switch (f->kind) {
        case FormulaKind::Tru: return f_tru();
        case FormulaKind::Fls: return f_fls();
        case FormulaKind::Nec: {
            if (auto s = match_patterns(f->pat, a)) return apply_subst(f->left, *s);
            return f_tru();
        }
        case FormulaKind::And:
            return f_and(alpha_step(f->left, a, preds), alpha_step(f->right, a, preds));
        default:
            throw EvalError("event step on a non-quiescent formula: " + to_string(f));
    }
}

CoreVerdict run_core(const FPtr& f, const Trace& t, const PredicateTable& preds) {
    // Silent moves run lazily, just before an event is consumed; the reported
    // residual between events is then the folded recursive formula.
    FPtr cur = struct_eq_normalize(f);
    for (const auto& a : t) {
        if (cur->kind == FormulaKind::Fls || cur->kind == FormulaKind::Tru) break;
        cur = struct_eq_normalize(
            alpha_step(struct_eq_normalize(tau_fixpoint(cur, preds)), a, preds));
    }
    FPtr settled = struct_eq_normalize(tau_fixpoint(cur, preds));
    CoreVerdict v;
    if (settled->kind == FormulaKind::Fls) {
        v.kind = CoreVerdictKind::Violated;
        v.residual = settled;
    } else if (settled->kind == FormulaKind::Tru) {
        v.kind = CoreVerdictKind::TriviallySatisfied;
        v.residual = settled;
    } else {
        v.kind = CoreVerdictKind::Inconclusive;
        v.residual = cur;
    }
    return v;
}

// ---- violation relation (independent oracle) ------------------------------------------

namespace {

bool violates(const FPtr& f, const Trace& t, size_t pos, int fuel, const PredicateTable& preds) {
    switch (f->kind) {
        case FormulaKind::Tru: return false;
        case FormulaKind::Fls: return true;
        case FormulaKind::If:
            return eval_bool(f->cond, preds) ? violates(f->left, t, pos, fuel, preds)
                                             : violates(f->right, t, pos, fuel, preds);
        case FormulaKind::And:
            return violates(f->left, t, pos, fuel, preds) ||
                   violates(f->right, t, pos, fuel, preds);
        case FormulaKind::Nec: {
            if (pos >= t.size()) return false;
            auto s = match_patterns(f->pat, t[pos]);
            if (!s) return false;
            // A necessity consumes an event; the unfolding allowance resets.
            FPtr cont = apply_subst(f->left, *s);
            int reset = 2 * count_max_binders(cont) + 4;
            return violates(cont, t, pos + 1, reset, preds);
        }
        case FormulaKind::Max: {
            if (fuel <= 0) throw FuelExhausted();
            return violates(subst_formula_var(f->left, f->var, f), t, pos, fuel - 1, preds);
        }
        default:
            throw EvalError("violation relation is defined on the core logic only: " +
                            to_string(f));
    }
}

}  // namespace

bool violates_oracle(const FPtr& f, const Trace& t, const PredicateTable& preds) {
    int fuel = 2 * count_max_binders(f) + 4;
    return violates(f, t, 0, fuel, preds);
}

std::optional<Mismatch> correspondence_check(const FPtr& f, const Trace& t,
                                             const PredicateTable& preds) {
    bool oracle = violates_oracle(f, t, preds);
    bool lts = run_core(f, t, preds).kind == CoreVerdictKind::Violated;
    if (oracle == lts) return std::nullopt;
    Mismatch m;
    m.oracle_violates = oracle;
    m.lts_violates = lts;
    m.trace = t;
    m.formula = to_string(f);
    return m;
}

Trace trace_from_text(const std::string& text, const std::set<std::string>& pids) {
    return parse_trace(text, pids);
}

}  // namespace adaptrace
