#include "adaptrace/match.hpp"

namespace adaptrace {

namespace {

// Arithmetic subterms are opaque to binding: they match any integer-shaped
// counterpart without producing bindings unless closed, in which case they
// evaluate and compare as literals.
std::optional<Value> try_eval(const Term& t) {
    if (!t.is_closed()) return std::nullopt;
    switch (t.kind) {
        case TermKind::Lit: return t.lit;
        case TermKind::Tuple:
        case TermKind::List: {
            std::vector<Value> xs;
            for (const auto& it : t.items) {
                auto v = try_eval(it);
                if (!v) return std::nullopt;
                xs.push_back(std::move(*v));
            }
            return t.kind == TermKind::Tuple ? Value::tuple(std::move(xs))
                                             : Value::list(std::move(xs));
        }
        case TermKind::Arith: {
            auto l = try_eval(t.items[0]);
            auto r = try_eval(t.items[1]);
            if (!l || !r) return std::nullopt;
            if (l->kind != ValueKind::Int || r->kind != ValueKind::Int) return std::nullopt;
            long long n = t.op == ArithOp::Add ? l->num + r->num : l->num - r->num;
            return Value::integer(n);
        }
        default: return std::nullopt;
    }
}

bool shape_is_int(const Term& t) { return t.kind == TermKind::Arith; }

std::optional<Subst> term_match(const Term& a, const Term& b);

std::optional<Subst> seq_match(const std::vector<Term>& as, const std::vector<Term>& bs) {
    if (as.size() != bs.size()) return std::nullopt;
    Subst acc;
    for (size_t i = 0; i < as.size(); ++i) {
        auto s = term_match(as[i], bs[i]);
        if (!s) return std::nullopt;
        auto merged = merge_substs(acc, *s);
        if (!merged) return std::nullopt;
        acc = std::move(*merged);
    }
    return acc;
}

std::optional<Subst> term_match(const Term& a, const Term& b) {
    if (a.kind == TermKind::Wildcard || b.kind == TermKind::Wildcard) return Subst{};

    // Collapse closed arithmetic to its value before structural comparison.
    if (a.kind == TermKind::Arith) {
        if (auto v = try_eval(a)) return term_match(Term::value(*v), b);
    }
    if (b.kind == TermKind::Arith) {
        if (auto v = try_eval(b)) return term_match(a, Term::value(*v));
    }

    if (a.kind == TermKind::Var && b.kind == TermKind::Var) return Subst{};
    if (a.kind == TermKind::Var) {
        if (auto v = term_to_value(b)) return Subst{{a.var, *v}};
        return Subst{};  // var vs open term: no binding
    }
    if (b.kind == TermKind::Var) {
        if (auto v = term_to_value(a)) return Subst{{b.var, *v}};
        return Subst{};
    }

    // Open arithmetic denotes an unknown integer.
    if (shape_is_int(a) || shape_is_int(b)) {
        const Term& other = shape_is_int(a) ? b : a;
        if (other.kind == TermKind::Lit && other.lit.kind == ValueKind::Int) return Subst{};
        if (other.kind == TermKind::Arith) return Subst{};
        return std::nullopt;  // an integer can never equal a tuple/list/atom/pid
    }

    switch (a.kind) {
        case TermKind::Lit:
            if (b.kind != TermKind::Lit) {
                if (b.kind == TermKind::Tuple || b.kind == TermKind::List) {
                    // A literal tuple/list value can still match a structured term.
                    if (a.lit.kind == ValueKind::Tuple && b.kind == TermKind::Tuple) {
                        std::vector<Term> as;
                        for (const auto& v : a.lit.items) as.push_back(value_to_term(v));
                        return seq_match(as, b.items);
                    }
                    if (a.lit.kind == ValueKind::List && b.kind == TermKind::List) {
                        std::vector<Term> as;
                        for (const auto& v : a.lit.items) as.push_back(value_to_term(v));
                        return seq_match(as, b.items);
                    }
                }
                return std::nullopt;
            }
            return a.lit == b.lit ? std::optional<Subst>(Subst{}) : std::nullopt;
        case TermKind::Tuple:
            if (b.kind == TermKind::Tuple) return seq_match(a.items, b.items);
            if (b.kind == TermKind::Lit && b.lit.kind == ValueKind::Tuple)
                return term_match(b, a);
            return std::nullopt;
        case TermKind::List:
            if (b.kind == TermKind::List) return seq_match(a.items, b.items);
            if (b.kind == TermKind::Lit && b.lit.kind == ValueKind::List)
                return term_match(b, a);
            return std::nullopt;
        default: return std::nullopt;
    }
}

}  // namespace

std::optional<Subst> match_patterns(const Pattern& a, const Pattern& b) {
    if (a.kind == PatternKind::Any || b.kind == PatternKind::Any) return Subst{};
    if (a.kind != b.kind) return std::nullopt;

    auto subj = term_match(a.subject, b.subject);
    if (!subj) return std::nullopt;
    Subst acc = *subj;
    if (a.kind == PatternKind::Send) {
        auto tgt = term_match(a.target, b.target);
        if (!tgt) return std::nullopt;
        auto merged = merge_substs(acc, *tgt);
        if (!merged) return std::nullopt;
        acc = std::move(*merged);
    }
    auto pl = term_match(a.payload, b.payload);
    if (!pl) return std::nullopt;
    auto merged = merge_substs(acc, *pl);
    if (!merged) return std::nullopt;
    return merged;
}

std::optional<Ref> subject_of(const Pattern& p) {
    if (p.kind == PatternKind::Any) return std::nullopt;
    const Term& s = p.subject;
    if (s.kind == TermKind::Var) return Ref::variable(s.var);
    if (s.kind == TermKind::Lit && s.lit.is_pid()) return Ref::value(s.lit);
    return std::nullopt;
}

Value subject_pid(const Action& a) {
    auto r = subject_of(a);
    if (!r || r->is_var || !r->val.is_pid())
        throw EvalError("action subject is not a pid: " + to_string(a));
    return r->val;
}

namespace {
void collect_pids(const Value& v, std::vector<Value>& out) {
    if (v.is_pid()) {
        out.push_back(v);
        return;
    }
    for (const auto& it : v.items) collect_pids(it, out);
}
void collect_pids_term(const Term& t, std::vector<Value>& out) {
    if (t.kind == TermKind::Lit) collect_pids(t.lit, out);
    for (const auto& it : t.items) collect_pids_term(it, out);
}
}  // namespace

std::vector<Value> action_pids(const Action& a) {
    std::vector<Value> out;
    collect_pids_term(a.subject, out);
    if (a.kind == PatternKind::Send) collect_pids_term(a.target, out);
    collect_pids_term(a.payload, out);
    return out;
}

namespace {
void collect_typed(const Term& t, std::map<std::string, VType>& out) {
    if (t.kind == TermKind::Var && t.annot &&
        (*t.annot == VType::Upid || *t.annot == VType::Lpid)) {
        out[t.var] = *t.annot;
    }
    for (const auto& it : t.items) collect_typed(it, out);
}
}  // namespace

std::map<std::string, VType> typed_bindings(const Pattern& p) {
    std::map<std::string, VType> out;
    if (p.kind == PatternKind::Any) return out;
    collect_typed(p.subject, out);
    if (p.kind == PatternKind::Send) collect_typed(p.target, out);
    collect_typed(p.payload, out);
    return out;
}

// ---- evaluation -------------------------------------------------------------

Value eval_term(const Term& t) {
    switch (t.kind) {
        case TermKind::Lit: return t.lit;
        case TermKind::Tuple:
        case TermKind::List: {
            std::vector<Value> xs;
            for (const auto& it : t.items) xs.push_back(eval_term(it));
            return t.kind == TermKind::Tuple ? Value::tuple(std::move(xs))
                                             : Value::list(std::move(xs));
        }
        case TermKind::Arith: {
            Value l = eval_term(t.items[0]);
            Value r = eval_term(t.items[1]);
            if (l.kind != ValueKind::Int || r.kind != ValueKind::Int)
                throw EvalError("arithmetic on non-integer values: " + to_string(t));
            return Value::integer(t.op == ArithOp::Add ? l.num + r.num : l.num - r.num);
        }
        case TermKind::Var: throw EvalError("open term: unbound variable " + t.var);
        case TermKind::Wildcard: throw EvalError("cannot evaluate a wildcard");
    }
    throw EvalError("unreachable");
}

bool eval_bool(const BoolExpr& b, const PredicateTable& preds) {
    switch (b.kind) {
        case BoolKind::Lit: return b.lit;
        case BoolKind::Cmp: {
            Value l = eval_term(b.lhs);
            Value r = eval_term(b.rhs);
            switch (b.op) {
                case CmpOp::Eq: return l == r;
                case CmpOp::Ne: return l != r;
                case CmpOp::Lt:
                    return l.kind == ValueKind::Int && r.kind == ValueKind::Int && l.num < r.num;
                case CmpOp::Gt:
                    return l.kind == ValueKind::Int && r.kind == ValueKind::Int && l.num > r.num;
            }
            return false;
        }
        case BoolKind::And:
            return eval_bool(b.children[0], preds) && eval_bool(b.children[1], preds);
        case BoolKind::Or:
            return eval_bool(b.children[0], preds) || eval_bool(b.children[1], preds);
        case BoolKind::Not: return !eval_bool(b.children[0], preds);
        case BoolKind::Pred: {
            auto it = preds.find(b.pred);
            if (it == preds.end())
                throw EvalError("predicate '" + b.pred + "' is not in the predicate table");
            std::vector<Value> args;
            for (const auto& a : b.args) args.push_back(eval_term(a));
            return it->second(args);
        }
    }
    throw EvalError("unreachable");
}

// ---- substitution --------------------------------------------------------------

Term apply_subst(const Term& t, const Subst& s) {
    switch (t.kind) {
        case TermKind::Var: {
            if (t.binder) return t;  // binding occurrence shadows
            auto it = s.find(t.var);
            if (it == s.end()) return t;
            return value_to_term(it->second);  // annotation (if any) disappears with the binder
        }
        case TermKind::Tuple:
        case TermKind::List:
        case TermKind::Arith: {
            Term out = t;
            for (auto& it : out.items) it = apply_subst(it, s);
            return out;
        }
        default: return t;
    }
}

namespace {
void shadowed_by_term(const Term& t, std::set<std::string>& names) {
    if (t.kind == TermKind::Var && t.binder) names.insert(t.var);
    for (const auto& it : t.items) shadowed_by_term(it, names);
}

std::set<std::string> binders_of(const Pattern& p) {
    std::set<std::string> names;
    if (p.kind == PatternKind::Any) return names;
    shadowed_by_term(p.subject, names);
    if (p.kind == PatternKind::Send) shadowed_by_term(p.target, names);
    shadowed_by_term(p.payload, names);
    return names;
}
}  // namespace

Pattern apply_subst(const Pattern& p, const Subst& s) {
    Pattern out = p;
    if (p.kind == PatternKind::Any) return out;
    out.subject = apply_subst(p.subject, s);
    if (p.kind == PatternKind::Send) out.target = apply_subst(p.target, s);
    out.payload = apply_subst(p.payload, s);
    return out;
}

BoolExpr apply_subst(const BoolExpr& b, const Subst& s) {
    BoolExpr out = b;
    switch (b.kind) {
        case BoolKind::Cmp:
            out.lhs = apply_subst(b.lhs, s);
            out.rhs = apply_subst(b.rhs, s);
            break;
        case BoolKind::And:
        case BoolKind::Or:
        case BoolKind::Not:
            for (auto& c : out.children) c = apply_subst(c, s);
            break;
        case BoolKind::Pred:
            for (auto& a : out.args) a = apply_subst(a, s);
            break;
        default: break;
    }
    return out;
}

RefList apply_subst(const RefList& rl, const Subst& s) {
    RefList out = rl;
    for (auto& r : out) {
        if (r.is_var) {
            auto it = s.find(r.var);
            if (it != s.end()) r = Ref::value(it->second);
        }
    }
    return out;
}

FPtr apply_subst(const FPtr& f, const Subst& s) {
    if (s.empty()) return f;
    switch (f->kind) {
        case FormulaKind::Tru:
        case FormulaKind::Fls:
        case FormulaKind::SyncFls:
        case FormulaKind::FVar:
            return f;
        case FormulaKind::And:
            return f_and(apply_subst(f->left, s), apply_subst(f->right, s));
        case FormulaKind::Nec: {
            Pattern p = apply_subst(f->pat, s);
            RefList rl = apply_subst(f->releases, s);
            Subst inner = s;
            for (const auto& b : binders_of(f->pat)) inner.erase(b);
            return f_nec(f->mode, std::move(p), std::move(rl), apply_subst(f->left, inner));
        }
        case FormulaKind::Max:
            return f_max(f->var, apply_subst(f->left, s));
        case FormulaKind::If:
            return f_if(apply_subst(f->cond, s), apply_subst(f->left, s),
                        apply_subst(f->right, s));
        case FormulaKind::AdaptA:
            return f_adapt_async(apply_subst(f->adaptees, s), apply_subst(f->releases, s),
                                 apply_subst(f->left, s));
        case FormulaKind::AdaptS:
            return f_adapt_sync(f->akind, apply_subst(f->adaptees, s),
                                apply_subst(f->releases, s), apply_subst(f->left, s));
        case FormulaKind::Block:
            return f_block(apply_subst(f->adaptees, s), apply_subst(f->left, s));
        case FormulaKind::Release:
            return f_release(apply_subst(f->adaptees, s), apply_subst(f->left, s));
        case FormulaKind::Clear:
            return f_clear(f->var, apply_subst(f->left, s));
    }
    return f;
}

FPtr subst_formula_var(const FPtr& f, const std::string& x, const FPtr& g) {
    switch (f->kind) {
        case FormulaKind::Tru:
        case FormulaKind::Fls:
        case FormulaKind::SyncFls:
            return f;
        case FormulaKind::FVar:
            return f->var == x ? g : f;
        case FormulaKind::And:
            return f_and(subst_formula_var(f->left, x, g), subst_formula_var(f->right, x, g));
        case FormulaKind::Nec:
            return f_nec(f->mode, f->pat, f->releases, subst_formula_var(f->left, x, g));
        case FormulaKind::Max:
            if (f->var == x) return f;  // rebinding shadows
            return f_max(f->var, subst_formula_var(f->left, x, g));
        case FormulaKind::If:
            return f_if(f->cond, subst_formula_var(f->left, x, g),
                        subst_formula_var(f->right, x, g));
        case FormulaKind::AdaptA:
            return f_adapt_async(f->adaptees, f->releases, subst_formula_var(f->left, x, g));
        case FormulaKind::AdaptS:
            return f_adapt_sync(f->akind, f->adaptees, f->releases,
                                subst_formula_var(f->left, x, g));
        case FormulaKind::Block:
            return f_block(f->adaptees, subst_formula_var(f->left, x, g));
        case FormulaKind::Release:
            return f_release(f->adaptees, subst_formula_var(f->left, x, g));
        case FormulaKind::Clear:
            return f_clear(f->var, subst_formula_var(f->left, x, g));
    }
    return f;
}

}  // namespace adaptrace
