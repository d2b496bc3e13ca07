#include "adaptrace/ast.hpp"

#include <cctype>
#include <sstream>

namespace adaptrace {

// ---- Value ----------------------------------------------------------------

Value Value::pid(std::string n) {
    Value v;
    v.kind = ValueKind::Pid;
    v.name = std::move(n);
    return v;
}
Value Value::atom(std::string n) {
    Value v;
    v.kind = ValueKind::Atom;
    v.name = std::move(n);
    return v;
}
Value Value::integer(long long n) {
    Value v;
    v.kind = ValueKind::Int;
    v.num = n;
    return v;
}
Value Value::tuple(std::vector<Value> xs) {
    Value v;
    v.kind = ValueKind::Tuple;
    v.items = std::move(xs);
    return v;
}
Value Value::list(std::vector<Value> xs) {
    Value v;
    v.kind = ValueKind::List;
    v.items = std::move(xs);
    return v;
}

int compare(const Value& a, const Value& b) {
    if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
    switch (a.kind) {
        case ValueKind::Pid:
        case ValueKind::Atom:
            return a.name.compare(b.name);
        case ValueKind::Int:
            return a.num < b.num ? -1 : (a.num > b.num ? 1 : 0);
        case ValueKind::Tuple:
        case ValueKind::List: {
            if (a.items.size() != b.items.size())
                return a.items.size() < b.items.size() ? -1 : 1;
            for (size_t i = 0; i < a.items.size(); ++i)
                if (int c = compare(a.items[i], b.items[i])) return c;
            return 0;
        }
    }
    return 0;
}
bool operator==(const Value& a, const Value& b) { return compare(a, b) == 0; }
bool operator!=(const Value& a, const Value& b) { return compare(a, b) != 0; }
bool operator<(const Value& a, const Value& b) { return compare(a, b) < 0; }

const char* to_string(VType t) {
    switch (t) {
        case VType::Dat: return "dat";
        case VType::Upid: return "upid";
        case VType::Lpid: return "lpid";
        case VType::LpidB: return "lpidb";
    }
    return "?";
}

// ---- Term -------------------------------------------------------------------

Term Term::wildcard() { return Term{}; }
Term Term::variable(std::string name, std::optional<VType> annot, bool binder) {
    Term t;
    t.kind = TermKind::Var;
    t.var = std::move(name);
    t.annot = annot;
    t.binder = binder;
    return t;
}
Term Term::value(Value v) {
    Term t;
    t.kind = TermKind::Lit;
    t.lit = std::move(v);
    return t;
}
Term Term::tuple(std::vector<Term> xs) {
    Term t;
    t.kind = TermKind::Tuple;
    t.items = std::move(xs);
    return t;
}
Term Term::list(std::vector<Term> xs) {
    Term t;
    t.kind = TermKind::List;
    t.items = std::move(xs);
    return t;
}
Term Term::arith(ArithOp op, Term lhs, Term rhs) {
    Term t;
    t.kind = TermKind::Arith;
    t.op = op;
    t.items.push_back(std::move(lhs));
    t.items.push_back(std::move(rhs));
    return t;
}

bool Term::is_closed() const {
    switch (kind) {
        case TermKind::Wildcard: return false;
        case TermKind::Var: return false;
        case TermKind::Lit: return true;
        case TermKind::Tuple:
        case TermKind::List:
        case TermKind::Arith: {
            for (const auto& it : items)
                if (!it.is_closed()) return false;
            return true;
        }
    }
    return false;
}

int compare(const Term& a, const Term& b) {
    if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
    switch (a.kind) {
        case TermKind::Wildcard: return 0;
        case TermKind::Var: {
            if (int c = a.var.compare(b.var)) return c;
            if (a.annot != b.annot) {
                if (!a.annot) return -1;
                if (!b.annot) return 1;
                return *a.annot < *b.annot ? -1 : 1;
            }
            return 0;
        }
        case TermKind::Lit: return compare(a.lit, b.lit);
        case TermKind::Arith:
            if (a.op != b.op) return a.op < b.op ? -1 : 1;
            [[fallthrough]];
        case TermKind::Tuple:
        case TermKind::List: {
            if (a.items.size() != b.items.size())
                return a.items.size() < b.items.size() ? -1 : 1;
            for (size_t i = 0; i < a.items.size(); ++i)
                if (int c = compare(a.items[i], b.items[i])) return c;
            return 0;
        }
    }
    return 0;
}
bool operator==(const Term& a, const Term& b) { return compare(a, b) == 0; }
bool operator!=(const Term& a, const Term& b) { return compare(a, b) != 0; }

std::optional<Value> term_to_value(const Term& t) {
    switch (t.kind) {
        case TermKind::Lit: return t.lit;
        case TermKind::Tuple:
        case TermKind::List: {
            std::vector<Value> xs;
            xs.reserve(t.items.size());
            for (const auto& it : t.items) {
                auto v = term_to_value(it);
                if (!v) return std::nullopt;
                xs.push_back(std::move(*v));
            }
            return t.kind == TermKind::Tuple ? Value::tuple(std::move(xs))
                                             : Value::list(std::move(xs));
        }
        default: return std::nullopt;
    }
}

Term value_to_term(const Value& v) {
    switch (v.kind) {
        case ValueKind::Tuple:
        case ValueKind::List: {
            std::vector<Term> xs;
            xs.reserve(v.items.size());
            for (const auto& it : v.items) xs.push_back(value_to_term(it));
            return v.kind == ValueKind::Tuple ? Term::tuple(std::move(xs))
                                              : Term::list(std::move(xs));
        }
        default: return Term::value(v);
    }
}

// ---- Pattern ----------------------------------------------------------------

Pattern Pattern::send(Term subject, Term target, Term payload) {
    Pattern p;
    p.kind = PatternKind::Send;
    p.subject = std::move(subject);
    p.target = std::move(target);
    p.payload = std::move(payload);
    return p;
}
Pattern Pattern::recv(Term subject, Term payload) {
    Pattern p;
    p.kind = PatternKind::Recv;
    p.subject = std::move(subject);
    p.payload = std::move(payload);
    return p;
}
Pattern Pattern::call(Term subject, Term payload) {
    Pattern p;
    p.kind = PatternKind::Call;
    p.subject = std::move(subject);
    p.payload = std::move(payload);
    return p;
}
Pattern Pattern::ret(Term subject, Term payload) {
    Pattern p;
    p.kind = PatternKind::Ret;
    p.subject = std::move(subject);
    p.payload = std::move(payload);
    return p;
}
Pattern Pattern::any() { return Pattern{}; }

bool Pattern::is_closed() const {
    if (kind == PatternKind::Any) return false;
    if (!subject.is_closed() || !payload.is_closed()) return false;
    if (kind == PatternKind::Send && !target.is_closed()) return false;
    return true;
}

int compare(const Pattern& a, const Pattern& b) {
    if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
    if (a.kind == PatternKind::Any) return 0;
    if (int c = compare(a.subject, b.subject)) return c;
    if (a.kind == PatternKind::Send)
        if (int c = compare(a.target, b.target)) return c;
    return compare(a.payload, b.payload);
}
bool operator==(const Pattern& a, const Pattern& b) { return compare(a, b) == 0; }
bool operator!=(const Pattern& a, const Pattern& b) { return compare(a, b) != 0; }

// ---- Ref ---------------------------------------------------------------------

Ref Ref::variable(std::string name) {
    Ref r;
    r.is_var = true;
    r.var = std::move(name);
    return r;
}
Ref Ref::value(Value v) {
    Ref r;
    r.val = std::move(v);
    return r;
}

int compare(const Ref& a, const Ref& b) {
    if (a.is_var != b.is_var) return a.is_var ? 1 : -1;
    return a.is_var ? a.var.compare(b.var) : compare(a.val, b.val);
}
bool operator==(const Ref& a, const Ref& b) { return compare(a, b) == 0; }
bool operator<(const Ref& a, const Ref& b) { return compare(a, b) < 0; }

// ---- BoolExpr ------------------------------------------------------------------

BoolExpr BoolExpr::literal(bool b) {
    BoolExpr e;
    e.kind = BoolKind::Lit;
    e.lit = b;
    return e;
}
BoolExpr BoolExpr::cmp(CmpOp op, Term lhs, Term rhs) {
    BoolExpr e;
    e.kind = BoolKind::Cmp;
    e.op = op;
    e.lhs = std::move(lhs);
    e.rhs = std::move(rhs);
    return e;
}
BoolExpr BoolExpr::conj(BoolExpr l, BoolExpr r) {
    BoolExpr e;
    e.kind = BoolKind::And;
    e.children.push_back(std::move(l));
    e.children.push_back(std::move(r));
    return e;
}
BoolExpr BoolExpr::disj(BoolExpr l, BoolExpr r) {
    BoolExpr e;
    e.kind = BoolKind::Or;
    e.children.push_back(std::move(l));
    e.children.push_back(std::move(r));
    return e;
}
BoolExpr BoolExpr::negate(BoolExpr c) {
    BoolExpr e;
    e.kind = BoolKind::Not;
    e.children.push_back(std::move(c));
    return e;
}
BoolExpr BoolExpr::predicate(std::string name, std::vector<Term> args) {
    BoolExpr e;
    e.kind = BoolKind::Pred;
    e.pred = std::move(name);
    e.args = std::move(args);
    return e;
}

int compare(const BoolExpr& a, const BoolExpr& b) {
    if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
    switch (a.kind) {
        case BoolKind::Lit: return a.lit == b.lit ? 0 : (a.lit ? 1 : -1);
        case BoolKind::Cmp: {
            if (a.op != b.op) return a.op < b.op ? -1 : 1;
            if (int c = compare(a.lhs, b.lhs)) return c;
            return compare(a.rhs, b.rhs);
        }
        case BoolKind::And:
        case BoolKind::Or:
        case BoolKind::Not: {
            if (a.children.size() != b.children.size())
                return a.children.size() < b.children.size() ? -1 : 1;
            for (size_t i = 0; i < a.children.size(); ++i)
                if (int c = compare(a.children[i], b.children[i])) return c;
            return 0;
        }
        case BoolKind::Pred: {
            if (int c = a.pred.compare(b.pred)) return c;
            if (a.args.size() != b.args.size())
                return a.args.size() < b.args.size() ? -1 : 1;
            for (size_t i = 0; i < a.args.size(); ++i)
                if (int c = compare(a.args[i], b.args[i])) return c;
            return 0;
        }
    }
    return 0;
}
bool operator==(const BoolExpr& a, const BoolExpr& b) { return compare(a, b) == 0; }
bool operator!=(const BoolExpr& a, const BoolExpr& b) { return compare(a, b) != 0; }

// ---- Formula ---------------------------------------------------------------------

const char* to_string(AdaptKind k) {
    switch (k) {
        case AdaptKind::Generic: return "adaptA";
        case AdaptKind::Kill: return "kill";
        case AdaptKind::Restart: return "restart";
        case AdaptKind::Purge: return "purge";
        case AdaptKind::SLink: return "slink";
        case AdaptKind::SUnlink: return "sunlink";
    }
    return "?";
}

const char* to_string(NecMode m) {
    switch (m) {
        case NecMode::Core: return "core";
        case NecMode::Async: return "async";
        case NecMode::Blocking: return "blocking";
    }
    return "?";
}

static FPtr make(Formula f) { return std::make_shared<const Formula>(std::move(f)); }

FPtr f_tru() {
    static FPtr t = make(Formula{});
    return t;
}
FPtr f_fls() {
    Formula f;
    f.kind = FormulaKind::Fls;
    static FPtr p = make(std::move(f));
    return p;
}
FPtr f_sync_fls() {
    Formula f;
    f.kind = FormulaKind::SyncFls;
    static FPtr p = make(std::move(f));
    return p;
}
FPtr f_and(FPtr l, FPtr r) {
    Formula f;
    f.kind = FormulaKind::And;
    f.left = std::move(l);
    f.right = std::move(r);
    return make(std::move(f));
}
FPtr f_nec(NecMode mode, Pattern pat, RefList releases, FPtr body) {
    Formula f;
    f.kind = FormulaKind::Nec;
    f.mode = mode;
    f.pat = std::move(pat);
    f.releases = std::move(releases);
    f.left = std::move(body);
    return make(std::move(f));
}
FPtr f_max(std::string var, FPtr body) {
    Formula f;
    f.kind = FormulaKind::Max;
    f.var = std::move(var);
    f.left = std::move(body);
    return make(std::move(f));
}
FPtr f_fvar(std::string name) {
    Formula f;
    f.kind = FormulaKind::FVar;
    f.var = std::move(name);
    return make(std::move(f));
}
FPtr f_if(BoolExpr cond, FPtr then_f, FPtr else_f) {
    Formula f;
    f.kind = FormulaKind::If;
    f.cond = std::move(cond);
    f.left = std::move(then_f);
    f.right = std::move(else_f);
    return make(std::move(f));
}
FPtr f_adapt_async(RefList adaptees, RefList releases, FPtr body) {
    Formula f;
    f.kind = FormulaKind::AdaptA;
    f.akind = AdaptKind::Generic;
    f.adaptees = std::move(adaptees);
    f.releases = std::move(releases);
    f.left = std::move(body);
    return make(std::move(f));
}
FPtr f_adapt_sync(AdaptKind kind, RefList adaptees, RefList releases, FPtr body) {
    Formula f;
    f.kind = FormulaKind::AdaptS;
    f.akind = kind;
    f.adaptees = std::move(adaptees);
    f.releases = std::move(releases);
    f.left = std::move(body);
    return make(std::move(f));
}
FPtr f_block(RefList refs, FPtr body) {
    Formula f;
    f.kind = FormulaKind::Block;
    f.adaptees = std::move(refs);
    f.left = std::move(body);
    return make(std::move(f));
}
FPtr f_release(RefList refs, FPtr body) {
    Formula f;
    f.kind = FormulaKind::Release;
    f.adaptees = std::move(refs);
    f.left = std::move(body);
    return make(std::move(f));
}
FPtr f_clear(std::string var, FPtr body) {
    Formula f;
    f.kind = FormulaKind::Clear;
    f.var = std::move(var);
    f.left = std::move(body);
    return make(std::move(f));
}

static int compare_reflist(const RefList& a, const RefList& b) {
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    for (size_t i = 0; i < a.size(); ++i)
        if (int c = compare(a[i], b[i])) return c;
    return 0;
}

int compare(const FPtr& a, const FPtr& b) {
    if (a == b) return 0;
    if (!a || !b) return a ? 1 : -1;
    if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
    switch (a->kind) {
        case FormulaKind::Tru:
        case FormulaKind::Fls:
        case FormulaKind::SyncFls:
            return 0;
        case FormulaKind::And: {
            if (int c = compare(a->left, b->left)) return c;
            return compare(a->right, b->right);
        }
        case FormulaKind::Nec: {
            if (a->mode != b->mode) return a->mode < b->mode ? -1 : 1;
            if (int c = compare(a->pat, b->pat)) return c;
            if (int c = compare_reflist(a->releases, b->releases)) return c;
            return compare(a->left, b->left);
        }
        case FormulaKind::Max:
        case FormulaKind::Clear: {
            if (int c = a->var.compare(b->var)) return c;
            return compare(a->left, b->left);
        }
        case FormulaKind::FVar:
            return a->var.compare(b->var);
        case FormulaKind::If: {
            if (int c = compare(a->cond, b->cond)) return c;
            if (int c = compare(a->left, b->left)) return c;
            return compare(a->right, b->right);
        }
        case FormulaKind::AdaptA:
        case FormulaKind::AdaptS: {
            if (a->akind != b->akind) return a->akind < b->akind ? -1 : 1;
            if (int c = compare_reflist(a->adaptees, b->adaptees)) return c;
            if (int c = compare_reflist(a->releases, b->releases)) return c;
            return compare(a->left, b->left);
        }
        case FormulaKind::Block:
        case FormulaKind::Release: {
            if (int c = compare_reflist(a->adaptees, b->adaptees)) return c;
            return compare(a->left, b->left);
        }
    }
    return 0;
}

bool equal(const FPtr& a, const FPtr& b) { return compare(a, b) == 0; }

// ---- Substitutions -----------------------------------------------------------------

std::optional<Subst> merge_substs(const Subst& a, const Subst& b) {
    Subst out = a;
    for (const auto& [k, v] : b) {
        auto it = out.find(k);
        if (it != out.end()) {
            if (it->second != v) return std::nullopt;
        } else {
            out.emplace(k, v);
        }
    }
    return out;
}

// ---- Printing ------------------------------------------------------------------------

namespace {

bool plain_atom_name(const std::string& s) {
    if (s.empty() || !(std::islower(static_cast<unsigned char>(s[0])))) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

void print_value(std::ostringstream& os, const Value& v) {
    switch (v.kind) {
        case ValueKind::Pid: os << v.name; break;
        case ValueKind::Atom:
            if (plain_atom_name(v.name))
                os << v.name;
            else
                os << '\'' << v.name << '\'';
            break;
        case ValueKind::Int: os << v.num; break;
        case ValueKind::Tuple: {
            os << '{';
            for (size_t i = 0; i < v.items.size(); ++i) {
                if (i) os << ", ";
                print_value(os, v.items[i]);
            }
            os << '}';
            break;
        }
        case ValueKind::List: {
            os << '[';
            for (size_t i = 0; i < v.items.size(); ++i) {
                if (i) os << ", ";
                print_value(os, v.items[i]);
            }
            os << ']';
            break;
        }
    }
}

void print_term(std::ostringstream& os, const Term& t) {
    switch (t.kind) {
        case TermKind::Wildcard: os << '_'; break;
        case TermKind::Var:
            os << t.var;
            if (t.annot) os << ':' << to_string(*t.annot);
            break;
        case TermKind::Lit: print_value(os, t.lit); break;
        case TermKind::Tuple: {
            os << '{';
            for (size_t i = 0; i < t.items.size(); ++i) {
                if (i) os << ", ";
                print_term(os, t.items[i]);
            }
            os << '}';
            break;
        }
        case TermKind::List: {
            os << '[';
            for (size_t i = 0; i < t.items.size(); ++i) {
                if (i) os << ", ";
                print_term(os, t.items[i]);
            }
            os << ']';
            break;
        }
        case TermKind::Arith: {
            print_term(os, t.items[0]);
            os << (t.op == ArithOp::Add ? " + " : " - ");
            print_term(os, t.items[1]);
            break;
        }
    }
}

void print_pattern(std::ostringstream& os, const Pattern& p) {
    switch (p.kind) {
        case PatternKind::Any: os << '_'; return;
        case PatternKind::Send:
            print_term(os, p.subject);
            os << " ! ";
            print_term(os, p.target);
            os << " . ";
            print_term(os, p.payload);
            return;
        case PatternKind::Recv:
            print_term(os, p.subject);
            os << " ? ";
            print_term(os, p.payload);
            return;
        case PatternKind::Call:
            print_term(os, p.subject);
            os << " call ";
            print_term(os, p.payload);
            return;
        case PatternKind::Ret:
            print_term(os, p.subject);
            os << " ret ";
            print_term(os, p.payload);
            return;
    }
}

void print_reflist(std::ostringstream& os, const RefList& rl) {
    os << '{';
    for (size_t i = 0; i < rl.size(); ++i) {
        if (i) os << ", ";
        if (rl[i].is_var)
            os << rl[i].var;
        else
            print_value(os, rl[i].val);
    }
    os << '}';
}

void print_bool(std::ostringstream& os, const BoolExpr& b) {
    switch (b.kind) {
        case BoolKind::Lit: os << (b.lit ? "true" : "false"); return;
        case BoolKind::Cmp: {
            print_term(os, b.lhs);
            switch (b.op) {
                case CmpOp::Eq: os << " = "; break;
                case CmpOp::Ne: os << " != "; break;
                case CmpOp::Lt: os << " < "; break;
                case CmpOp::Gt: os << " > "; break;
            }
            print_term(os, b.rhs);
            return;
        }
        case BoolKind::And:
            os << '(';
            print_bool(os, b.children[0]);
            os << " and ";
            print_bool(os, b.children[1]);
            os << ')';
            return;
        case BoolKind::Or:
            os << '(';
            print_bool(os, b.children[0]);
            os << " or ";
            print_bool(os, b.children[1]);
            os << ')';
            return;
        case BoolKind::Not:
            os << "not (";
            print_bool(os, b.children[0]);
            os << ')';
            return;
        case BoolKind::Pred: {
            os << b.pred << '(';
            for (size_t i = 0; i < b.args.size(); ++i) {
                if (i) os << ", ";
                print_term(os, b.args[i]);
            }
            os << ')';
            return;
        }
    }
}

void print_formula(std::ostringstream& os, const FPtr& f) {
    switch (f->kind) {
        case FormulaKind::Tru: os << "tt"; return;
        case FormulaKind::Fls: os << "ff"; return;
        case FormulaKind::SyncFls: os << "sff"; return;
        case FormulaKind::And:
            os << '(';
            print_formula(os, f->left);
            os << " & ";
            print_formula(os, f->right);
            os << ')';
            return;
        case FormulaKind::Nec: {
            switch (f->mode) {
                case NecMode::Core:
                    os << '[';
                    print_pattern(os, f->pat);
                    os << "] ";
                    break;
                case NecMode::Async:
                    os << '[';
                    print_pattern(os, f->pat);
                    os << "]a,";
                    print_reflist(os, f->releases);
                    os << ' ';
                    break;
                case NecMode::Blocking:
                    os << "[|";
                    print_pattern(os, f->pat);
                    os << "|]";
                    print_reflist(os, f->releases);
                    os << ' ';
                    break;
            }
            print_formula(os, f->left);
            return;
        }
        case FormulaKind::Max:
            os << "max " << f->var << ". ";
            print_formula(os, f->left);
            return;
        case FormulaKind::FVar: os << f->var; return;
        case FormulaKind::If:
            os << "if ";
            print_bool(os, f->cond);
            os << " then (";
            print_formula(os, f->left);
            os << ") else (";
            print_formula(os, f->right);
            os << ')';
            return;
        case FormulaKind::AdaptA:
        case FormulaKind::AdaptS: {
            os << to_string(f->akind) << '(';
            for (size_t i = 0; i < f->adaptees.size(); ++i) {
                if (i) os << ", ";
                if (f->adaptees[i].is_var)
                    os << f->adaptees[i].var;
                else
                    print_value(os, f->adaptees[i].val);
            }
            os << ")_";
            print_reflist(os, f->releases);
            os << ' ';
            print_formula(os, f->left);
            return;
        }
        case FormulaKind::Block:
            os << "block";
            print_reflist(os, f->adaptees);
            os << ' ';
            print_formula(os, f->left);
            return;
        case FormulaKind::Release:
            os << "release";
            print_reflist(os, f->adaptees);
            os << ' ';
            print_formula(os, f->left);
            return;
        case FormulaKind::Clear:
            os << "clr " << f->var << ". ";
            print_formula(os, f->left);
            return;
    }
}

}  // namespace

std::string to_string(const Value& v) {
    std::ostringstream os;
    print_value(os, v);
    return os.str();
}
std::string to_string(const Term& t) {
    std::ostringstream os;
    print_term(os, t);
    return os.str();
}
std::string to_string(const Pattern& p) {
    std::ostringstream os;
    print_pattern(os, p);
    return os.str();
}
std::string to_string(const Ref& r) {
    std::ostringstream os;
    if (r.is_var)
        os << r.var;
    else
        print_value(os, r.val);
    return os.str();
}
std::string to_string(const RefList& rl) {
    std::ostringstream os;
    print_reflist(os, rl);
    return os.str();
}
std::string to_string(const BoolExpr& b) {
    std::ostringstream os;
    print_bool(os, b);
    return os.str();
}
std::string to_string(const FPtr& f) {
    std::ostringstream os;
    print_formula(os, f);
    return os.str();
}
std::string to_string(const Subst& s) {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (const auto& [k, v] : s) {
        if (!first) os << ", ";
        first = false;
        os << k << " -> ";
        print_value(os, v);
    }
    os << '}';
    return os.str();
}

}  // namespace adaptrace
