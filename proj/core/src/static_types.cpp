#include "adaptrace/static_types.hpp"

#include <algorithm>
#include <sstream>

#include "adaptrace/match.hpp"

namespace adaptrace {

std::optional<EnvKey> EnvKey::from_ref(const Ref& r) {
    if (r.is_var) return EnvKey::var(r.var);
    if (r.val.is_pid()) return EnvKey::pid(r.val.name);
    return std::nullopt;  // generic data can never inhabit an environment
}

std::string to_string(const ValueEnv& g) {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (const auto& [k, t] : g) {
        if (!first) os << ", ";
        first = false;
        os << k.str() << ':' << to_string(t);
    }
    os << '}';
    return os.str();
}

std::variant<ValueEnv, EnvKey> env_extend(const ValueEnv& g, const ValueEnv& g2) {
    ValueEnv out = g;
    for (const auto& [k, t] : g2) {
        auto it = out.find(k);
        if (it != out.end()) {
            if (it->second != t) return k;
        } else {
            out.emplace(k, t);
        }
    }
    return out;
}

SplitEnumerator::SplitEnumerator(const ValueEnv& g) {
    for (const auto& [k, t] : g) {
        if (t == VType::Lpid || t == VType::LpidB)
            linear_.emplace_back(k, t);
        else
            shared_.emplace(k, t);
    }
}

std::pair<ValueEnv, ValueEnv> SplitEnumerator::at(unsigned long long mask) const {
    ValueEnv l = shared_, r = shared_;
    for (size_t i = 0; i < linear_.size(); ++i) {
        if (mask & (1ull << i))
            r.insert(linear_[i]);
        else
            l.insert(linear_[i]);
    }
    return {std::move(l), std::move(r)};
}

ValueEnv apply_release_effects(const ValueEnv& g, const ReleaseSet& q) {
    ValueEnv out = g;
    for (const auto& k : q) {
        auto it = out.find(k);
        if (it != out.end() && it->second == VType::LpidB) it->second = VType::Lpid;
    }
    return out;
}

// ---- mutual exclusion ------------------------------------------------------------

namespace {

bool is_triv_sat(const FPtr& f) {
    if (f->kind == FormulaKind::Release && f->left->kind == FormulaKind::Tru) return true;
    if (f->kind == FormulaKind::And) return is_triv_sat(f->left) && is_triv_sat(f->right);
    return false;
}

std::optional<ReleaseSet> refs_to_set(const RefList& rl) {
    ReleaseSet out;
    for (const auto& r : rl) {
        auto k = EnvKey::from_ref(r);
        if (!k) return std::nullopt;
        out.insert(*k);
    }
    return out;
}

}  // namespace

std::vector<Pattern> top_patterns(const FPtr& f) {
    switch (f->kind) {
        case FormulaKind::Nec: return {f->pat};
        case FormulaKind::And:
        case FormulaKind::If: {
            auto l = top_patterns(f->left);
            auto r = top_patterns(f->right);
            l.insert(l.end(), r.begin(), r.end());
            return l;
        }
        case FormulaKind::Max:
        case FormulaKind::Clear:
            return top_patterns(f->left);
        default: return {Pattern::any()};
    }
}

std::optional<ReleaseSet> vexcl(const FPtr& f, const FPtr& g) {
    if (f->kind == FormulaKind::And) {
        auto a = vexcl(f->left, g);
        if (!a) return std::nullopt;
        auto b = vexcl(f->right, g);
        if (!b) return std::nullopt;
        a->insert(b->begin(), b->end());
        return a;
    }
    bool g_triv = is_triv_sat(g);
    if (f->kind == FormulaKind::Nec && !g_triv) {
        for (const auto& p : top_patterns(g))
            if (match_patterns(f->pat, p)) return std::nullopt;
        return refs_to_set(f->releases);
    }
    if (f->kind == FormulaKind::If && !g_triv) {
        auto a = vexcl(f->left, g);
        auto b = vexcl(f->right, g);
        if (a && b && *a == *b) return a;
        return std::nullopt;
    }
    if ((f->kind == FormulaKind::Max || f->kind == FormulaKind::Clear) && !g_triv)
        return vexcl(f->left, g);
    if (f->kind == FormulaKind::Release && f->left->kind == FormulaKind::Tru)
        return refs_to_set(f->adaptees);
    if (g_triv) return ReleaseSet{};
    return std::nullopt;
}

std::optional<std::pair<ReleaseSet, ReleaseSet>> excl(const FPtr& f, const FPtr& g) {
    auto a = vexcl(f, g);
    if (!a) return std::nullopt;
    auto b = vexcl(g, f);
    if (!b) return std::nullopt;
    return std::make_pair(std::move(*a), std::move(*b));
}

// ---- type checking -----------------------------------------------------------------

namespace {

struct Failure {
    Rejection rejection;
    long progress = 0;
};

class Checker {
  public:
    explicit Checker(bool record) : record_(record) {}

    // The mismatch-path premises of necessities (release(RL) tt) are queued
    // and discharged after the structural pass: every premise is still
    // required, but continuation failures surface first, matching the order
    // the worked derivations report.
    using Deferred = std::vector<std::pair<ValueEnv, FPtr>>;

    std::optional<Failure> check_all(const FormulaEnv& sigma, const ValueEnv& g,
                                     const FPtr& f) {
        Deferred defer;
        if (auto e = check(sigma, g, f, 0, defer)) return e;
        return flush(sigma, defer);
    }

    std::optional<Failure> flush(const FormulaEnv& sigma, Deferred& defer) {
        Deferred none;
        for (const auto& [env, rel] : defer)
            if (auto e = check(sigma, env, rel, 0, none)) return e;
        defer.clear();
        return std::nullopt;
    }

    std::optional<Failure> check(const FormulaEnv& sigma, const ValueEnv& g, const FPtr& f,
                                 int depth, Deferred& defer) {
        switch (f->kind) {
            case FormulaKind::Tru: return done(sigma, g, f, "tTru", depth);
            case FormulaKind::Fls:
            case FormulaKind::SyncFls: return done(sigma, g, f, "tFls", depth);
            case FormulaKind::FVar: {
                auto it = sigma.find(f->var);
                if (it == sigma.end())
                    return fail("tVar", "unbound fixpoint variable " + f->var);
                for (const auto& [k, t] : it->second) {
                    auto jt = g.find(k);
                    if (jt == g.end() || jt->second != t)
                        return fail("tVar", "Sigma(" + f->var + ") = " + to_string(it->second) +
                                                " is not contained in " + to_string(g) +
                                                " (entry " + k.str() + ":" + to_string(t) + ")");
                }
                return done(sigma, g, f, "tVar", depth);
            }
            case FormulaKind::If: {
                if (auto e = check(sigma, g, f->left, depth + 1, defer)) return e;
                if (auto e = check(sigma, g, f->right, depth + 1, defer)) return e;
                return done(sigma, g, f, "tIf", depth);
            }
            case FormulaKind::Nec: {
                const char* rule = f->mode == NecMode::Blocking ? "tNcB" : "tNcA";
                ValueEnv bind;
                for (const auto& [x, t] : typed_bindings(f->pat)) bind[EnvKey::var(x)] = t;
                auto ext = env_extend(g, bind);
                if (auto* k = std::get_if<EnvKey>(&ext))
                    return fail(rule, "rebinding " + k->str() +
                                          " at a different type in pattern " + to_string(f->pat));
                const ValueEnv& gb = std::get<ValueEnv>(ext);
                if (f->mode == NecMode::Blocking) {
                    auto subj = subject_of(f->pat);
                    if (!subj)
                        return fail("tNcB",
                                    "blocking necessity [" + to_string(f->pat) +
                                        "] has no identifier subject to suspend");
                    if (auto e = check(sigma, gb,
                                       f_block({*subj}, f->left), depth + 1, defer))
                        return e;
                } else {
                    if (auto e = check(sigma, gb, f->left, depth + 1, defer)) return e;
                }
                defer.push_back({g, f_release(f->releases, f_tru())});
                return done(sigma, g, f, rule, depth);
            }
            case FormulaKind::Block: {
                ValueEnv g2 = g;
                for (const auto& r : f->adaptees) {
                    auto k = EnvKey::from_ref(r);
                    if (!k)
                        return fail("tBlk", to_string(r) + " is not an actor reference");
                    auto it = g2.find(*k);
                    if (it == g2.end() || it->second != VType::Lpid)
                        return fail("tBlk",
                                    k->str() + ":lpid not in " + to_string(g) + describe(g, *k),
                                    f);
                    it->second = VType::LpidB;
                }
                if (auto e = check(sigma, g2, f->left, depth + 1, defer)) return e;
                return done(sigma, g, f, "tBlk", depth);
            }
            case FormulaKind::Release: {
                ValueEnv g2 = g;
                for (const auto& r : f->adaptees) {
                    auto k = EnvKey::from_ref(r);
                    if (!k)
                        return fail("tRel", to_string(r) + " is not an actor reference");
                    auto it = g2.find(*k);
                    if (it == g2.end() || it->second != VType::LpidB)
                        return fail("tRel",
                                    k->str() + ":lpidb not in " + to_string(g) + describe(g, *k),
                                    f);
                    it->second = VType::Lpid;
                }
                if (auto e = check(sigma, g2, f->left, depth + 1, defer)) return e;
                return done(sigma, g, f, "tRel", depth);
            }
            case FormulaKind::AdaptA: {
                for (const auto& r : f->adaptees) {
                    auto k = EnvKey::from_ref(r);
                    if (!k) return fail("tAdA", to_string(r) + " is not an actor reference");
                    auto it = g.find(*k);
                    if (it == g.end() || it->second != VType::Lpid)
                        return fail("tAdA",
                                    k->str() + ":lpid not in " + to_string(g) + describe(g, *k),
                                    f);
                }
                if (auto e = check(sigma, g, f_release(f->releases, f->left), depth + 1,
                                   defer))
                    return e;
                return done(sigma, g, f, "tAdA", depth);
            }
            case FormulaKind::AdaptS: {
                for (const auto& r : f->adaptees) {
                    auto k = EnvKey::from_ref(r);
                    if (!k) return fail("tAdS", to_string(r) + " is not an actor reference");
                    auto it = g.find(*k);
                    if (it == g.end() || it->second != VType::LpidB)
                        return fail("tAdS",
                                    k->str() + ":lpidb not in " + to_string(g) + describe(g, *k),
                                    f);
                }
                if (auto e = check(sigma, g, f_release(f->releases, f->left), depth + 1,
                                   defer))
                    return e;
                return done(sigma, g, f, "tAdS", depth);
            }
            case FormulaKind::Clear: {
                if (auto e = check(sigma, g, f->left, depth + 1, defer)) return e;
                return done(sigma, g, f, "tClr", depth);
            }
            case FormulaKind::Max: {
                FormulaEnv s2 = sigma;
                s2[f->var] = g;
                if (auto e = check(s2, g, f->left, depth + 1, defer)) return e;
                return done(sigma, g, f, "tMax", depth);
            }
            case FormulaKind::And: {
                if (auto ex = excl(f->left, f->right)) {
                    auto gl = apply_release_effects(g, ex->second);
                    auto gr = apply_release_effects(g, ex->first);
                    if (auto e = check(sigma, gl, f->left, depth + 1, defer)) return e;
                    if (auto e = check(sigma, gr, f->right, depth + 1, defer)) return e;
                    return done(sigma, g, f, "tCn2", depth);
                }
                SplitEnumerator splits(g);
                std::optional<Failure> best;
                long base = progress_;
                size_t dbase = derivation.size();
                for (unsigned long long m = 0; m < splits.count(); ++m) {
                    progress_ = base;
                    derivation.resize(dbase);
                    auto [gl, gr] = splits.at(m);
                    Deferred local;  // each split discharges its own premises
                    auto e = check(sigma, gl, f->left, depth + 1, local);
                    if (!e) e = check(sigma, gr, f->right, depth + 1, local);
                    if (!e) e = flush(sigma, local);
                    if (!e) return done(sigma, g, f, "tCn1", depth);
                    e->progress = progress_ - base;
                    if (!best || e->progress > best->progress) best = std::move(e);
                }
                if (!best)
                    return fail("tCn1", "no split types both conjuncts");
                return best;
            }
        }
        return fail("internal", "unhandled formula kind");
    }

    std::vector<std::string> derivation;

  private:
    std::optional<Failure> done(const FormulaEnv& sigma, const ValueEnv& g, const FPtr& f,
                                const char* rule, int depth) {
        (void)sigma;
        ++progress_;
        if (record_) {
            std::string line(static_cast<size_t>(depth) * 2, ' ');
            line += std::string(rule) + "  " + to_string(g) + " |- " + summary(f);
            derivation.push_back(std::move(line));
        }
        return std::nullopt;
    }

    static std::string summary(const FPtr& f) {
        std::string s = to_string(f);
        if (s.size() > 72) s = s.substr(0, 69) + "...";
        return s;
    }

    static std::string describe(const ValueEnv& g, const EnvKey& k) {
        auto it = g.find(k);
        if (it == g.end()) return " (absent)";
        return " (found " + k.str() + ":" + std::string(to_string(it->second)) + ")";
    }

    std::optional<Failure> fail(const char* rule, std::string msg, const FPtr& at = {}) {
        Failure f;
        f.rejection.rule = rule;
        f.rejection.message = std::move(msg);
        if (at) f.rejection.message += " in " + summary(at);
        f.progress = progress_;
        return f;
    }

    bool record_;
    long progress_ = 0;
};

}  // namespace

TypeCheckResult typecheck(const FormulaEnv& sigma, const ValueEnv& g, const FPtr& f,
                          bool record_derivation) {
    TypeCheckResult res;
    for (const auto& [k, t] : g) {
        if (t == VType::LpidB) {
            res.ok = false;
            res.rejection = {"env", "blocked-linear entry " + k.str() +
                                        " is not allowed in an initial environment"};
            return res;
        }
    }
    Checker c(record_derivation);
    auto failure = c.check_all(sigma, g, f);
    res.derivation = std::move(c.derivation);
    if (failure) {
        res.ok = false;
        res.rejection = failure->rejection;
    } else {
        res.ok = true;
    }
    return res;
}

ValueEnv env_from_types(const std::map<std::string, VType>& types) {
    ValueEnv g;
    for (const auto& [name, t] : types) g[EnvKey::pid(name)] = t;
    return g;
}

}  // namespace adaptrace
