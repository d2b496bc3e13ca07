#ifndef ADAPTRACE_TESTS_GEN_RA_HPP
#define ADAPTRACE_TESTS_GEN_RA_HPP

#include <random>

#include "adaptrace/ast.hpp"

namespace th {

using namespace adaptrace;

// Random adaptation scripts over the inc/dec alphabet, biased toward the
// block-then-adapt idiom so that a useful fraction passes the type checker.
class RaGen {
  public:
    explicit RaGen(unsigned long long seed) : rng_(seed) {}

    FPtr script() {
        fresh_ = 0;
        return formula(2 + static_cast<int>(pick(3)), {}, 0, {"i"});
    }

  private:
    size_t pick(size_t n) { return rng_() % n; }

    Term fresh_dat() { return Term::variable("d" + std::to_string(fresh_++), VType::Dat, true); }
    Term fresh_upid() { return Term::variable("u" + std::to_string(fresh_++), VType::Upid, true); }
    std::string fresh_lpid_name() { return "z" + std::to_string(fresh_++); }

    Pattern some_pattern(std::vector<std::string>& lpids) {
        switch (pick(5)) {
            case 0:
                return Pattern::recv(Term::value(Value::pid("i")),
                                     Term::tuple({Term::value(Value::atom("inc")),
                                                  fresh_dat(), fresh_upid()}));
            case 1:
                return Pattern::send(Term::value(Value::pid("i")), Term::wildcard(),
                                     Term::tuple({Term::value(Value::atom("inc")),
                                                  fresh_dat()}));
            case 2: {
                std::string z = fresh_lpid_name();
                lpids.push_back(z);
                return Pattern::send(Term::variable(z, VType::Lpid, true),
                                     Term::wildcard(), Term::value(Value::atom("err")));
            }
            case 3:
                return Pattern::recv(Term::value(Value::pid("i")),
                                     Term::value(Value::integer(static_cast<long long>(pick(3)))));
            default:
                return Pattern::send(Term::value(Value::pid("j")), Term::wildcard(),
                                     Term::tuple({Term::value(Value::atom("res")),
                                                  fresh_dat()}));
        }
    }

    Ref some_ref(const std::vector<std::string>& lpids) {
        if (!lpids.empty() && pick(2) == 0)
            return Ref::variable(lpids[pick(lpids.size())]);
        return Ref::pid("i");
    }

    RefList some_reflist(const std::vector<std::string>& lpids) {
        RefList rl;
        size_t n = pick(3);
        for (size_t x = 0; x < n; ++x) rl.push_back(some_ref(lpids));
        return rl;
    }

    FPtr leaf(const std::vector<std::string>& fvars, int guards) {
        if (!fvars.empty() && guards > 0 && pick(3) == 0)
            return f_fvar(fvars[pick(fvars.size())]);
        return pick(3) == 0 ? f_fls() : f_tru();
    }

    FPtr formula(int depth, std::vector<std::string> fvars, int guards,
                 std::vector<std::string> lpids) {
        if (depth <= 0) return leaf(fvars, guards);
        switch (pick(10)) {
            case 0:
            case 1: {  // asynchronous necessity
                Pattern p = some_pattern(lpids);
                RefList rl = some_reflist(lpids);
                return f_nec(NecMode::Async, std::move(p), std::move(rl),
                             formula(depth - 1, fvars, guards + 1, lpids));
            }
            case 2:
            case 3: {  // blocking necessity, usually followed by an adaptation
                Pattern p = some_pattern(lpids);
                auto subj = subject_of_name(p);
                FPtr cont;
                if (subj && pick(3) != 0) {
                    AdaptKind k = pick(2) ? AdaptKind::Restart : AdaptKind::Purge;
                    RefList adaptees{subj->second ? Ref::variable(subj->first)
                                                  : Ref::pid(subj->first)};
                    RefList releases = adaptees;
                    cont = f_adapt_sync(k, std::move(adaptees), std::move(releases),
                                        formula(depth - 1, fvars, guards + 1, lpids));
                } else {
                    cont = formula(depth - 1, fvars, guards + 1, lpids);
                }
                return f_nec(NecMode::Blocking, std::move(p), some_reflist(lpids),
                             std::move(cont));
            }
            case 4: {  // conjunction
                return f_and(formula(depth - 1, fvars, guards, lpids),
                             formula(depth - 1, fvars, guards, lpids));
            }
            case 5: {  // condition
                BoolExpr c = BoolExpr::cmp(
                    CmpOp::Eq, Term::value(Value::integer(static_cast<long long>(pick(2)))),
                    Term::value(Value::integer(static_cast<long long>(pick(2)))));
                return f_if(std::move(c), formula(depth - 1, fvars, guards, lpids),
                            formula(depth - 1, fvars, guards, lpids));
            }
            case 6: {  // recursion, guarded by construction
                std::string x = "X" + std::to_string(fresh_++);
                fvars.push_back(x);
                Pattern p = some_pattern(lpids);
                return f_max(x, f_nec(pick(2) ? NecMode::Async : NecMode::Blocking,
                                      std::move(p), some_reflist(lpids),
                                      formula(depth - 1, fvars, 1, lpids)));
            }
            case 7: {  // adaptation without an obvious block (mostly rejected)
                AdaptKind k = pick(2) ? AdaptKind::Restart : AdaptKind::Purge;
                RefList a{some_ref(lpids)};
                return f_adapt_sync(k, std::move(a), some_reflist(lpids),
                                    formula(depth - 1, fvars, guards, lpids));
            }
            default:
                return leaf(fvars, guards);
        }
    }

    // Name and var-ness of a pattern subject usable as an adaptee.
    static std::optional<std::pair<std::string, bool>> subject_of_name(const Pattern& p) {
        if (p.subject.kind == TermKind::Var) return std::make_pair(p.subject.var, true);
        if (p.subject.kind == TermKind::Lit && p.subject.lit.is_pid())
            return std::make_pair(p.subject.lit.name, false);
        return std::nullopt;
    }

    std::mt19937_64 rng_;
    int fresh_ = 0;
};

}  // namespace th

#endif
