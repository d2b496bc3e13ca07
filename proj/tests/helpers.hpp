#ifndef ADAPTRACE_TESTS_HELPERS_HPP
#define ADAPTRACE_TESTS_HELPERS_HPP

#include <random>

#include "adaptrace/core_semantics.hpp"
#include "adaptrace/parse.hpp"

namespace th {

using namespace adaptrace;

inline Value pid(const char* n) { return Value::pid(n); }
inline Value atom(const char* n) { return Value::atom(n); }
inline Value iv(long long n) { return Value::integer(n); }
inline Value tup(std::vector<Value> xs) { return Value::tuple(std::move(xs)); }

inline Term wc() { return Term::wildcard(); }
inline Term var(const char* n) { return Term::variable(n, std::nullopt, true); }
inline Term varu(const char* n) { return Term::variable(n, std::nullopt, false); }
inline Term tvar(const char* n, VType t) { return Term::variable(n, t, true); }
inline Term lit(Value v) { return Term::value(std::move(v)); }
inline Term ttup(std::vector<Term> xs) { return Term::tuple(std::move(xs)); }

inline std::set<std::string> incdec_pids() { return {"i", "j", "k", "h", "h2"}; }

// ---------------------------------------------------------------------------
// Random core formulas and traces for the correspondence suite. The alphabet
// keeps pids and atoms disjoint and small enough that matches happen often.
// ---------------------------------------------------------------------------

class CoreGen {
  public:
    explicit CoreGen(unsigned long long seed) : rng_(seed) {}

    FPtr formula(int depth) { return gen_formula(depth, {}, 0); }

    Trace trace(size_t len) {
        Trace t;
        for (size_t n = 0; n < len; ++n) t.push_back(action());
        return t;
    }

    Action action() {
        Value subj = some_pid();
        switch (pick(4)) {
            case 0: {
                Value target = some_pid();
                return Pattern::send(Term::value(subj), Term::value(target),
                                     Term::value(payload_value()));
            }
            case 1: return Pattern::recv(Term::value(subj), Term::value(payload_value()));
            case 2: return Pattern::call(Term::value(subj), Term::value(payload_value()));
            default: return Pattern::ret(Term::value(subj), Term::value(payload_value()));
        }
    }

  private:
    size_t pick(size_t n) { return rng_() % n; }

    Value some_pid() {
        static const char* pids[] = {"i", "j", "k", "h"};
        return Value::pid(pids[pick(4)]);
    }
    Value some_atom() {
        static const char* atoms[] = {"inc", "res", "err", "ack"};
        return Value::atom(atoms[pick(4)]);
    }
    Value payload_value() {
        switch (pick(4)) {
            case 0: return some_atom();
            case 1: return Value::integer(static_cast<long long>(pick(3)));
            case 2: return some_pid();
            default:
                return Value::tuple({some_atom(), Value::integer(static_cast<long long>(pick(3)))});
        }
    }

    Term payload_term(std::vector<std::string>& bound, int& fresh) {
        switch (pick(6)) {
            case 0: return Term::value(some_atom());
            case 1: return Term::value(Value::integer(static_cast<long long>(pick(3))));
            case 2: return Term::wildcard();
            case 3: {
                if (!bound.empty() && pick(2) == 0)
                    return Term::variable(bound[pick(bound.size())], std::nullopt, false);
                std::string v = "v" + std::to_string(fresh++);
                bound.push_back(v);
                return Term::variable(v, VType::Dat, true);
            }
            case 4:
                return Term::tuple({Term::value(some_atom()), payload_term(bound, fresh)});
            default: return Term::value(some_pid());
        }
    }

    Pattern pattern(std::vector<std::string>& bound, int& fresh) {
        Term subj = pick(3) == 0 ? Term::wildcard() : Term::value(some_pid());
        switch (pick(4)) {
            case 0:
                return Pattern::send(std::move(subj), payload_term(bound, fresh),
                                     payload_term(bound, fresh));
            case 1: return Pattern::recv(std::move(subj), payload_term(bound, fresh));
            case 2: return Pattern::call(std::move(subj), payload_term(bound, fresh));
            default: return Pattern::ret(std::move(subj), payload_term(bound, fresh));
        }
    }

    FPtr gen_formula(int depth, std::vector<std::string> fvars, int guards) {
        // Leaves.
        if (depth <= 0) {
            switch (pick(3)) {
                case 0: return f_tru();
                case 1: return f_fls();
                default:
                    if (!fvars.empty() && guards > 0) return f_fvar(fvars[pick(fvars.size())]);
                    return pick(2) ? f_tru() : f_fls();
            }
        }
        switch (pick(8)) {
            case 0: return f_tru();
            case 1: return f_fls();
            case 2:
            case 3: {
                std::vector<std::string> bound;
                int fresh = depth * 10;
                Pattern p = pattern(bound, fresh);
                return f_nec(NecMode::Core, std::move(p), {},
                             gen_formula(depth - 1, fvars, guards + 1));
            }
            case 4:
                return f_and(gen_formula(depth - 1, fvars, guards),
                             gen_formula(depth - 1, fvars, guards));
            case 5: {
                std::string x = "X" + std::to_string(depth) + std::to_string(pick(100));
                fvars.push_back(x);
                // Body must guard the variable: force a necessity on top.
                std::vector<std::string> bound;
                int fresh = depth * 10 + 5;
                Pattern p = pattern(bound, fresh);
                return f_max(x, f_nec(NecMode::Core, std::move(p), {},
                                      gen_formula(depth - 1, fvars, 1)));
            }
            case 6: {
                BoolExpr c = pick(2) ? BoolExpr::literal(true)
                                     : BoolExpr::cmp(CmpOp::Eq,
                                                     Term::value(Value::integer(
                                                         static_cast<long long>(pick(2)))),
                                                     Term::value(Value::integer(
                                                         static_cast<long long>(pick(2)))));
                return f_if(std::move(c), gen_formula(depth - 1, fvars, guards),
                            gen_formula(depth - 1, fvars, guards));
            }
            default:
                if (!fvars.empty() && guards > 0) return f_fvar(fvars[pick(fvars.size())]);
                return f_tru();
        }
    }

    std::mt19937_64 rng_;
};

}  // namespace th

#endif
