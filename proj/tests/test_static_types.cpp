#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

#include "adaptrace/preprocess.hpp"
#include "adaptrace/runtime.hpp"
#include "adaptrace/static_types.hpp"

using namespace adaptrace;
using namespace th;

static ValueEnv env_of(std::initializer_list<std::pair<const char*, VType>> xs) {
    ValueEnv g;
    for (const auto& [n, t] : xs) g[EnvKey::pid(n)] = t;
    return g;
}

TEST_CASE("env_extend") {
    ValueEnv a = env_of({{"i", VType::Upid}, {"j", VType::Upid}});
    ValueEnv b = env_of({{"i", VType::Upid}});
    b[EnvKey::var("z")] = VType::Lpid;
    auto r = env_extend(a, b);
    REQUIRE(std::holds_alternative<ValueEnv>(r));
    CHECK(std::get<ValueEnv>(r).size() == 3);

    ValueEnv c = env_of({{"i", VType::Lpid}});
    auto bad = env_extend(a, c);
    REQUIRE(std::holds_alternative<EnvKey>(bad));
    CHECK(std::get<EnvKey>(bad).name == "i");

    auto empty = env_extend({}, {});
    CHECK(std::get<ValueEnv>(empty).empty());
}

TEST_CASE("env splitting enumerates linear distributions") {
    ValueEnv unrestricted;
    unrestricted[EnvKey::var("x")] = VType::Upid;
    SplitEnumerator s1(unrestricted);
    CHECK(s1.count() == 1);
    auto [l1, r1] = s1.at(0);
    CHECK(l1 == unrestricted);
    CHECK(r1 == unrestricted);

    ValueEnv linear;
    linear[EnvKey::var("z")] = VType::Lpid;
    SplitEnumerator s2(linear);
    CHECK(s2.count() == 2);
    auto [l2, r2] = s2.at(0);
    CHECK(l2 == linear);
    CHECK(r2.empty());
    auto [l3, r3] = s2.at(1);
    CHECK(l3.empty());
    CHECK(r3 == linear);

    SplitEnumerator s3(ValueEnv{});
    CHECK(s3.count() == 1);

    // Soundness: every split recombines to the original environment.
    ValueEnv mixed = env_of({{"i", VType::Lpid}, {"j", VType::Upid}, {"k", VType::LpidB}});
    mixed[EnvKey::var("d")] = VType::Dat;
    SplitEnumerator s4(mixed);
    CHECK(s4.count() == 4);
    for (unsigned long long m = 0; m < s4.count(); ++m) {
        auto [l, r] = s4.at(m);
        auto merged = env_extend(l, r);
        REQUIRE(std::holds_alternative<ValueEnv>(merged));
        CHECK(std::get<ValueEnv>(merged) == mixed);
        // Linear entries land on exactly one side.
        for (const auto& [k, t] : mixed)
            if (t == VType::Lpid || t == VType::LpidB)
                CHECK((l.count(k) + r.count(k)) == 1);
    }
}

TEST_CASE("apply_release_effects") {
    ValueEnv g = env_of({{"i", VType::LpidB}, {"j", VType::Upid}});
    g[EnvKey::var("y")] = VType::Upid;
    ValueEnv out = apply_release_effects(g, {EnvKey::pid("i")});
    CHECK(out.at(EnvKey::pid("i")) == VType::Lpid);
    CHECK(out.at(EnvKey::pid("j")) == VType::Upid);
    CHECK(out.at(EnvKey::var("y")) == VType::Upid);

    CHECK(apply_release_effects(g, {}) == g);

    ValueEnv lp = env_of({{"i", VType::Lpid}});
    CHECK(apply_release_effects(lp, {EnvKey::pid("i")}) == lp);
    // Idempotence.
    CHECK(apply_release_effects(out, {EnvKey::pid("i")}) == out);
}

TEST_CASE("top_patterns") {
    Script s = parse_script(
        "pids: i\ntypes: i:lpid\n"
        "(([i ? 1]a,{} tt) & ([i ? 2]a,{} tt)) & restart(i)_{} tt");
    auto pats = top_patterns(s.formula);
    REQUIRE(pats.size() == 3);
    CHECK(pats[0].kind == PatternKind::Recv);
    CHECK(pats[1].kind == PatternKind::Recv);
    CHECK(pats[2].kind == PatternKind::Any);

    CHECK(top_patterns(f_fls()).size() == 1);
    CHECK(top_patterns(f_fls())[0].kind == PatternKind::Any);

    Script m = parse_script("pids: i\nmax X. [i ? 1] X");
    auto mp = top_patterns(m.formula);
    REQUIRE(mp.size() == 1);
    CHECK(mp[0].kind == PatternKind::Recv);
}

TEST_CASE("vexcl/excl: the worked four-branch example") {
    // (([i ? 3]a,{j} t1) & ([x:upid ? 3]a,{k} t2)) vs
    // (([i ? 4]a,{} t3) & ([y:upid ? 5]a,{l} t4))
    Script s = parse_script(
        "pids: i, j, k, l\ntypes: j:lpid, k:lpid, l:lpid\n"
        "(([i ? 3]a,{j} tt) & ([x:upid ? 3]a,{k} tt)) & "
        "(([i ? 4]a,{} tt) & ([y:upid ? 5]a,{l} tt))");
    const FPtr& lhs = s.formula->left;
    const FPtr& rhs = s.formula->right;
    auto ex = excl(lhs, rhs);
    REQUIRE(ex.has_value());
    CHECK(ex->first == ReleaseSet{EnvKey::pid("j"), EnvKey::pid("k")});
    CHECK(ex->second == ReleaseSet{EnvKey::pid("l")});

    // The inner branches both match i?3 and are not exclusive.
    CHECK_FALSE(excl(lhs->left, lhs->right).has_value());
}

TEST_CASE("excl: distinct literals are exclusive, self-match is not") {
    Script s = parse_script("pids: i\n([i ? 3] tt) & ([i ? 4] tt)");
    CHECK(excl(s.formula->left, s.formula->right).has_value());
    CHECK_FALSE(excl(s.formula->left, s.formula->left).has_value());
}

TEST_CASE("vexcl: anything is exclusive to trivially satisfied branches") {
    FPtr trivial = f_and(f_release({Ref::pid("a")}, f_tru()),
                         f_release({Ref::pid("b")}, f_tru()));
    Script s = parse_script("pids: i\ntypes: i:lpid\nrestart(i)_{} tt");
    auto r = vexcl(s.formula, trivial);
    REQUIRE(r.has_value());
    CHECK(r->empty());
    // And the trivially satisfied side reports its releases.
    auto r2 = vexcl(trivial, s.formula);
    REQUIRE(r2.has_value());
    CHECK(*r2 == ReleaseSet{EnvKey::pid("a"), EnvKey::pid("b")});
}

TEST_CASE("excl symmetry") {
    CoreGen g(55);
    Script s = parse_script(
        "pids: i, j\n([i ? 1] tt) & (([j ? 2] ff) & ([i ! j . 3] tt))");
    FPtr a = s.formula->left, b = s.formula->right;
    auto e1 = excl(a, b);
    auto e2 = excl(b, a);
    REQUIRE(e1.has_value());
    REQUIRE(e2.has_value());
    CHECK(e1->first == e2->second);
    CHECK(e1->second == e2->first);
}

TEST_CASE("excl is preserved under fixpoint substitution") {
    // Substituting clr X. max X. h for X in guarded positions cannot change
    // the exclusion verdict, since only top patterns matter.
    Script s = parse_script(
        "pids: i, j\nmax X. (([i ? 1] X) & ([i ? 2] X))");
    const FPtr& body = s.formula->left;
    auto before = excl(body->left, body->right);
    FPtr repl = f_clear("X", s.formula);
    FPtr la = subst_formula_var(body->left, "X", repl);
    FPtr rb = subst_formula_var(body->right, "X", repl);
    auto after_subst = excl(la, rb);
    REQUIRE(before.has_value());
    REQUIRE(after_subst.has_value());
    CHECK(before->first == after_subst->first);
    CHECK(before->second == after_subst->second);
}

// ---------------------------------------------------------------------------
// The golden typechecking set
// ---------------------------------------------------------------------------

static FPtr load_pre(const char* path, std::map<std::string, VType>* types = nullptr) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    Script s = parse_script(os.str());
    if (types) *types = s.types;
    return preprocess(s.formula).formula;
}

TEST_CASE("typecheck golden: the adaptation script is accepted") {
    std::map<std::string, VType> types;
    FPtr f = load_pre(CORPUS_DIR "/static9.shml", &types);
    TypeCheckResult r = typecheck({}, env_from_types(types), f);
    CHECK(r.ok);
}

TEST_CASE("typecheck golden: never-blocked adaptee is rejected at tAdS") {
    std::map<std::string, VType> types;
    FPtr f = load_pre(CORPUS_DIR "/phi2.shml", &types);
    TypeCheckResult r = typecheck({}, env_from_types(types), f);
    REQUIRE_FALSE(r.ok);
    CHECK(r.rejection.rule == "tAdS");
}

TEST_CASE("typecheck golden: racy release is rejected at tAdS via side-effects") {
    std::map<std::string, VType> types;
    FPtr f = load_pre(CORPUS_DIR "/phi3.shml", &types);
    TypeCheckResult r = typecheck({}, env_from_types(types), f);
    REQUIRE_FALSE(r.ok);
    CHECK(r.rejection.rule == "tAdS");
}

TEST_CASE("typecheck golden: cross-branch recursion is rejected at tVar") {
    std::map<std::string, VType> types;
    FPtr f = load_pre(CORPUS_DIR "/phi_err.shml", &types);
    TypeCheckResult r = typecheck({}, env_from_types(types), f);
    REQUIRE_FALSE(r.ok);
    CHECK(r.rejection.rule == "tVar");
}

TEST_CASE("typecheck: the webserver mitigation script is accepted") {
    std::map<std::string, VType> types;
    FPtr f = load_pre(CORPUS_DIR "/webserver_v4.shml", &types);
    TypeCheckResult r = typecheck({}, env_from_types(types), f);
    CHECK(r.ok);
}

TEST_CASE("typecheck: blocked-linear entries are not allowed initially") {
    ValueEnv g = env_of({{"i", VType::LpidB}});
    TypeCheckResult r = typecheck({}, g, f_tru());
    CHECK_FALSE(r.ok);
}

TEST_CASE("typecheck: acceptance does not depend on split enumeration order") {
    // A conjunction needing the lone linear pid on the right branch.
    Script s = parse_script(
        "pids: i, j\ntypes: i:lpid\n"
        "[| i ? 1 |]{} (tt & (restart(i)_{i} tt))");
    FPtr f = preprocess(s.formula).formula;
    TypeCheckResult r = typecheck({}, env_of({{"i", VType::Lpid}}), f);
    CHECK(r.ok);
}

TEST_CASE("typecheck: exclusive branches may not both release one blocked pid") {
    // On an event matching neither branch both release lists fire: a double
    // release of i. The mismatch-path premises must reject this.
    Script s = parse_script(
        "pids: i, a\ntypes: i:lpid\n"
        "[| i ? 0 |]{} (([a ? 1]a,{i} tt) & ([a ? 2]a,{i} tt))");
    FPtr f = preprocess(s.formula).formula;
    TypeCheckResult r = typecheck({}, env_from_types(s.types), f);
    REQUIRE_FALSE(r.ok);
    CHECK(r.rejection.rule == "tRel");
}

TEST_CASE("typecheck: exclusive branches releasing distinct pids are fine") {
    Script s = parse_script(
        "pids: i, k, a\ntypes: i:lpid, k:lpid\n"
        "[| i ? 0 |]{} [| k ? 0 |]{i} (([a ? 1]a,{i} tt) & ([a ? 2]a,{k} tt))");
    FPtr f = preprocess(s.formula).formula;
    TypeCheckResult r = typecheck({}, env_from_types(s.types), f);
    CHECK(r.ok);
    // And the accepted script really is safe: no schedule reaches an error,
    // including one where neither inner branch matches.
    Trace t = parse_trace("recv i 0\nrecv k 0\nrecv a 3\n", {"i", "k", "a"});
    std::vector<Value> pids = {pid("i"), pid("k"), pid("a")};
    Configuration c{SystemState::all_unblocked(pids), f};
    auto rep = explore(c, t, 10000);
    CHECK(rep.error_configs == 0);
}

TEST_CASE("typecheck: derivation recording") {
    std::map<std::string, VType> types;
    FPtr f = load_pre(CORPUS_DIR "/static9.shml", &types);
    TypeCheckResult r = typecheck({}, env_from_types(types), f, true);
    CHECK(r.ok);
    CHECK(r.derivation.size() > 5);
    bool has_tmax = false;
    for (const auto& line : r.derivation)
        if (line.find("tMax") != std::string::npos) has_tmax = true;
    CHECK(has_tmax);
}
