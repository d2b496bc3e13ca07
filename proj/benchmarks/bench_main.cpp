#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "adaptrace/dynamic_types.hpp"
#include "adaptrace/parse.hpp"
#include "adaptrace/preprocess.hpp"
#include "adaptrace/static_types.hpp"
#include "adaptrace/workload.hpp"

using namespace adaptrace;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const std::string& static9_src() {
    static std::string src = slurp(CORPUS_DIR "/static9.shml");
    return src;
}

Script static9() { return parse_script(static9_src()); }

Trace exmodel() {
    return parse_trace(slurp(CORPUS_DIR "/traces/exmodel.trace"), {"i", "j", "k", "h"});
}

}  // namespace

static void BM_ParseScript(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(parse_script(static9_src()));
}
BENCHMARK(BM_ParseScript);

static void BM_PatternMatch(benchmark::State& state) {
    Pattern open = Pattern::send(
        Term::value(Value::pid("srv")), Term::value(Value::pid("clnt")),
        Term::tuple({Term::variable("x", VType::Dat, true),
                     Term::value(Value::atom("ack")),
                     Term::variable("y", VType::Upid, true)}));
    Pattern act = Pattern::send(
        Term::value(Value::pid("srv")), Term::value(Value::pid("clnt")),
        Term::tuple({Term::value(Value::integer(5)), Term::value(Value::atom("ack")),
                     Term::value(Value::pid("joe"))}));
    for (auto _ : state) benchmark::DoNotOptimize(match_patterns(open, act));
}
BENCHMARK(BM_PatternMatch);

static void BM_RunCore(benchmark::State& state) {
    Script s = parse_script(slurp(CORPUS_DIR "/intro1.shml"));
    Trace t = parse_trace(slurp(CORPUS_DIR "/traces/intro1_violation.trace"), s.pids);
    Trace repeated;
    for (long n = 0; n < state.range(0); ++n)
        repeated.insert(repeated.end(), t.begin(), t.begin() + 2);
    for (auto _ : state) benchmark::DoNotOptimize(run_core(s.formula, repeated));
}
BENCHMARK(BM_RunCore)->Arg(1)->Arg(16)->Arg(64);

static void BM_Typecheck(benchmark::State& state) {
    Script s = static9();
    FPtr f = preprocess(s.formula).formula;
    ValueEnv g = env_from_types(s.types);
    for (auto _ : state) benchmark::DoNotOptimize(typecheck({}, g, f));
}
BENCHMARK(BM_Typecheck);

static void BM_Explore(benchmark::State& state) {
    Script s = parse_script(slurp(CORPUS_DIR "/phi3.shml"));
    FPtr f = preprocess(s.formula).formula;
    std::vector<Value> pids;
    for (const auto& n : s.pids) pids.push_back(Value::pid(n));
    Trace t = exmodel();
    for (auto _ : state) {
        Configuration c{SystemState::all_unblocked(pids), f};
        benchmark::DoNotOptimize(explore(c, t, 10000));
    }
}
BENCHMARK(BM_Explore);

static void BM_DtRun(benchmark::State& state) {
    Script s = static9();
    FPtr f = preprocess(s.formula).formula;
    DynEnv env = dyn_env_from_types(s.types);
    std::vector<Value> pids = {Value::pid("i"), Value::pid("j"), Value::pid("k"),
                               Value::pid("h")};
    Trace t = exmodel();
    for (auto _ : state) {
        TypedConfiguration c{SystemState::all_unblocked(pids),
                             {env, initial_scope(env), f}};
        benchmark::DoNotOptimize(dt_run(c, t));
    }
}
BENCHMARK(BM_DtRun);

static void BM_SimulateWebserver(benchmark::State& state) {
    Script ws = parse_script(slurp(CORPUS_DIR "/webserver_hybrid.shml"));
    InstrumentedSpec spec =
        instrument(ws.formula, state.range(0) ? InstrMode::SMSI : InstrMode::AMSD);
    PredicateTable preds = default_predicates();
    for (auto _ : state) {
        Workload w = workload_webserver(5);
        benchmark::DoNotOptimize(simulate_protocol(spec, w, 1, preds));
    }
}
BENCHMARK(BM_SimulateWebserver)->Arg(0)->Arg(1);

BENCHMARK_MAIN();
