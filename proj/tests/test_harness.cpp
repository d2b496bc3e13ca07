#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

#include "adaptrace/workload.hpp"

using namespace adaptrace;
using namespace th;

static Script load_script_file(const char* path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return parse_script(os.str());
}

TEST_CASE("every emitted event is a closed action with a pid subject") {
    InstrumentedSpec plain;
    plain.mode = InstrMode::CA;
    plain.formula = f_tru();
    for (const Workload& w :
         {workload_incdec(true, 3), workload_webserver(3, {1})}) {
        SimResult r = simulate_protocol(plain, w, 2, default_predicates());
        for (const auto& e : r.event_log) {
            CHECK(e.is_closed());
            CHECK(subject_pid(e).is_pid());
        }
    }
}

TEST_CASE("faulty inc/dec violates the invariant under every mode and seed") {
    Script intro = load_script_file(CORPUS_DIR "/intro1.shml");
    for (InstrMode m : {InstrMode::CA, InstrMode::SMSI, InstrMode::AMSD}) {
        InstrumentedSpec spec = instrument(intro.formula, m);
        for (unsigned long long seed = 1; seed <= 5; ++seed) {
            SimResult faulty = simulate_protocol(spec, workload_incdec(true, 2, 40, false),
                                                 seed, default_predicates());
            CHECK(faulty.stats.violations > 0);
            SimResult benign = simulate_protocol(spec, workload_incdec(false, 2, 40, false),
                                                 seed, default_predicates());
            CHECK(benign.stats.violations == 0);
        }
    }
}

TEST_CASE("nonce bookkeeping: acknowledged handshakes on violation-free runs") {
    Script hybrid = load_script_file(CORPUS_DIR "/hybrid3.shml");
    InstrumentedSpec smsi = instrument(hybrid.formula, InstrMode::SMSI);
    SimResult r = simulate_protocol(smsi, workload_incdec(false, 2, 40, false), 4,
                                    default_predicates());
    CHECK(r.stats.violations == 0);
    CHECK(r.stats.acks == r.stats.blocking_handshakes);
    CHECK(r.stats.quiescent);
}

TEST_CASE("mitigated inc/dec answers later benign requests") {
    Script s = load_script_file(CORPUS_DIR "/static9.shml");
    InstrumentedSpec ra = instrument(s.formula, InstrMode::RA);
    for (unsigned long long seed = 1; seed <= 5; ++seed) {
        SimResult r = simulate_protocol(ra, workload_incdec(true, 4), seed,
                                        default_predicates(), dyn_env_from_types(s.types));
        CHECK(r.stats.quiescent);
        long errs = 0, results = 0;
        for (const auto& e : r.event_log) {
            std::string txt = to_string(e);
            if (txt.find(". err") != std::string::npos) errs++;
            if (txt.find("{res, ") != std::string::npos) results++;
        }
        CHECK(errs == 1);
        CHECK(results == 3);
        CHECK(r.stats.adaptations.at("restart") == 1);
        CHECK(r.stats.adaptations.at("purge") == 1);
    }
}

TEST_CASE("webserver: malicious index does not matter for mitigation") {
    Script v4 = load_script_file(CORPUS_DIR "/webserver_v4.shml");
    InstrumentedSpec ra = instrument(v4.formula, InstrMode::RA);
    for (int bad = 0; bad < 3; ++bad) {
        Workload w = workload_webserver(3, {bad});
        SimResult r = simulate_protocol(ra, w, 23, default_predicates(),
                                        dyn_env_from_types(v4.types));
        CHECK(r.stats.quiescent);
        long served = 0;
        for (const auto& e : r.event_log)
            if (e.kind == PatternKind::Call) served++;
        CHECK(served == 2);
        CHECK(r.stats.adaptations.at("kill") == 1);
        CHECK(r.final_workload.actors.count(Value::pid("hnd" + std::to_string(bad))) == 0);
    }
}

TEST_CASE("bench report serialization") {
    Script hybrid = load_script_file(CORPUS_DIR "/hybrid3.shml");
    std::vector<BenchCase> cases;
    cases.push_back({"incdec", workload_incdec(false, 1, 40, false), hybrid.formula, {}});
    BenchReport rep = bench({InstrMode::CA, InstrMode::SMSI}, cases, {1});
    CHECK(rep.json().find("\"mode\":\"CA\"") != std::string::npos);
    CHECK(rep.text().find("handshakes") != std::string::npos);
}
