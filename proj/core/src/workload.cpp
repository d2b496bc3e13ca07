#include "adaptrace/workload.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace adaptrace {

namespace {

Value tup(std::vector<Value> xs) { return Value::tuple(std::move(xs)); }
Value atom(const char* s) { return Value::atom(s); }

// ---- inc/dec server ---------------------------------------------------------

// Interface: consume a request, report the receive, then route and report the
// forward (only observable when the workload is built with the internal
// view). A corrupted routing state misdirects inc requests to the decrementor
// until a restart clears it.
bool step_interface(Actor& a, SimServices& sim) {
    const Value j = a.params.at("inc");
    const Value k = a.params.at("dec");
    bool internal_view = a.params.at("internal_view") == Value::integer(1);
    switch (a.pc) {
        case 0: {
            if (a.mailbox.empty()) return false;
            Value req = a.mailbox.front();
            a.mailbox.pop_front();
            a.params["cur"] = req;
            sim.emit(Pattern::recv(value_to_term(a.pid), value_to_term(req)));
            a.pc = 1;
            return true;
        }
        case 1: {
            Value req = a.params.at("cur");
            bool is_inc = !req.items.empty() && req.items[0] == atom("inc");
            Value target = is_inc && !a.regs.count("corrupted") ? j : k;
            sim.send_value(target, req);
            a.pc = 0;
            if (internal_view)
                sim.emit(Pattern::send(value_to_term(a.pid), value_to_term(target),
                                       value_to_term(req)));
            return true;
        }
        default: return false;
    }
}

// Incrementor / decrementor: consume {tag, n, client}, answer the client.
bool step_backend(Actor& a, SimServices& sim) {
    if (a.mailbox.empty()) return false;
    Value req = a.mailbox.front();
    a.mailbox.pop_front();
    bool is_inc_server = a.params.at("kind") == atom("inc");
    if (req.items.size() != 3) return true;
    const Value& tag = req.items[0];
    const Value& n = req.items[1];
    const Value& client = req.items[2];
    Value reply;
    if (is_inc_server) {
        reply = tag == atom("inc") ? tup({atom("res"), Value::integer(n.num + 1)})
                                   : atom("err");
    } else {
        reply = tag == atom("dec") ? tup({atom("res"), Value::integer(n.num - 1)})
                                   : atom("err");
    }
    sim.send_value(client, reply);
    sim.emit(Pattern::send(value_to_term(a.pid), value_to_term(client),
                           value_to_term(reply)));
    return true;
}

// Client: send a request, await the answer, think, repeat. Client actions are
// external and unmonitored.
bool step_client(Actor& a, SimServices& sim) {
    const Value iface = a.params.at("iface");
    const Value reqs = a.params.at("requests");
    long long total = static_cast<long long>(reqs.items.size());
    if (a.regs["think"] > 0) {
        a.regs["think"]--;
        return true;
    }
    if (a.regs["waiting"]) {
        if (a.mailbox.empty()) return false;
        a.mailbox.pop_front();
        a.regs["waiting"] = 0;
        a.regs["think"] = a.params.at("think_time").num;
        return true;
    }
    if (a.regs["next"] >= total) return false;
    Value req = reqs.items[static_cast<size_t>(a.regs["next"])];
    a.regs["next"]++;
    a.regs["waiting"] = 1;
    sim.send_value(iface, req);
    return true;
}

// ---- webserver ---------------------------------------------------------------

// Acceptor: consume a connection notice, hand the session to its handler and
// report the event. Handing over happens before the (possibly suspending)
// event commit so the handler can proceed while the acceptor is blocked.
// Duplicate notices (handler connection retries) are dropped silently.
bool step_acceptor(Actor& a, SimServices& sim) {
    if (a.mailbox.empty()) return false;
    Value conn = a.mailbox.front();
    a.mailbox.pop_front();
    std::string key = "served_" + conn.items[0].name;
    if (a.regs.count(key)) return true;
    a.regs[key] = 1;
    sim.send_value(conn.items[0], atom("go"));
    sim.emit(Pattern::recv(value_to_term(a.pid), value_to_term(conn)));
    return true;
}

Value do_recv_ret(const Value& inner) {
    return tup({atom("yaws"), atom("do_recv"), Value::integer(3),
                tup({atom("ok"), inner})});
}

// Handler: announce the connection to the acceptor (retrying until the
// go-ahead arrives, since a purged acceptor mailbox loses notices), then
// report the request line, six headers and the end-of-headers return; serve
// whitelisted paths.
bool step_handler(Actor& a, SimServices& sim) {
    const Value& path = a.params.at("path");
    const Value& acceptor = a.params.at("acceptor");
    constexpr long kRetry = 25;
    if (a.pc == 0) {
        sim.send_value(acceptor,
                       tup({a.pid, atom("next"), a.params.at("port")}));
        a.regs["timer"] = kRetry;
        a.pc = 1;
        return true;
    }
    if (a.pc == 1) {
        auto it = std::find(a.mailbox.begin(), a.mailbox.end(), atom("go"));
        if (it != a.mailbox.end()) {
            a.mailbox.erase(it);
            a.pc = 2;
            return true;
        }
        if (--a.regs["timer"] <= 0) a.pc = 0;  // connection retry
        return true;
    }
    if (a.pc == 2) {
        Value req = tup({atom("http_req"), atom("GET"), tup({atom("abs_path"), path}),
                         Value::integer(0)});
        sim.emit(Pattern::ret(value_to_term(a.pid), value_to_term(do_recv_ret(req))));
        a.pc = 3;
        return true;
    }
    if (a.pc >= 3 && a.pc <= 8) {
        Value h = a.params.at("h" + std::to_string(a.pc - 2));
        sim.emit(Pattern::ret(value_to_term(a.pid), value_to_term(do_recv_ret(h))));
        a.pc++;
        return true;
    }
    if (a.pc == 9) {
        sim.emit(Pattern::ret(value_to_term(a.pid),
                              value_to_term(do_recv_ret(atom("http_eoh")))));
        a.pc = 10;
        return true;
    }
    if (a.pc == 10) {
        bool whitelisted = path == atom("/pic.png") || path == atom("/site.html");
        if (whitelisted) {
            Value payload = tup({atom("yaws_sendfile"), atom("send"),
                                 Value::list({Value::integer(0), path, Value::integer(0),
                                              Value::integer(0)})});
            sim.emit(Pattern::call(value_to_term(a.pid), value_to_term(payload)));
        }
        a.pc = 11;
        return whitelisted;
    }
    return false;
}

}  // namespace

Workload workload_incdec(bool faulty, int requests, int client_think, bool internal_view) {
    Workload w;
    Value i = Value::pid("i"), j = Value::pid("j"), k = Value::pid("k"), h = Value::pid("h");
    w.pids = {i, j, k, h};
    // k and h stay statically untyped: the canonical scripts bind them at
    // runtime through annotated pattern variables.
    w.types = {{"i", VType::Lpid}, {"j", VType::Upid}};

    Actor ai;
    ai.pid = i;
    ai.role = "interface";
    ai.params["inc"] = j;
    ai.params["dec"] = k;
    ai.params["internal_view"] = Value::integer(internal_view ? 1 : 0);
    if (faulty) ai.regs["corrupted"] = 1;  // injected state corruption
    ai.behavior = step_interface;
    w.actors[i] = std::move(ai);

    Actor aj;
    aj.pid = j;
    aj.role = "incrementor";
    aj.params["kind"] = Value::atom("inc");
    aj.behavior = step_backend;
    w.actors[j] = std::move(aj);

    Actor ak;
    ak.pid = k;
    ak.role = "decrementor";
    ak.params["kind"] = Value::atom("dec");
    ak.behavior = step_backend;
    w.actors[k] = std::move(ak);

    Actor ah;
    ah.pid = h;
    ah.role = "client";
    ah.params["iface"] = i;
    std::vector<Value> reqs;
    for (int r = 0; r < requests; ++r)
        reqs.push_back(Value::tuple({Value::atom("inc"), Value::integer(r + 1), h}));
    ah.params["requests"] = Value::list(std::move(reqs));
    ah.params["think_time"] = Value::integer(client_think);
    ah.behavior = step_client;
    w.actors[h] = std::move(ah);

    add_link(w, i, j);
    add_link(w, i, k);
    return w;
}

Workload workload_webserver(int n_clients, const std::set<int>& malicious_at) {
    Workload w;
    Value acceptor = Value::pid("acceptor");
    w.pids.push_back(acceptor);
    w.types["acceptor"] = VType::Lpid;

    Actor acc;
    acc.pid = acceptor;
    acc.role = "acceptor";
    acc.behavior = step_acceptor;

    for (int c = 0; c < n_clients; ++c) {
        Value h = Value::pid("hnd" + std::to_string(c));
        w.pids.push_back(h);
        bool malicious = malicious_at.count(c) != 0;
        Actor ha;
        ha.pid = h;
        ha.role = "handler";
        ha.params["acceptor"] = acceptor;
        ha.params["port"] = Value::integer(8080 + c);
        ha.params["path"] =
            malicious ? Value::atom("/../secret") : Value::atom("/pic.png");
        for (int hh = 1; hh <= 6; ++hh) {
            std::string name = "h" + std::to_string(hh);
            std::string val = "header" + std::to_string(hh);
            if (malicious && hh == 3) val = "../evil";
            ha.params[name] = Value::atom(val);
        }
        ha.behavior = step_handler;
        w.actors[h] = std::move(ha);
        add_link(w, acceptor, h);
    }
    w.actors[acceptor] = std::move(acc);
    return w;
}

PredicateTable default_predicates() {
    PredicateTable t;
    t["isMalicious"] = [](const std::vector<Value>& args) {
        for (const auto& a : args)
            if (a.kind == ValueKind::Atom && a.name.find("../") != std::string::npos)
                return true;
        return false;
    };
    return t;
}

// ---- bench -----------------------------------------------------------------------

BenchReport bench(const std::vector<InstrMode>& modes, const std::vector<BenchCase>& cases,
                  const std::vector<unsigned long long>& seeds, const PredicateTable& preds) {
    BenchReport rep;
    for (InstrMode m : modes) {
        for (const auto& c : cases) {
            BenchCell cell;
            cell.mode = to_string(m);
            cell.workload = c.name;
            InstrumentedSpec spec;
            try {
                spec = instrument(c.formula, m);
            } catch (const ModeConflict&) {
                cell.skipped = true;
                rep.cells.push_back(cell);
                continue;
            }
            double ev = 0, hs = 0, ad = 0, su = 0;
            long hmin = -1, hmax = 0;
            for (auto seed : seeds) {
                SimResult r = simulate_protocol(spec, c.workload, seed, preds, c.env);
                cell.per_seed.push_back({seed, r.stats});
                cell.runs++;
                ev += static_cast<double>(r.stats.events);
                hs += static_cast<double>(r.stats.blocking_handshakes);
                ad += static_cast<double>(r.stats.adpt_messages);
                su += static_cast<double>(r.stats.total_suspended_steps);
                cell.violations += r.stats.violations;
                cell.aborts += r.stats.aborts;
                hmin = hmin < 0 ? r.stats.blocking_handshakes
                                : std::min(hmin, r.stats.blocking_handshakes);
                hmax = std::max(hmax, r.stats.blocking_handshakes);
            }
            if (cell.runs) {
                cell.events_mean = ev / cell.runs;
                cell.handshakes_mean = hs / cell.runs;
                cell.adpt_mean = ad / cell.runs;
                cell.suspended_mean = su / cell.runs;
                cell.handshakes_min = hmin;
                cell.handshakes_max = hmax;
            }
            rep.cells.push_back(cell);
        }
    }
    return rep;
}

std::string BenchReport::text() const {
    std::ostringstream os;
    os << std::left << std::setw(6) << "mode" << std::setw(16) << "workload" << std::right
       << std::setw(10) << "events" << std::setw(12) << "handshakes" << std::setw(10)
       << "hs-min" << std::setw(10) << "hs-max" << std::setw(10) << "adpt" << std::setw(12)
       << "suspended" << std::setw(11) << "violations" << "\n";
    for (const auto& c : cells) {
        os << std::left << std::setw(6) << c.mode << std::setw(16) << c.workload;
        if (c.skipped) {
            os << "  (mode conflict: skipped)\n";
            continue;
        }
        os << std::right << std::setw(10) << c.events_mean << std::setw(12)
           << c.handshakes_mean << std::setw(10) << c.handshakes_min << std::setw(10)
           << c.handshakes_max << std::setw(10) << c.adpt_mean << std::setw(12)
           << c.suspended_mean << std::setw(11) << c.violations << "\n";
    }
    return os.str();
}

std::string BenchReport::json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json j;
        j["mode"] = c.mode;
        j["workload"] = c.workload;
        j["skipped"] = c.skipped;
        j["runs"] = c.runs;
        j["eventsMean"] = c.events_mean;
        j["handshakesMean"] = c.handshakes_mean;
        j["handshakesMin"] = c.handshakes_min;
        j["handshakesMax"] = c.handshakes_max;
        j["adptMean"] = c.adpt_mean;
        j["suspendedMean"] = c.suspended_mean;
        j["violations"] = c.violations;
        j["aborts"] = c.aborts;
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& r : c.per_seed) {
            nlohmann::json jr = nlohmann::json::parse(r.stats.json());
            jr["seed"] = r.seed;
            jr["mode"] = c.mode;
            jr["workload"] = c.workload;
            runs.push_back(jr);
        }
        j["runs"] = runs;
        arr.push_back(j);
    }
    return arr.dump();
}

}  // namespace adaptrace
