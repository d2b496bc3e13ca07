#ifndef ADAPTRACE_WORKLOAD_HPP
#define ADAPTRACE_WORKLOAD_HPP

#include "adaptrace/protocol.hpp"

namespace adaptrace {

/// Increment/decrement server: a common interface `i` routing requests to
/// incrementor `j` and decrementor `k`, with client `h`. The faulty variant
/// starts with a corrupted routing state in `i` that forwards increment
/// requests to the decrementor (which answers `err`); a restart heals it.
/// With internal_view the interface's forward to the backend is observable
/// too (needed to suspend the interface after it routes); the external view
/// matches the plain invariant properties.
Workload workload_incdec(bool faulty, int requests = 3, int client_think = 40,
                         bool internal_view = true);

/// Webserver: an acceptor hands connections to per-client handlers, each
/// emitting the GET/header/end-of-headers return events and, for whitelisted
/// paths, the sendfile call. Clients listed in malicious_at request a path
/// outside the whitelist with traversal headers.
Workload workload_webserver(int n_clients, const std::set<int>& malicious_at = {});

/// Predicate table for the canonical scripts; isMalicious holds when any
/// header value contains the substring "../".
PredicateTable default_predicates();

// ---------------------------------------------------------------------------
// Benchmarking
// ---------------------------------------------------------------------------

struct BenchCase {
    std::string name;
    Workload workload;
    FPtr formula;
    DynEnv env;
};

struct BenchRun {
    unsigned long long seed = 0;
    ProtocolStats stats;
};

struct BenchCell {
    std::string mode;
    std::string workload;
    bool skipped = false;  // mode conflict
    long runs = 0;
    double events_mean = 0, handshakes_mean = 0, adpt_mean = 0, suspended_mean = 0;
    long handshakes_min = 0, handshakes_max = 0;
    long violations = 0, aborts = 0;
    std::vector<BenchRun> per_seed;
};

struct BenchReport {
    std::vector<BenchCell> cells;
    std::string text() const;
    std::string json() const;
};

/// Cross product of modes, workload cases and seeds; per-cell aggregates of
/// the protocol counters.
BenchReport bench(const std::vector<InstrMode>& modes, const std::vector<BenchCase>& cases,
                  const std::vector<unsigned long long>& seeds,
                  const PredicateTable& preds = default_predicates());

}  // namespace adaptrace

#endif
