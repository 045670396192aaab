// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic cluster source for testing and desk-scale
// experiments. Counter values are floors of closed-form rate integrals, so
// any two calls with the same (scenario, node, t) are byte-identical and
// every counter is monotone in t.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "jobmon/collectors.hpp"
#include "jobmon/record_format.hpp"

namespace jobmon {

struct ScenarioJob {
    std::string job_id;
    std::string owner{"unknown"};
    std::string queue{"normal"};
    std::vector<uint32_t> node_indices;
    uint32_t wayness{1};
    int64_t start{0};
    int64_t end{0};
    double idle_pattern{0.0};        // idle fraction of each occupied core
    std::vector<double> numa_skew;   // per-socket weights, sum to 1
    double mem_used_fraction{0.0};
    double dram_bytes_per_sec{0.0};
};

struct SyntheticScenario {
    uint64_t seed{0};
    uint32_t nodes{1};
    uint32_t cores_per_node{16};
    uint32_t sockets_per_node{4};
    uint64_t mem_total_kb{32ull << 20};
    uint32_t interval{600};
    int64_t t0{0}; // generation window; when both zero it is derived from the jobs
    int64_t t1{0};
    /// Added to every counter value (modulo 2^64). A base near the top of
    /// the range forces wraparounds for end-to-end wrap testing.
    uint64_t counter_base{0};
    std::vector<ScenarioJob> jobs;

    /// Throws FormatError on invariant violations (weights, ranges, overlap).
    void validate() const;
    std::string hostname(uint32_t node) const;
    uint32_t cores_per_socket() const { return cores_per_node / sockets_per_node; }
    /// [window start, window end): the span the collector is simulated over.
    std::pair<int64_t, int64_t> window() const;
};

/// Plain key-value scenario config with one [job <id>] section per job.
SyntheticScenario parse_scenario(std::istream& in);
SyntheticScenario parse_scenario_file(const std::filesystem::path& path);
std::string scenario_to_text(const SyntheticScenario& sc);

/// Counter model of one synthetic node.
class SyntheticNode {
public:
    SyntheticNode(const SyntheticScenario& sc, uint32_t node);

    /// All jobs whose [start, end) covers t, on this node.
    std::vector<std::string> active_jobs(int64_t t) const;

    /// Full sample burst for every synthetic type at absolute time t.
    RecordGroup group_at(int64_t t) const;

    std::vector<Sample> samples_at(int64_t t, std::string_view type_name) const;

    /// pmc samples for an arbitrary programmed event list; unknown events
    /// read as constant-zero counters.
    std::vector<Sample> pmc_samples_at(int64_t t, const std::vector<std::string>& events) const;

    FileHeader header() const;
    const CounterEventSet& events() const { return events_; }
    const SyntheticScenario& scenario() const { return *sc_; }
    uint32_t node() const { return node_; }

    /// Cumulative busy centiseconds of one core since the window start.
    uint64_t busy_cs(uint32_t core, int64_t t) const;
    /// Cumulative memory-access events of one core since the window start.
    uint64_t mem_access_events(uint32_t core, int64_t t) const;
    /// Memory used on one socket at instant t, in kb.
    uint64_t mem_used_kb(uint32_t socket, int64_t t) const;

private:
    const SyntheticScenario* sc_;
    uint32_t node_;
    int64_t window_start_;
    std::vector<const ScenarioJob*> jobs_; // jobs touching this node
    CounterEventSet events_;
};

/// Accounting rows for the scenario's jobs, in the ingest CSV column order.
std::string scenario_accounting_csv(const SyntheticScenario& sc);

} // namespace jobmon
