// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0
//
// Pluggable metric sources. Each source owns one type schema and produces
// one Sample per device per collection tick. Host sources read procfs,
// fixture sources read captured host text from a directory, and the
// synthetic source evaluates a scenario's deterministic counter model.

#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jobmon/record_format.hpp"

namespace jobmon {

struct SyntheticScenario;

class SourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Availability : uint8_t { host, synthetic, fixture };
std::string_view availability_name(Availability a);

struct SourceDescriptor {
    std::string type_name;
    TypeSchema schema;
    uint32_t device_count{1};
    Availability availability{Availability::synthetic};
};

enum class CounterArch : uint8_t { opteron, nehalem_westmere, synthetic };

struct CounterEventSet {
    CounterArch arch{CounterArch::synthetic};
    std::vector<std::string> events;
};

/// The fixed per-architecture event sets programmed at job start.
CounterEventSet counter_events(CounterArch arch);
std::optional<CounterArch> arch_from(std::string_view name);
std::string_view arch_name(CounterArch arch);

// Canonical type schemas. Every collector output file declares the schemas
// of the sources it carries; these are the shapes the toolkit knows about.
TypeSchema cpu_schema();   // per-core user/nice/system/idle/iowait/irq/softirq, centiseconds
TypeSchema mem_schema();   // per-socket total/free/used/cached, kb
TypeSchema vm_schema();    // swap/paging counters
TypeSchema load_schema();  // gauges: load averages (hundredths), runnable, processes
TypeSchema net_schema();   // per-interface rx/tx bytes and packets
TypeSchema block_schema(); // per-device read/write ios and sectors
TypeSchema ipc_schema();   // sysv ipc gauges
TypeSchema irq_schema();   // interrupt count
TypeSchema fs_schema();    // per-mount counters
TypeSchema ib_schema();    // per-port bytes and packets
TypeSchema pmc_schema(const CounterEventSet& events); // per-core programmed events

// Text parsers behind the host and fixture sources. Pure; they throw
// SourceError naming the offending line on unrecognized layouts.

/// Kernel per-cpu accounting lines ("cpu0 430 0 120 93000 ...").
/// One Sample per core line, values in centiseconds in schema order;
/// the aggregate non-indexed line is ignored.
std::vector<Sample> parse_cpu_lines(std::string_view text);

/// meminfo key/value text ("MemTotal: 32768 kB" ...), one socket.
std::vector<Sample> parse_meminfo(std::string_view text);

/// Per-NUMA-node meminfo texts ("Node 0 MemTotal: ..."), one per socket.
std::vector<Sample> parse_numa_meminfo(const std::vector<std::string>& per_node_texts);

std::vector<Sample> parse_vmstat(std::string_view text);
std::vector<Sample> parse_loadavg(std::string_view text);
std::vector<Sample> parse_netdev(std::string_view text);
std::vector<Sample> parse_diskstats(std::string_view text);

/// Total interrupt count from the kernel stat "intr" line.
std::vector<Sample> parse_stat_intr(std::string_view text);

// Fixture table formats for sources with no standard host text.
std::vector<Sample> parse_fs_table(std::string_view text);
std::vector<Sample> parse_ib_table(std::string_view text);
std::vector<Sample> parse_ipc_line(std::string_view text);
std::vector<Sample> parse_pmc_table(std::string_view text, CounterEventSet& events_out);

class Source {
public:
    virtual ~Source() = default;
    virtual const SourceDescriptor& descriptor() const = 0;
    virtual std::vector<Sample> collect(int64_t now) = 0;
};

struct CollectorStats {
    std::map<std::string, uint64_t> source_errors;
    uint64_t timeouts{0};
};

/// One collection tick: one Sample per (source, device), tagged with the
/// active job set. A failing or timed-out source contributes nothing and
/// increments its error counter; the group is still emitted.
RecordGroup collect_once(const std::vector<std::unique_ptr<Source>>& sources, int64_t clock,
                         std::vector<std::string> active_jobs, CollectorStats& stats,
                         std::chrono::milliseconds source_timeout = std::chrono::milliseconds(2000));

struct SourceOptions {
    std::filesystem::path fixture_dir;      // empty: no fixtures
    std::filesystem::path proc_root{"/proc"};
    std::filesystem::path sys_root{"/sys"};
    const SyntheticScenario* scenario{nullptr};
    uint32_t scenario_node{0};
    std::vector<std::string> pmc_events;    // programmed events, empty = unprogrammed
};

/// Every source the current environment can serve, one descriptor per
/// canonical type. Fixture beats host, host beats synthetic; the synthetic
/// fallback is always available.
std::vector<SourceDescriptor> list_sources(const SourceOptions& opts);

/// Concrete sources for the descriptors above.
std::vector<std::unique_ptr<Source>> build_sources(const SourceOptions& opts);

FileHeader header_for_sources(const std::vector<std::unique_ptr<Source>>& sources,
                              std::string hostname, uint32_t cores, uint32_t sockets,
                              uint64_t mem_total_kb);

} // namespace jobmon
