// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0
//
// Joins raw per-node files with accounting records: selects the groups
// tagged with each job inside its window, turns counters into
// wraparound-corrected deltas, and assembles per-job timelines.

#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "jobmon/record_format.hpp"

namespace jobmon {

struct AccountingRecord {
    std::string job_id;
    std::string owner;
    std::string queue;
    uint32_t nodes{1};
    uint32_t wayness{1}; // processes launched per node
    int64_t start{0};
    int64_t end{0};
    std::vector<std::string> node_list;

    double wall_hours() const { return static_cast<double>(end - start) / 3600.0; }
    double node_hours() const { return nodes * wall_hours(); }
};

struct AccountingLoad {
    std::vector<AccountingRecord> records;
    std::vector<std::string> row_errors; // bad rows, with row numbers; good rows kept
};

/// CSV with header row job_id,owner,queue,nodes,wayness,start,end,node_list
/// (node_list semicolon-joined). A missing column is a hard error.
AccountingLoad load_accounting(std::istream& in);
AccountingLoad load_accounting_file(const std::filesystem::path& path);

enum class DeltaQuality : uint8_t { ok, wrapped, reset_dropped, gap };
std::string_view quality_name(DeltaQuality q);
std::optional<DeltaQuality> quality_from(std::string_view s);

struct DeltaPoint {
    int64_t t0{0};
    int64_t t1{0};
    std::vector<uint64_t> values; // per-field deltas (counters) or endpoint values (gauges)
    DeltaQuality quality{DeltaQuality::ok};
};

/// One time-ordered raw sample of a (node, type, device) series.
struct RawPoint {
    int64_t t{0};
    uint32_t file_ord{0}; // rotation boundary marker: bumps at every new file
    std::vector<uint64_t> values;
};

struct DeltaOptions {
    uint32_t nominal_tick{600};
    /// Plausibility bound: a wrapped counter delta implying a per-second
    /// rate above this is treated as a device reset and dropped.
    double max_rate{1e12};
    /// Per-unit overrides of the bound.
    std::map<Unit, double> unit_max_rate;

    double max_rate_for(Unit unit) const {
        auto it = unit_max_rate.find(unit);
        return it == unit_max_rate.end() ? max_rate : it->second;
    }
    int64_t gap_threshold() const { return static_cast<int64_t>(nominal_tick) * 3; }
};

/// Consecutive-sample deltas. curr < prev inside one file is 2^64 wrap
/// arithmetic (then the plausibility bound may demote it to reset_dropped);
/// across a rotation boundary a decrease is a reset, never a wrap.
/// Intervals longer than three nominal ticks are flagged as gaps, deltas
/// kept. Gauges pass endpoint values through.
std::vector<DeltaPoint> delta_series(const TypeSchema& schema, std::span<const RawPoint> samples,
                                     const DeltaOptions& opts);

struct GaugeSnapshot {
    int64_t t{0};
    std::vector<uint64_t> values;
};

struct NodeTimeline {
    std::string hostname;
    uint32_t cores{1};
    uint32_t sockets{1};
    uint64_t mem_total_kb{1};
    std::map<std::string, TypeSchema> schemas;
    /// Delta series for types with counter fields.
    std::map<std::pair<std::string, uint32_t>, std::vector<DeltaPoint>> series;
    /// In-window raw snapshots for types with gauge fields.
    std::map<std::pair<std::string, uint32_t>, std::vector<GaugeSnapshot>> gauges;
    double coverage{0}; // fraction of the job window covered by ok/wrapped cpu intervals
};

struct JobTimeline {
    AccountingRecord job;
    std::vector<NodeTimeline> nodes; // in job.node_list order, present nodes only
    std::vector<std::string> missing_nodes;
    double coverage{0}; // mean over listed nodes; missing nodes count as zero

    bool empty() const { return nodes.empty(); }
};

/// Raw selected samples for one node of one job, fed by streaming scans.
struct NodeBucket {
    std::string hostname;
    uint32_t cores{1};
    uint32_t sockets{1};
    uint64_t mem_total_kb{1};
    bool seen_header{false};
    std::map<std::string, TypeSchema> schemas;
    std::map<std::pair<std::string, uint32_t>, std::vector<RawPoint>> raw;

    bool has_data() const { return !raw.empty(); }
    void observe_header(const FileHeader& h);
    void add_group(uint32_t file_ord, const RecordGroup& g);
};

/// True when the group is tagged with the job and inside its padded window.
bool group_selects(const RecordGroup& g, const AccountingRecord& job, int64_t tick);

NodeTimeline finish_node(NodeBucket&& bucket, const AccountingRecord& job,
                         const DeltaOptions& opts);

JobTimeline assemble_from_buckets(const AccountingRecord& job,
                                  std::map<std::string, NodeBucket>&& buckets,
                                  const DeltaOptions& opts);

/// Selects the groups tagged with the job inside [start - tick, end + tick],
/// builds per-(node, type, device) delta series clipped to [start, end]
/// (straddling intervals are scaled proportionally), and computes coverage.
/// Zero data on all nodes yields an empty timeline, not an error.
JobTimeline assemble_job(const AccountingRecord& job,
                         const std::map<std::string, std::vector<const ParsedFile*>>& files_by_node,
                         const DeltaOptions& opts);

/// Keeps jobs with nodes x wall-hours >= min_node_hours (boundary inclusive)
/// whose queue is in production_queues; nullopt disables the queue filter.
std::vector<AccountingRecord> filter_jobs(std::span<const AccountingRecord> jobs,
                                          double min_node_hours,
                                          const std::optional<std::set<std::string>>& production_queues);

} // namespace jobmon
