// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0
//
// Derived per-job efficiency metrics.
//
//   idle fraction       idle core-time / total core-time over the job window
//   unused memory       1 - mean-over-nodes of the per-node peak used fraction
//   waste               idle fraction x unused memory fraction
//   socket bandwidth    mem_access deltas x 64 B / covered seconds, per socket
//   numa cov            population stddev / mean of per-socket whole-job
//                       mem_access totals, averaged over nodes
//
// A metric that cannot be computed is an explicit missing value, never 0 or
// NaN: zero would silently flag or unflag jobs downstream.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jobmon/ingest.hpp"

namespace jobmon {

/// Bytes moved per memory-access event: one cache line. Must match the
/// synthetic DRAM traffic model.
inline constexpr double kBytesPerMemAccess = 64.0;

struct JobProfile {
    std::string job_id;
    std::string owner;
    std::string queue;
    uint32_t nodes{1};
    uint32_t wayness{1};
    uint32_t cores_per_node{0};
    double wall_hours{0};
    std::optional<double> idle_fraction;
    std::optional<double> unused_mem_fraction;
    std::optional<double> waste;
    std::optional<double> mean_bandwidth_gbps; // decimal GB/s
    std::optional<double> numa_cov;
    double coverage{0};
    double core_seconds{0}; // pool-aggregation denominator
    uint32_t missing_nodes{0};

    bool operator==(const JobProfile&) const = default;
};

struct IdleResult {
    double fraction{0};
    double core_seconds{0};
};

/// Sum of idle deltas over the sum of all cpu field deltas, across every
/// core, node, and non-dropped interval in the job window.
std::optional<IdleResult> cpu_idle_fraction(const JobTimeline& tl);

/// 1 - mean over nodes of the per-node peak of (sum-of-sockets used kb /
/// mem_total_kb), clamped to [0, 1].
std::optional<double> unused_memory_fraction(const JobTimeline& tl);

std::optional<double> waste_metric(const std::optional<double>& idle,
                                   const std::optional<double>& unused);

struct NodeBandwidth {
    std::string hostname;
    std::vector<double> socket_gbps;
    double node_gbps{0};
};

struct BandwidthResult {
    std::vector<NodeBandwidth> nodes;
    double job_mean_gbps{0}; // mean over nodes of the per-node socket sum
};

std::optional<BandwidthResult> socket_bandwidth(const JobTimeline& tl);

/// Population stddev / mean; zero mean yields 0 by definition.
double population_cov(std::span<const double> values);

std::optional<double> numa_cov(const JobTimeline& tl);

/// Core-second-weighted pool idle fraction.
std::optional<double> aggregate_idle(std::span<const JobProfile> profiles);

JobProfile profile_job(const JobTimeline& tl);

} // namespace jobmon
