// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0

#include "jobmon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace jobmon {

namespace {

bool usable(DeltaQuality q) { return q != DeltaQuality::reset_dropped; }

} // namespace

std::optional<IdleResult> cpu_idle_fraction(const JobTimeline& tl) {
    double idle = 0, total = 0;
    for (const auto& node : tl.nodes) {
        auto schema_it = node.schemas.find("cpu");
        if (schema_it == node.schemas.end()) continue;
        const int idle_idx = schema_it->second.field_index("idle");
        if (idle_idx < 0) continue;
        for (const auto& [key, series] : node.series) {
            if (key.first != "cpu") continue;
            for (const auto& p : series) {
                if (!usable(p.quality)) continue;
                for (size_t f = 0; f < p.values.size(); ++f) {
                    total += static_cast<double>(p.values[f]);
                    if (static_cast<int>(f) == idle_idx) {
                        idle += static_cast<double>(p.values[f]);
                    }
                }
            }
        }
    }
    if (total <= 0) return std::nullopt;
    return IdleResult{idle / total, total / 100.0};
}

std::optional<double> unused_memory_fraction(const JobTimeline& tl) {
    double peak_sum = 0;
    size_t nodes_with_mem = 0;
    for (const auto& node : tl.nodes) {
        auto schema_it = node.schemas.find("mem");
        if (schema_it == node.schemas.end()) continue;
        const int used_idx = schema_it->second.field_index("used");
        if (used_idx < 0 || node.mem_total_kb == 0) continue;
        // Sum the sockets at each sample time, then take the high-water mark.
        std::map<int64_t, uint64_t> used_at;
        bool any = false;
        for (const auto& [key, snaps] : node.gauges) {
            if (key.first != "mem") continue;
            for (const auto& s : snaps) {
                used_at[s.t] += s.values[used_idx];
                any = true;
            }
        }
        if (!any) continue;
        uint64_t peak = 0;
        for (const auto& [t, used] : used_at) peak = std::max(peak, used);
        peak_sum += static_cast<double>(peak) / static_cast<double>(node.mem_total_kb);
        ++nodes_with_mem;
    }
    if (nodes_with_mem == 0) return std::nullopt;
    const double used_fraction = peak_sum / static_cast<double>(nodes_with_mem);
    return std::clamp(1.0 - used_fraction, 0.0, 1.0);
}

std::optional<double> waste_metric(const std::optional<double>& idle,
                                   const std::optional<double>& unused) {
    if (!idle || !unused) return std::nullopt;
    return *idle * *unused;
}

namespace {

struct SocketTotals {
    std::vector<double> events;  // per socket
    std::vector<double> covered; // per socket, seconds
    bool any{false};
};

SocketTotals node_socket_totals(const NodeTimeline& node) {
    SocketTotals out;
    out.events.assign(node.sockets, 0.0);
    out.covered.assign(node.sockets, 0.0);
    auto schema_it = node.schemas.find("pmc");
    if (schema_it == node.schemas.end()) return out;
    const int idx = schema_it->second.field_index("mem_access");
    if (idx < 0) return out;
    const uint32_t cores_per_socket = std::max(1u, node.cores / std::max(1u, node.sockets));
    for (const auto& [key, series] : node.series) {
        if (key.first != "pmc") continue;
        const uint32_t socket = std::min(node.sockets - 1, key.second / cores_per_socket);
        double covered = 0;
        for (const auto& p : series) {
            if (!usable(p.quality)) continue;
            out.events[socket] += static_cast<double>(p.values[idx]);
            covered += static_cast<double>(p.t1 - p.t0);
        }
        // Cores of one socket share group timestamps; count wall time once.
        out.covered[socket] = std::max(out.covered[socket], covered);
        out.any = true;
    }
    return out;
}

} // namespace

std::optional<BandwidthResult> socket_bandwidth(const JobTimeline& tl) {
    BandwidthResult result;
    double node_sum = 0;
    for (const auto& node : tl.nodes) {
        SocketTotals totals = node_socket_totals(node);
        if (!totals.any) continue;
        NodeBandwidth nb;
        nb.hostname = node.hostname;
        for (uint32_t s = 0; s < node.sockets; ++s) {
            double gbps = 0;
            if (totals.covered[s] > 0) {
                gbps = totals.events[s] * kBytesPerMemAccess / totals.covered[s] / 1e9;
            }
            nb.socket_gbps.push_back(gbps);
            nb.node_gbps += gbps;
        }
        node_sum += nb.node_gbps;
        result.nodes.push_back(std::move(nb));
    }
    if (result.nodes.empty()) return std::nullopt;
    result.job_mean_gbps = node_sum / static_cast<double>(result.nodes.size());
    return result;
}

double population_cov(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (mean == 0.0) return 0.0;
    double var = 0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    return std::sqrt(var) / mean;
}

std::optional<double> numa_cov(const JobTimeline& tl) {
    double cov_sum = 0;
    size_t nodes_with_pmc = 0;
    for (const auto& node : tl.nodes) {
        SocketTotals totals = node_socket_totals(node);
        if (!totals.any) continue;
        cov_sum += population_cov(totals.events);
        ++nodes_with_pmc;
    }
    if (nodes_with_pmc == 0) return std::nullopt;
    return cov_sum / static_cast<double>(nodes_with_pmc);
}

std::optional<double> aggregate_idle(std::span<const JobProfile> profiles) {
    double idle_core_seconds = 0, core_seconds = 0;
    for (const auto& p : profiles) {
        if (!p.idle_fraction) continue;
        idle_core_seconds += *p.idle_fraction * p.core_seconds;
        core_seconds += p.core_seconds;
    }
    if (core_seconds <= 0) return std::nullopt;
    return idle_core_seconds / core_seconds;
}

JobProfile profile_job(const JobTimeline& tl) {
    JobProfile p;
    p.job_id = tl.job.job_id;
    p.owner = tl.job.owner;
    p.queue = tl.job.queue;
    p.nodes = tl.job.nodes;
    p.wayness = tl.job.wayness;
    p.wall_hours = tl.job.wall_hours();
    p.coverage = tl.coverage;
    p.missing_nodes = static_cast<uint32_t>(tl.missing_nodes.size());
    for (const auto& node : tl.nodes) p.cores_per_node = std::max(p.cores_per_node, node.cores);

    if (auto idle = cpu_idle_fraction(tl)) {
        p.idle_fraction = idle->fraction;
        p.core_seconds = idle->core_seconds;
    }
    p.unused_mem_fraction = unused_memory_fraction(tl);
    p.waste = waste_metric(p.idle_fraction, p.unused_mem_fraction);
    if (auto bw = socket_bandwidth(tl)) p.mean_bandwidth_gbps = bw->job_mean_gbps;
    p.numa_cov = numa_cov(tl);
    return p;
}

} // namespace jobmon
