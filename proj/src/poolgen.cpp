// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0

#include "jobmon/poolgen.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "jobmon/metrics.hpp"

namespace jobmon {

namespace {

enum class Kind { normal, waste, imbalance, small, debug_queue };

double cov_of(const std::vector<double>& weights) {
    return population_cov(weights);
}

} // namespace

PoolPlan make_pool(const PoolSpec& spec) {
    PoolPlan plan;
    SyntheticScenario& sc = plan.scenario;
    sc.seed = spec.seed;
    sc.nodes = spec.nodes;
    sc.cores_per_node = spec.cores_per_node;
    sc.sockets_per_node = spec.sockets_per_node;
    sc.mem_total_kb = spec.mem_total_kb;
    sc.interval = spec.interval;

    std::mt19937_64 rng(spec.seed);

    std::vector<Kind> kinds;
    for (uint32_t i = 0; i < spec.planted_waste; ++i) kinds.push_back(Kind::waste);
    for (uint32_t i = 0; i < spec.planted_imbalance; ++i) kinds.push_back(Kind::imbalance);
    for (uint32_t i = 0; i < spec.planted_small; ++i) kinds.push_back(Kind::small);
    for (uint32_t i = 0; i < spec.planted_debug_queue; ++i) kinds.push_back(Kind::debug_queue);
    while (kinds.size() < spec.jobs) kinds.push_back(Kind::normal);
    kinds.resize(spec.jobs);
    std::shuffle(kinds.begin(), kinds.end(), rng);

    // Per-node cursor: next second a job may start on that node. One-tick
    // spacing keeps begin/end bursts off each other's timestamps.
    std::vector<int64_t> cursor(spec.nodes, spec.epoch + spec.interval);
    const int64_t gap = spec.interval;
    const double cores = spec.cores_per_node;

    double idle_core_seconds = 0, total_core_seconds = 0;

    for (uint32_t i = 0; i < spec.jobs; ++i) {
        const Kind kind = kinds[i];
        ScenarioJob job;
        char id[16];
        std::snprintf(id, sizeof(id), "j%05u", i);
        job.job_id = id;
        job.owner = "user" + std::to_string(rng() % spec.owners);
        job.queue = "normal";
        job.numa_skew.assign(spec.sockets_per_node, 1.0 / spec.sockets_per_node);

        uint32_t want_nodes = 1;
        int64_t duration = 0;
        switch (kind) {
            case Kind::waste:
                job.wayness = 1 + static_cast<uint32_t>(rng() % 2);
                job.idle_pattern = 0.6;
                job.mem_used_fraction = 0.02;
                job.dram_bytes_per_sec = 0.05e9;
                duration = 5400 + static_cast<int64_t>(rng() % 4) * 1800;
                break;
            case Kind::imbalance:
                // High-rate traffic pinned to socket 0; thin long-running shape.
                job.wayness = spec.cores_per_node;
                job.idle_pattern = 0.0;
                job.mem_used_fraction = 0.5;
                job.dram_bytes_per_sec = 2e9;
                job.numa_skew.assign(spec.sockets_per_node, 0.0);
                job.numa_skew[0] = 1.0;
                want_nodes = 1 + static_cast<uint32_t>(rng() % 2);
                duration = 3600 * (3 + static_cast<int64_t>(rng() % 6));
                // A heavy owner, mirroring single-user dominance of this rule.
                job.owner = "user0";
                break;
            case Kind::small:
                job.wayness = 4;
                job.idle_pattern = 0.8;
                job.mem_used_fraction = 0.01;
                job.dram_bytes_per_sec = 0.05e9;
                duration = 1200; // 0.33 node-hours: under the size filter
                break;
            case Kind::debug_queue:
                job.queue = "debug";
                job.wayness = 2;
                job.idle_pattern = 0.9;
                job.mem_used_fraction = 0.01;
                job.dram_bytes_per_sec = 0.05e9;
                duration = 7200;
                break;
            case Kind::normal: {
                const uint32_t ways[] = {2, 4, 8, spec.cores_per_node, spec.cores_per_node};
                job.wayness = ways[rng() % 5];
                job.idle_pattern = static_cast<double>(rng() % 50) / 100.0; // 0 .. 0.49
                job.mem_used_fraction = 0.30 + static_cast<double>(rng() % 60) / 100.0;
                job.dram_bytes_per_sec = (0.1 + static_cast<double>(rng() % 29) / 10.0) * 1e9;
                want_nodes = 1 + static_cast<uint32_t>(rng() % 2);
                duration = 3600 + static_cast<int64_t>(rng() % 7) * 1800;
                break;
            }
        }

        // Place on the emptiest nodes.
        std::vector<uint32_t> order(spec.nodes);
        for (uint32_t n = 0; n < spec.nodes; ++n) order[n] = n;
        std::sort(order.begin(), order.end(),
                  [&](uint32_t a, uint32_t b) { return cursor[a] < cursor[b]; });
        int64_t start = 0;
        for (uint32_t k = 0; k < want_nodes; ++k) {
            job.node_indices.push_back(order[k]);
            start = std::max(start, cursor[order[k]]);
        }
        job.start = start;
        job.end = start + duration;
        for (uint32_t n : job.node_indices) cursor[n] = job.end + gap;
        std::sort(job.node_indices.begin(), job.node_indices.end());

        PlannedJob planned;
        planned.idle_fraction =
            1.0 - job.wayness * (1.0 - job.idle_pattern) / cores;
        planned.unused_mem_fraction = 1.0 - job.mem_used_fraction;
        planned.waste = planned.idle_fraction * planned.unused_mem_fraction;
        planned.bandwidth_gbps = job.dram_bytes_per_sec / 1e9;
        planned.numa_cov = cov_of(job.numa_skew);
        planned.core_seconds =
            static_cast<double>(duration) * cores * static_cast<double>(want_nodes);
        planned.filtered_out = (kind == Kind::small || kind == Kind::debug_queue);

        if (kind == Kind::waste) plan.waste_set.push_back(job.job_id);
        if (kind == Kind::imbalance) plan.imbalance_set.push_back(job.job_id);
        if (planned.filtered_out) {
            plan.filtered_out.push_back(job.job_id);
        } else {
            idle_core_seconds += planned.idle_fraction * planned.core_seconds;
            total_core_seconds += planned.core_seconds;
        }
        plan.jobs.emplace(job.job_id, planned);
        sc.jobs.push_back(std::move(job));
    }

    plan.pool_idle_fraction = total_core_seconds > 0 ? idle_core_seconds / total_core_seconds : 0;
    std::sort(plan.waste_set.begin(), plan.waste_set.end());
    std::sort(plan.imbalance_set.begin(), plan.imbalance_set.end());
    std::sort(plan.filtered_out.begin(), plan.filtered_out.end());
    sc.validate();
    return plan;
}

} // namespace jobmon
