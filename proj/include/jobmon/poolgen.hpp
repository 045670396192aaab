// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic job pools with planted anomalies. The plan carries the
// closed-form metric values each job should analyze to, which makes pools
// usable as oracles: recovered flag sets must equal the planted sets.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jobmon/synth.hpp"

namespace jobmon {

struct PoolSpec {
    uint64_t seed{42};
    uint32_t nodes{8};
    uint32_t jobs{200};
    uint32_t cores_per_node{16};
    uint32_t sockets_per_node{4};
    uint64_t mem_total_kb{32ull << 20};
    uint32_t interval{600};
    int64_t epoch{1600041600}; // day-aligned simulation start
    uint32_t planted_waste{12};      // waste > 0.9
    uint32_t planted_imbalance{9};   // full-wayness, > 1 GB/s, CoV > 1
    uint32_t planted_small{6};       // under one node-hour; filtered out
    uint32_t planted_debug_queue{5}; // non-production queue; filtered out
    uint32_t owners{10};
};

struct PlannedJob {
    double idle_fraction{0};
    double unused_mem_fraction{0};
    double waste{0};
    double bandwidth_gbps{0};
    double numa_cov{0};
    double core_seconds{0};
    bool filtered_out{false};
};

struct PoolPlan {
    SyntheticScenario scenario;
    std::map<std::string, PlannedJob> jobs;
    std::vector<std::string> waste_set;      // planted waste anomalies, ascending
    std::vector<std::string> imbalance_set;  // planted imbalance anomalies, ascending
    std::vector<std::string> filtered_out;   // sub-node-hour and debug-queue jobs
    double pool_idle_fraction{0}; // core-second-weighted, over the filtered pool
};

PoolPlan make_pool(const PoolSpec& spec);

} // namespace jobmon
