// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0
//
// Flag rules over job profiles and the report files built from them. All
// thresholds are strict inequalities; jobs sitting exactly on a threshold
// are counted in the report metadata instead.

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jobmon/metrics.hpp"

namespace jobmon {

struct FlagReport {
    std::string rule;
    std::map<std::string, std::string> params; // thresholds, as printed
    std::vector<std::string> flagged;          // job ids, ascending
    std::vector<std::string> unevaluable;      // undefined metric, ascending
    size_t boundary_jobs{0};                   // exactly at a threshold
    size_t pool_size{0};

    std::vector<std::pair<std::string, size_t>> user_counts; // descending count, then owner
    std::optional<double> top_user_share;

    struct Shape {
        uint32_t nodes{0};
        double wall_hours{0};
    };
    std::map<std::string, Shape> shapes; // per flagged job
};

/// waste > threshold (strict). Jobs with undefined waste are listed as
/// unevaluable, never flagged.
FlagReport flag_waste(std::span<const JobProfile> profiles, double threshold = 0.9);

/// Full-wayness (wayness == cores per node, when required) AND bandwidth >
/// min_bw_gbps AND CoV > min_cov, all strict.
FlagReport flag_imbalance(std::span<const JobProfile> profiles, double min_bw_gbps = 1.0,
                          double min_cov = 1.0, bool require_full_wayness = true);

/// Fills per-owner counts (descending) and the top owner's share.
void summarize_users(FlagReport& report, std::span<const JobProfile> profiles);

enum class ScatterMetric : uint8_t {
    idle_fraction,
    mem_used_fraction, // 1 - unused
    unused_mem_fraction,
    waste,
    bandwidth_gbps,
    numa_cov,
    coverage,
};
std::string_view scatter_metric_name(ScatterMetric m);
std::optional<double> scatter_metric_value(const JobProfile& p, ScatterMetric m);

struct ScatterOutput {
    std::string table;               // job_id,x,y,group rows, job_id ascending
    std::vector<std::string> sidecar; // jobs with an undefined metric
};

/// group is full_wayness when wayness == cores_per_node, else
/// partial_wayness.
ScatterOutput emit_scatter(std::span<const JobProfile> profiles, ScatterMetric x,
                           ScatterMetric y);

/// Minimal vector rendering of the same points; the two wayness groups are
/// drawn in different colors.
std::string render_scatter_svg(std::span<const JobProfile> profiles, ScatterMetric x,
                               ScatterMetric y);

/// Key-value summary text for one flag report.
std::string report_summary_kv(const FlagReport& report);
/// The same summary as a two-column csv.
std::string report_summary_csv(const FlagReport& report);
/// Flagged-job table: job_id,owner,nodes,wall_hours and the rule's metrics.
std::string report_flags_csv(const FlagReport& report, std::span<const JobProfile> profiles);

} // namespace jobmon
