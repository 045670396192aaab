// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0

#include "jobmon/report.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "jobmon/util.hpp"

namespace jobmon {

namespace {

void finish_flags(FlagReport& r, std::span<const JobProfile> profiles) {
    std::sort(r.flagged.begin(), r.flagged.end());
    std::sort(r.unevaluable.begin(), r.unevaluable.end());
    r.pool_size = profiles.size();
    for (const auto& p : profiles) {
        if (std::binary_search(r.flagged.begin(), r.flagged.end(), p.job_id)) {
            r.shapes[p.job_id] = {p.nodes, p.wall_hours};
        }
    }
    summarize_users(r, profiles);
}

} // namespace

FlagReport flag_waste(std::span<const JobProfile> profiles, double threshold) {
    FlagReport r;
    r.rule = "waste";
    r.params["threshold"] = format_double(threshold);
    for (const auto& p : profiles) {
        if (!p.waste) {
            r.unevaluable.push_back(p.job_id);
            continue;
        }
        if (*p.waste > threshold) r.flagged.push_back(p.job_id);
        else if (*p.waste == threshold) ++r.boundary_jobs;
    }
    finish_flags(r, profiles);
    return r;
}

FlagReport flag_imbalance(std::span<const JobProfile> profiles, double min_bw_gbps,
                          double min_cov, bool require_full_wayness) {
    FlagReport r;
    r.rule = "imbalance";
    r.params["min_bw_gbps"] = format_double(min_bw_gbps);
    r.params["min_cov"] = format_double(min_cov);
    r.params["require_full_wayness"] = require_full_wayness ? "true" : "false";
    for (const auto& p : profiles) {
        if (!p.mean_bandwidth_gbps || !p.numa_cov) {
            r.unevaluable.push_back(p.job_id);
            continue;
        }
        if (require_full_wayness && (p.cores_per_node == 0 || p.wayness != p.cores_per_node)) {
            continue;
        }
        const bool bw = *p.mean_bandwidth_gbps > min_bw_gbps;
        const bool cov = *p.numa_cov > min_cov;
        if (bw && cov) {
            r.flagged.push_back(p.job_id);
        } else if (*p.mean_bandwidth_gbps == min_bw_gbps || *p.numa_cov == min_cov) {
            ++r.boundary_jobs;
        }
    }
    finish_flags(r, profiles);
    return r;
}

void summarize_users(FlagReport& report, std::span<const JobProfile> profiles) {
    std::map<std::string, size_t> counts;
    for (const auto& p : profiles) {
        if (std::binary_search(report.flagged.begin(), report.flagged.end(), p.job_id)) {
            ++counts[p.owner];
        }
    }
    report.user_counts.assign(counts.begin(), counts.end());
    std::sort(report.user_counts.begin(), report.user_counts.end(),
              [](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second > b.second;
                  return a.first < b.first;
              });
    if (report.flagged.empty() || report.user_counts.empty()) {
        report.top_user_share = std::nullopt;
    } else {
        report.top_user_share = static_cast<double>(report.user_counts.front().second) /
                                static_cast<double>(report.flagged.size());
    }
}

std::string_view scatter_metric_name(ScatterMetric m) {
    switch (m) {
        case ScatterMetric::idle_fraction: return "idle_fraction";
        case ScatterMetric::mem_used_fraction: return "mem_used_fraction";
        case ScatterMetric::unused_mem_fraction: return "unused_mem_fraction";
        case ScatterMetric::waste: return "waste";
        case ScatterMetric::bandwidth_gbps: return "bandwidth_gbps";
        case ScatterMetric::numa_cov: return "numa_cov";
        case ScatterMetric::coverage: return "coverage";
    }
    return "unknown";
}

std::optional<double> scatter_metric_value(const JobProfile& p, ScatterMetric m) {
    switch (m) {
        case ScatterMetric::idle_fraction: return p.idle_fraction;
        case ScatterMetric::mem_used_fraction:
            if (!p.unused_mem_fraction) return std::nullopt;
            return 1.0 - *p.unused_mem_fraction;
        case ScatterMetric::unused_mem_fraction: return p.unused_mem_fraction;
        case ScatterMetric::waste: return p.waste;
        case ScatterMetric::bandwidth_gbps: return p.mean_bandwidth_gbps;
        case ScatterMetric::numa_cov: return p.numa_cov;
        case ScatterMetric::coverage: return p.coverage;
    }
    return std::nullopt;
}

namespace {

std::string_view group_of(const JobProfile& p) {
    return (p.cores_per_node != 0 && p.wayness == p.cores_per_node) ? "full_wayness"
                                                                    : "partial_wayness";
}

std::vector<const JobProfile*> sorted_by_id(std::span<const JobProfile> profiles) {
    std::vector<const JobProfile*> out;
    for (const auto& p : profiles) out.push_back(&p);
    std::sort(out.begin(), out.end(),
              [](const JobProfile* a, const JobProfile* b) { return a->job_id < b->job_id; });
    return out;
}

} // namespace

ScatterOutput emit_scatter(std::span<const JobProfile> profiles, ScatterMetric x,
                           ScatterMetric y) {
    ScatterOutput out;
    std::ostringstream table;
    table << "job_id," << scatter_metric_name(x) << "," << scatter_metric_name(y) << ",group\n";
    for (const JobProfile* p : sorted_by_id(profiles)) {
        auto xv = scatter_metric_value(*p, x);
        auto yv = scatter_metric_value(*p, y);
        if (!xv || !yv) {
            out.sidecar.push_back(p->job_id);
            continue;
        }
        table << p->job_id << "," << format_double(*xv) << "," << format_double(*yv) << ","
              << group_of(*p) << "\n";
    }
    out.table = std::move(table).str();
    return out;
}

std::string render_scatter_svg(std::span<const JobProfile> profiles, ScatterMetric x,
                               ScatterMetric y) {
    constexpr int W = 640, H = 480, M = 56;
    double xmax = 1e-9, ymax = 1e-9;
    struct Pt {
        double x, y;
        bool full;
    };
    std::vector<Pt> pts;
    for (const JobProfile* p : sorted_by_id(profiles)) {
        auto xv = scatter_metric_value(*p, x);
        auto yv = scatter_metric_value(*p, y);
        if (!xv || !yv) continue;
        pts.push_back({*xv, *yv, group_of(*p) == "full_wayness"});
        xmax = std::max(xmax, *xv);
        ymax = std::max(ymax, *yv);
    }
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M / 2 << "\" y2=\""
        << H - M << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << M << "\" y2=\"" << M / 2
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
        << scatter_metric_name(x) << "</text>\n";
    svg << "<text x=\"14\" y=\"" << H / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << H / 2 << ")\">"
        << scatter_metric_name(y) << "</text>\n";
    for (const auto& p : pts) {
        const double px = M + p.x / xmax * (W - 1.5 * M);
        const double py = (H - M) - p.y / ymax * (H - 1.5 * M);
        svg << "<circle cx=\"" << format_double(px) << "\" cy=\"" << format_double(py)
            << "\" r=\"2.5\" fill=\"" << (p.full ? "#1f4e9c" : "#c23b22")
            << "\" fill-opacity=\"0.7\"/>\n";
    }
    svg << "</svg>\n";
    return std::move(svg).str();
}

namespace {

void summary_rows(const FlagReport& r,
                  const std::function<void(std::string_view, const std::string&)>& row) {
    row("rule", r.rule);
    for (const auto& [k, v] : r.params) row(k, v);
    row("pool_size", std::to_string(r.pool_size));
    row("flagged", std::to_string(r.flagged.size()));
    row("unevaluable", std::to_string(r.unevaluable.size()));
    row("boundary_jobs", std::to_string(r.boundary_jobs));
    row("top_user", r.user_counts.empty() ? "undef" : r.user_counts.front().first);
    row("top_user_share", r.top_user_share ? format_double(*r.top_user_share) : "undef");
    for (const auto& [owner, count] : r.user_counts) {
        row("user_" + owner, std::to_string(count));
    }
}

} // namespace

std::string report_summary_kv(const FlagReport& report) {
    std::ostringstream out;
    summary_rows(report, [&](std::string_view k, const std::string& v) {
        out << k << " " << v << "\n";
    });
    return std::move(out).str();
}

std::string report_summary_csv(const FlagReport& report) {
    std::ostringstream out;
    out << "key,value\n";
    summary_rows(report, [&](std::string_view k, const std::string& v) {
        out << k << "," << v << "\n";
    });
    return std::move(out).str();
}

std::string report_flags_csv(const FlagReport& report, std::span<const JobProfile> profiles) {
    std::ostringstream out;
    out << "job_id,owner,queue,nodes,wall_hours,wayness,idle_fraction,unused_mem_fraction,waste,"
           "mean_bandwidth_gbps,numa_cov\n";
    auto fmt = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string("undef");
    };
    for (const JobProfile* p : sorted_by_id(profiles)) {
        if (!std::binary_search(report.flagged.begin(), report.flagged.end(), p->job_id)) {
            continue;
        }
        out << p->job_id << "," << p->owner << "," << p->queue << "," << p->nodes << ","
            << format_double(p->wall_hours) << "," << p->wayness << "," << fmt(p->idle_fraction)
            << "," << fmt(p->unused_mem_fraction) << "," << fmt(p->waste) << ","
            << fmt(p->mean_bandwidth_gbps) << "," << fmt(p->numa_cov) << "\n";
    }
    return std::move(out).str();
}

} // namespace jobmon
