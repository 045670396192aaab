// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0

#include "jobmon/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>

#include "jobmon/jobhooks.hpp"
#include "jobmon/metrics.hpp"
#include "jobmon/util.hpp"

namespace fs = std::filesystem;

namespace jobmon {

namespace {

/// Runs fn(0..n-1); under OpenMP when parallel, plain loop otherwise. The
/// first exception thrown by any item is rethrown after the loop.
void for_each_index(size_t n, bool parallel, const std::function<void(size_t)>& fn) {
    std::exception_ptr error;
    std::mutex error_mutex;
    auto guarded = [&](size_t i) {
        try {
            fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
#ifdef _OPENMP
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < static_cast<long>(n); ++i) {
            guarded(static_cast<size_t>(i));
        }
        if (error) std::rethrow_exception(error);
        return;
    }
#endif
    (void)parallel;
    for (size_t i = 0; i < n; ++i) guarded(i);
    if (error) std::rethrow_exception(error);
}

// -------------------------------------------------------------------------
// synthetic file generation

struct NodeEvent {
    int64_t t;
    int rank; // 0 rotate, 1 end, 2 begin, 3 tick
    const ScenarioJob* job{nullptr};
};

uint64_t write_node_files(const SyntheticScenario& sc, uint32_t node, const fs::path& stats_dir,
                          size_t& files_out) {
    SyntheticNode model(sc, node);
    const auto [w, t_end] = sc.window();
    const fs::path host_dir = stats_dir / sc.hostname(node);
    fs::remove_all(host_dir);

    std::vector<NodeEvent> events;
    for (int64_t m = day_start(w) + 86400; m <= t_end; m += 86400) {
        events.push_back({m, 0, nullptr});
    }
    for (const auto& job : sc.jobs) {
        if (std::find(job.node_indices.begin(), job.node_indices.end(), node) ==
            job.node_indices.end()) {
            continue;
        }
        events.push_back({job.end, 1, &job});
        events.push_back({job.start, 2, &job});
    }
    for (int64_t t = w; t <= t_end; t += sc.interval) events.push_back({t, 3, nullptr});
    std::sort(events.begin(), events.end(), [](const NodeEvent& a, const NodeEvent& b) {
        return std::tie(a.t, a.rank) < std::tie(b.t, b.rank);
    });

    const FileHeader header = model.header();
    const CounterEventSet& pmc = model.events();
    std::string pmc_joined;
    for (size_t i = 0; i < pmc.events.size(); ++i) pmc_joined += (i ? "," : "") + pmc.events[i];

    auto day_path = [&](int64_t t) { return host_dir / (day_stamp(t) + ".stats"); };
    auto writer = std::make_unique<RecordWriter>(day_path(w), header);
    size_t files = 1;

    auto emit_group = [&](int64_t t, std::vector<std::string> jobs) {
        if (t <= writer->last_group_timestamp()) return; // burst already covers this tick
        RecordGroup g;
        g.timestamp = t;
        std::sort(jobs.begin(), jobs.end());
        jobs.erase(std::unique(jobs.begin(), jobs.end()), jobs.end());
        g.job_ids = std::move(jobs);
        for (auto& s : model.group_at(t).samples) g.samples.push_back(std::move(s));
        writer->group(g);
    };

    for (const NodeEvent& e : events) {
        switch (e.rank) {
            case 0: // rotation at midnight: mark, close, fresh header
                writer->mark(Mark{MarkKind::rotate, "", e.t, ""});
                writer = std::make_unique<RecordWriter>(day_path(e.t), header);
                ++files;
                break;
            case 1: { // job end: final burst still tagged, then the mark
                auto jobs = model.active_jobs(e.t);
                jobs.push_back(e.job->job_id);
                emit_group(e.t, std::move(jobs));
                writer->mark(Mark{MarkKind::end, e.job->job_id, e.t, ""});
                break;
            }
            case 2: // job begin: mark, event-set metadata, first burst
                writer->mark(Mark{MarkKind::begin, e.job->job_id, e.t, ""});
                writer->metadata("pmc_events", pmc_joined);
                emit_group(e.t, model.active_jobs(e.t));
                break;
            case 3:
                emit_group(e.t, model.active_jobs(e.t));
                break;
        }
    }
    writer.reset();

    uint64_t bytes = 0;
    for (const auto& f : list_stats_files(host_dir)) bytes += fs::file_size(f);
    files_out = files;
    return bytes;
}

} // namespace

SynthReport write_scenario_files(const SyntheticScenario& sc, const fs::path& stats_dir,
                                 bool parallel) {
    sc.validate();
    fs::create_directories(stats_dir);
    SynthReport report;
    report.nodes = sc.nodes;
    std::vector<uint64_t> bytes(sc.nodes, 0);
    std::vector<size_t> files(sc.nodes, 0);
    for_each_index(sc.nodes, parallel, [&](size_t node) {
        bytes[node] = write_node_files(sc, static_cast<uint32_t>(node), stats_dir, files[node]);
    });
    for (uint32_t n = 0; n < sc.nodes; ++n) {
        report.bytes += bytes[n];
        report.files += files[n];
    }
    return report;
}

// ---------------------------------------------------------------------------
// ingestion

IngestReport ingest_directory(const fs::path& stats_dir, const fs::path& accounting_csv,
                              JobStore& store, const PipelineOptions& opts) {
    IngestReport report;

    AccountingLoad acct = load_accounting_file(accounting_csv);
    report.jobs_in_accounting = acct.records.size();
    report.accounting_errors = acct.row_errors;

    std::vector<AccountingRecord> jobs =
        filter_jobs(acct.records, opts.min_node_hours, opts.production_queues);
    report.jobs_after_filter = jobs.size();

    // hostname -> indices of the jobs that ran there
    std::map<std::string, std::vector<size_t>> host_jobs;
    for (size_t j = 0; j < jobs.size(); ++j) {
        for (const auto& host : jobs[j].node_list) host_jobs[host].push_back(j);
    }

    std::vector<std::string> hosts;
    if (fs::exists(stats_dir)) {
        for (const auto& entry : fs::directory_iterator(stats_dir)) {
            if (entry.is_directory() && host_jobs.contains(entry.path().filename().string())) {
                hosts.push_back(entry.path().filename().string());
            }
        }
    }
    std::sort(hosts.begin(), hosts.end());

    // Scan each node directory once, routing tagged groups to job buckets.
    struct HostScan {
        std::map<size_t, NodeBucket> buckets; // job index -> bucket
        size_t files{0};
        size_t skipped{0};
        std::vector<std::string> issues;
    };
    std::vector<HostScan> scans(hosts.size());

    for_each_index(hosts.size(), opts.parallel, [&](size_t h) {
        const std::string& host = hosts[h];
        HostScan& scan = scans[h];
        const auto& job_idx = host_jobs.at(host);
        uint32_t file_ord = 0;
        for (const auto& file : list_stats_files(stats_dir / host)) {
            std::ifstream in(file);
            if (!in) throw IoError("cannot open " + file.string());
            ParseReport pr;
            FileHeader header = scan_file(
                in, opts.mode,
                [&](FileEvent&& event) {
                    const auto* g = std::get_if<RecordGroup>(&event);
                    if (!g) return;
                    for (size_t j : job_idx) {
                        if (group_selects(*g, jobs[j], opts.delta.nominal_tick)) {
                            scan.buckets[j].add_group(file_ord, *g);
                        }
                    }
                },
                pr);
            for (size_t j : job_idx) {
                if (scan.buckets.contains(j)) scan.buckets[j].observe_header(header);
            }
            scan.skipped += pr.skipped_lines;
            for (auto& issue : pr.issues) {
                if (scan.issues.size() < 20) {
                    scan.issues.push_back(file.filename().string() + " " + issue);
                }
            }
            ++file_ord;
            ++scan.files;
        }
    });

    // Regroup per job, serially; buckets move out of the per-host scans.
    std::vector<std::map<std::string, NodeBucket>> job_buckets(jobs.size());
    for (size_t h = 0; h < hosts.size(); ++h) {
        for (auto& [j, bucket] : scans[h].buckets) {
            job_buckets[j].emplace(hosts[h], std::move(bucket));
        }
        report.files_scanned += scans[h].files;
        report.skipped_lines += scans[h].skipped;
        for (auto& issue : scans[h].issues) {
            if (report.issues.size() < 50) report.issues.push_back(std::move(issue));
        }
    }

    std::vector<JobTimeline> timelines(jobs.size());
    for_each_index(jobs.size(), opts.parallel, [&](size_t j) {
        timelines[j] = assemble_from_buckets(jobs[j], std::move(job_buckets[j]), opts.delta);
    });

    for_each_index(jobs.size(), opts.parallel, [&](size_t j) { store.put(timelines[j]); });
    for (const auto& tl : timelines) {
        if (!tl.missing_nodes.empty()) ++report.jobs_with_missing_nodes;
    }
    report.jobs_ingested = jobs.size();
    store.write_index();
    return report;
}

AnalyzeReport analyze_store(JobStore& store, const PipelineOptions& opts) {
    AnalyzeReport report;
    const std::vector<std::string> ids = store.job_ids();
    std::vector<std::string> corrupt(ids.size());
    std::vector<char> ok(ids.size(), 0);

    for_each_index(ids.size(), opts.parallel, [&](size_t i) {
        std::optional<StoredEntry> entry;
        try {
            entry = store.get(ids[i]);
        } catch (const FormatError& e) {
            corrupt[i] = ids[i] + ": " + e.what();
            return;
        }
        if (!entry) return;
        JobProfile profile = profile_job(entry->timeline);
        store.put(entry->timeline, &profile);
        ok[i] = 1;
    });

    for (size_t i = 0; i < ids.size(); ++i) {
        if (ok[i]) ++report.profiles;
        else if (!corrupt[i].empty()) report.corrupt.push_back(corrupt[i]);
    }
    store.write_index();
    return report;
}

ValidateReport validate_directory(const fs::path& stats_dir, ParseMode mode, bool parallel) {
    ValidateReport report;
    std::vector<fs::path> files;
    if (fs::exists(stats_dir)) {
        for (const auto& entry : fs::recursive_directory_iterator(stats_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".stats") {
                files.push_back(entry.path());
            }
        }
    }
    std::sort(files.begin(), files.end());
    report.files = files.size();

    std::vector<ValidateReport> partial(files.size());
    for_each_index(files.size(), parallel, [&](size_t i) {
        std::ifstream in(files[i]);
        if (!in) throw IoError("cannot open " + files[i].string());
        ParseReport pr;
        try {
            scan_file(
                in, mode,
                [&](FileEvent&& event) {
                    if (std::holds_alternative<RecordGroup>(event)) ++partial[i].groups;
                    else ++partial[i].marks;
                },
                pr);
        } catch (const FormatError& e) {
            throw FormatError(files[i].string() + ": " + e.what());
        }
        partial[i].skipped_lines = pr.skipped_lines;
        for (auto& issue : pr.issues) {
            partial[i].issues.push_back(files[i].filename().string() + " " + issue);
        }
    });
    for (const auto& p : partial) {
        report.groups += p.groups;
        report.marks += p.marks;
        report.skipped_lines += p.skipped_lines;
        for (const auto& issue : p.issues) {
            if (report.issues.size() < 50) report.issues.push_back(issue);
        }
    }
    return report;
}

ReportFiles write_reports(const JobStore& store, const fs::path& out_dir,
                          const ReportOptions& opts) {
    ReportFiles out;
    std::vector<JobProfile> profiles;
    store.scan_profiles([&](JobProfile&& p) { profiles.push_back(std::move(p)); });

    fs::create_directories(out_dir);
    auto emit = [&](const std::string& name, const std::string& content) {
        atomic_write_file(out_dir / name, content);
        out.written.push_back(out_dir / name);
    };

    out.waste = flag_waste(profiles, opts.waste_threshold);
    out.imbalance =
        flag_imbalance(profiles, opts.min_bw_gbps, opts.min_cov, opts.require_full_wayness);

    const bool csv = opts.format == "csv";
    emit("waste_flags.csv", report_flags_csv(out.waste, profiles));
    emit(csv ? "waste_summary.csv" : "waste_summary.kv",
         csv ? report_summary_csv(out.waste) : report_summary_kv(out.waste));
    emit("imbalance_flags.csv", report_flags_csv(out.imbalance, profiles));
    emit(csv ? "imbalance_summary.csv" : "imbalance_summary.kv",
         csv ? report_summary_csv(out.imbalance) : report_summary_kv(out.imbalance));

    ScatterOutput cpu_mem =
        emit_scatter(profiles, ScatterMetric::idle_fraction, ScatterMetric::mem_used_fraction);
    emit("scatter_cpu_mem.csv", cpu_mem.table);
    ScatterOutput bw_cov =
        emit_scatter(profiles, ScatterMetric::bandwidth_gbps, ScatterMetric::numa_cov);
    emit("scatter_bw_cov.csv", bw_cov.table);
    auto sidecar_text = [](const std::vector<std::string>& ids) {
        std::string text;
        for (const auto& id : ids) text += id + "\n";
        return text;
    };
    emit("scatter_cpu_mem_undefined.txt", sidecar_text(cpu_mem.sidecar));
    emit("scatter_bw_cov_undefined.txt", sidecar_text(bw_cov.sidecar));
    if (opts.svg) {
        emit("scatter_cpu_mem.svg",
             render_scatter_svg(profiles, ScatterMetric::idle_fraction,
                                ScatterMetric::mem_used_fraction));
        emit("scatter_bw_cov.svg",
             render_scatter_svg(profiles, ScatterMetric::bandwidth_gbps,
                                ScatterMetric::numa_cov));
    }

    out.pool_idle = aggregate_idle(profiles);
    size_t low_idle = 0, idle_defined = 0;
    for (const auto& p : profiles) {
        if (p.idle_fraction) {
            ++idle_defined;
            if (*p.idle_fraction <= 0.10) ++low_idle;
        }
    }
    std::string pool = "jobs " + std::to_string(profiles.size()) + "\n";
    pool += "pool_idle_fraction " + (out.pool_idle ? format_double(*out.pool_idle) : "undef") + "\n";
    pool += "jobs_le_10pct_idle_share ";
    pool += idle_defined ? format_double(static_cast<double>(low_idle) / idle_defined) : "undef";
    pool += "\n";
    emit("pool_summary.kv", pool);
    return out;
}

} // namespace jobmon
