// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0
//
// Offline pipeline drivers. The per-item kernels (node-file generation,
// node-file scanning, per-job assembly and profiling) are pure, so each
// phase runs its items under OpenMP; every driver keeps a serial path that
// tests and the benchmark compare against the parallel one byte for byte.

#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "jobmon/ingest.hpp"
#include "jobmon/report.hpp"
#include "jobmon/store.hpp"
#include "jobmon/synth.hpp"

namespace jobmon {

struct PipelineOptions {
    DeltaOptions delta;
    ParseMode mode{ParseMode::lenient};
    bool parallel{true};
    double min_node_hours{1.0};
    std::optional<std::set<std::string>> production_queues; // nullopt: all queues
};

struct SynthReport {
    size_t nodes{0};
    size_t files{0};
    uint64_t bytes{0};
};

/// Writes the scenario's raw per-node day files (headers, periodic groups,
/// job marks and bursts, rotation at UTC midnights) under
/// stats_dir/<hostname>/. Existing host directories are replaced.
SynthReport write_scenario_files(const SyntheticScenario& sc,
                                 const std::filesystem::path& stats_dir, bool parallel);

struct IngestReport {
    size_t files_scanned{0};
    size_t skipped_lines{0};
    size_t jobs_in_accounting{0};
    size_t jobs_after_filter{0};
    size_t jobs_ingested{0};
    size_t jobs_with_missing_nodes{0};
    std::vector<std::string> accounting_errors;
    std::vector<std::string> issues;
};

/// Full ingestion: accounting join, size/queue filtering, streaming scan of
/// every node file, timeline assembly, store puts, index rewrite.
/// Re-running over identical inputs produces a byte-identical store.
IngestReport ingest_directory(const std::filesystem::path& stats_dir,
                              const std::filesystem::path& accounting_csv, JobStore& store,
                              const PipelineOptions& opts);

struct AnalyzeReport {
    size_t profiles{0};
    std::vector<std::string> corrupt;
};

/// Computes profiles for every stored timeline and rewrites the entries.
AnalyzeReport analyze_store(JobStore& store, const PipelineOptions& opts);

struct ValidateReport {
    size_t files{0};
    size_t groups{0};
    size_t marks{0};
    size_t skipped_lines{0};
    std::vector<std::string> issues;
};

ValidateReport validate_directory(const std::filesystem::path& stats_dir, ParseMode mode,
                                  bool parallel);

struct ReportOptions {
    double waste_threshold{0.9};
    double min_bw_gbps{1.0};
    double min_cov{1.0};
    bool require_full_wayness{true};
    std::string format{"kv"}; // summary format: kv or csv
    bool svg{false};
};

struct ReportFiles {
    std::vector<std::filesystem::path> written;
    FlagReport waste;
    FlagReport imbalance;
    std::optional<double> pool_idle;
};

/// Writes flag tables, per-rule summaries, scatter data (and optional svg
/// renderings) for every profile in the store.
ReportFiles write_reports(const JobStore& store, const std::filesystem::path& out_dir,
                          const ReportOptions& opts);

} // namespace jobmon
