// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0
//
// Scheduler prolog/epilog and rotation entry points. Hooks are short-lived
// processes: the active job set and the virtually programmed counter event
// set persist in a small per-node state file next to the day files. Hook
// failures that a scheduler could retry are warnings, never errors, so job
// launch is never blocked.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "jobmon/collectors.hpp"
#include "jobmon/record_format.hpp"

namespace jobmon {

struct HookState {
    struct ActiveJob {
        std::string job_id;
        CounterArch arch{CounterArch::synthetic};
        int64_t since{0};
    };

    std::vector<std::string> pmc_events; // programmed register file, empty = unprogrammed
    uint64_t program_count{0};           // times the register file was written
    std::vector<ActiveJob> active;

    bool is_active(std::string_view job_id) const;
    std::vector<std::string> active_ids() const;

    static HookState load(const std::filesystem::path& path); // missing file = fresh state
    void save(const std::filesystem::path& path) const;       // atomic rewrite
};

struct HookContext {
    std::filesystem::path stats_dir;
    std::string hostname;
    uint32_t cores{1};
    uint32_t sockets{1};
    uint64_t mem_total_kb{1};
    uint32_t interval{600};
    std::chrono::milliseconds source_timeout{2000};
    const std::vector<std::unique_ptr<Source>>* sources{nullptr};

    std::filesystem::path host_dir() const { return stats_dir / hostname; }
    std::filesystem::path state_path() const { return host_dir() / "hooks.state"; }
    FileHeader file_header() const;
};

struct HookOutcome {
    int warnings{0};
    std::vector<std::string> notes;
    std::filesystem::path file; // the day file written
};

struct DayFileKey {
    std::string stamp; // YYYYMMDD
    int suffix{0};     // 0 for the plain day file, k for the -k rotation
};

std::optional<DayFileKey> parse_day_file_name(const std::string& filename);

/// Stats files of one node directory in write order: by day, then rotation
/// suffix. Non-stats files are ignored.
std::vector<std::filesystem::path> list_stats_files(const std::filesystem::path& host_dir);

/// Day file currently written on this node: `<hostname>/<YYYYMMDD>.stats`,
/// or the highest `-<k>` rotation suffix for that day.
std::filesystem::path current_day_file(const HookContext& ctx, int64_t now);

/// Records the begin mark, writes the chosen counter event set as a
/// `$pmc_events` metadata line, programs the virtual register file if it is
/// not already programmed (never reprograms), and takes a sample burst.
HookOutcome begin_job(const HookContext& ctx, const std::string& job_id, CounterArch arch,
                      int64_t now);

/// Takes a final sample burst, then records the end mark.
HookOutcome end_job(const HookContext& ctx, const std::string& job_id, int64_t now);

/// Appends a rotate mark to the latest file and opens a fresh fully
/// headered one. Retries briefly on filesystem failures.
HookOutcome rotate(const HookContext& ctx, int64_t now);

/// One periodic collection tick, tagged with the active job set.
HookOutcome collect_tick(const HookContext& ctx, int64_t now, CollectorStats& stats);

} // namespace jobmon
