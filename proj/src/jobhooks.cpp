// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0

#include "jobmon/jobhooks.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "jobmon/util.hpp"

namespace fs = std::filesystem;

namespace jobmon {

bool HookState::is_active(std::string_view job_id) const {
    for (const auto& j : active) {
        if (j.job_id == job_id) return true;
    }
    return false;
}

std::vector<std::string> HookState::active_ids() const {
    std::vector<std::string> out;
    for (const auto& j : active) out.push_back(j.job_id);
    std::sort(out.begin(), out.end());
    return out;
}

HookState HookState::load(const fs::path& path) {
    HookState st;
    std::ifstream in(path);
    if (!in) return st;
    std::string line;
    while (std::getline(in, line)) {
        auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (tokens[0] == "pmc_events" && tokens.size() == 2) {
            for (auto e : split(tokens[1], ',')) st.pmc_events.emplace_back(e);
        } else if (tokens[0] == "program_count" && tokens.size() == 2) {
            st.program_count = parse_u64(tokens[1]).value_or(0);
        } else if (tokens[0] == "job" && tokens.size() == 4) {
            auto arch = arch_from(tokens[2]);
            auto since = parse_i64(tokens[3]);
            if (arch && since) {
                st.active.push_back({std::string(tokens[1]), *arch, *since});
            }
        }
    }
    return st;
}

void HookState::save(const fs::path& path) const {
    std::ostringstream out;
    if (!pmc_events.empty()) {
        out << "pmc_events ";
        for (size_t i = 0; i < pmc_events.size(); ++i) out << (i ? "," : "") << pmc_events[i];
        out << "\n";
    }
    out << "program_count " << program_count << "\n";
    for (const auto& j : active) {
        out << "job " << j.job_id << " " << arch_name(j.arch) << " " << j.since << "\n";
    }
    fs::create_directories(path.parent_path());
    atomic_write_file(path, out.str());
}

FileHeader HookContext::file_header() const {
    FileHeader h;
    h.hostname = hostname;
    h.cores = cores;
    h.sockets = sockets;
    h.mem_total_kb = mem_total_kb;
    h.extras.emplace_back("interval", std::to_string(interval));
    if (sources) {
        for (const auto& source : *sources) h.schemas.push_back(source->descriptor().schema);
    }
    return h;
}

std::optional<DayFileKey> parse_day_file_name(const std::string& name) {
    if (!name.ends_with(".stats")) return std::nullopt;
    std::string base = name.substr(0, name.size() - 6);
    DayFileKey out;
    size_t dash = base.find('-');
    out.stamp = base.substr(0, dash);
    if (out.stamp.size() != 8 || !parse_u64(out.stamp)) return std::nullopt;
    if (dash != std::string::npos) {
        auto k = parse_u64(base.substr(dash + 1));
        if (!k || *k == 0) return std::nullopt;
        out.suffix = static_cast<int>(*k);
    }
    return out;
}

std::vector<fs::path> list_stats_files(const fs::path& host_dir) {
    std::vector<std::pair<DayFileKey, fs::path>> found;
    if (fs::exists(host_dir)) {
        for (const auto& entry : fs::directory_iterator(host_dir)) {
            auto parsed = parse_day_file_name(entry.path().filename().string());
            if (parsed) found.emplace_back(*parsed, entry.path());
        }
    }
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
        return std::tie(a.first.stamp, a.first.suffix) < std::tie(b.first.stamp, b.first.suffix);
    });
    std::vector<fs::path> out;
    for (auto& [key, path] : found) out.push_back(std::move(path));
    return out;
}

namespace {

std::string day_file_name(const std::string& stamp, int suffix) {
    if (suffix == 0) return stamp + ".stats";
    return stamp + "-" + std::to_string(suffix) + ".stats";
}

/// Highest (stamp, suffix) stats file in the host dir, if any.
std::optional<std::pair<DayFileKey, fs::path>> latest_stats_file(const fs::path& dir) {
    std::optional<std::pair<DayFileKey, fs::path>> best;
    if (!fs::exists(dir)) return best;
    for (const auto& entry : fs::directory_iterator(dir)) {
        auto parsed = parse_day_file_name(entry.path().filename().string());
        if (!parsed) continue;
        if (!best || std::tie(parsed->stamp, parsed->suffix) >
                         std::tie(best->first.stamp, best->first.suffix)) {
            best = {{*parsed}, entry.path()};
        }
    }
    return best;
}

RecordGroup burst(const HookContext& ctx, int64_t now, std::vector<std::string> jobs) {
    CollectorStats stats;
    if (!ctx.sources) return RecordGroup{now, std::move(jobs), {}};
    return collect_once(*ctx.sources, now, std::move(jobs), stats, ctx.source_timeout);
}

int next_suffix(const fs::path& dir, const std::string& stamp) {
    auto latest = latest_stats_file(dir);
    if (latest && latest->first.stamp == stamp) return latest->first.suffix + 1;
    return 0;
}

/// Opens the day file for appending; when its schema set no longer matches
/// (the counter event set changed across jobs), rotates to a fresh file
/// rather than blocking the hook.
std::unique_ptr<RecordWriter> open_writer(const HookContext& ctx, int64_t now,
                                          HookOutcome& outcome) {
    const fs::path p = current_day_file(ctx, now);
    try {
        return std::make_unique<RecordWriter>(p, ctx.file_header());
    } catch (const FormatError& e) {
        ++outcome.warnings;
        outcome.notes.push_back(std::string(e.what()) + "; rotating");
        const std::string stamp = day_stamp(now);
        fs::path fresh = ctx.host_dir() / day_file_name(stamp, next_suffix(ctx.host_dir(), stamp));
        return std::make_unique<RecordWriter>(fresh, ctx.file_header());
    }
}

void emit_burst(RecordWriter& writer, const HookContext& ctx, int64_t now,
                std::vector<std::string> jobs, HookOutcome& outcome) {
    if (now <= writer.last_group_timestamp()) {
        ++outcome.warnings;
        outcome.notes.push_back("burst skipped: timestamp not past last group");
        return;
    }
    writer.group(burst(ctx, now, std::move(jobs)));
}

} // namespace

fs::path current_day_file(const HookContext& ctx, int64_t now) {
    const std::string stamp = day_stamp(now);
    auto latest = latest_stats_file(ctx.host_dir());
    if (latest && latest->first.stamp == stamp) return latest->second;
    return ctx.host_dir() / day_file_name(stamp, 0);
}

HookOutcome begin_job(const HookContext& ctx, const std::string& job_id, CounterArch arch,
                      int64_t now) {
    HookOutcome outcome;
    HookState st = HookState::load(ctx.state_path());

    Mark mark{MarkKind::begin, job_id, now, ""};
    const bool duplicate = st.is_active(job_id);
    if (duplicate) {
        mark.warning = "duplicate";
        ++outcome.warnings;
        outcome.notes.push_back("duplicate begin for job " + job_id);
    }

    const CounterEventSet chosen = counter_events(arch);
    if (st.pmc_events.empty()) {
        st.pmc_events = chosen.events;
        ++st.program_count; // the only point where the register file is written
    } else if (st.pmc_events != chosen.events) {
        ++outcome.warnings;
        outcome.notes.push_back("counter event set already programmed; not reprogramming");
    }

    auto writer = open_writer(ctx, now, outcome);
    outcome.file = writer->path();
    writer->mark(mark);
    std::string joined;
    for (size_t i = 0; i < chosen.events.size(); ++i) joined += (i ? "," : "") + chosen.events[i];
    writer->metadata("pmc_events", joined);

    if (!duplicate) st.active.push_back({job_id, arch, now});
    emit_burst(*writer, ctx, now, st.active_ids(), outcome);
    st.save(ctx.state_path());
    return outcome;
}

HookOutcome end_job(const HookContext& ctx, const std::string& job_id, int64_t now) {
    HookOutcome outcome;
    HookState st = HookState::load(ctx.state_path());

    Mark mark{MarkKind::end, job_id, now, ""};
    if (!st.is_active(job_id)) {
        mark.warning = "unmatched";
        ++outcome.warnings;
        outcome.notes.push_back("end without begin for job " + job_id);
    }

    auto writer = open_writer(ctx, now, outcome);
    outcome.file = writer->path();
    emit_burst(*writer, ctx, now, st.active_ids(), outcome); // final burst, job still tagged
    writer->mark(mark);

    std::erase_if(st.active, [&](const HookState::ActiveJob& j) { return j.job_id == job_id; });
    if (st.active.empty()) {
        // Last job gone: release the virtual register file for the next job.
        st.pmc_events.clear();
    }
    st.save(ctx.state_path());
    return outcome;
}

HookOutcome rotate(const HookContext& ctx, int64_t now) {
    HookOutcome outcome;
    for (int attempt = 0;; ++attempt) {
        try {
            if (auto latest = latest_stats_file(ctx.host_dir())) {
                // Marks carry their own timestamp line and are exempt from
                // group monotonicity, so a raw locked append suffices.
                int fd = ::open(latest->second.c_str(), O_WRONLY | O_APPEND);
                if (fd < 0) throw IoError("cannot open " + latest->second.string());
                ::flock(fd, LOCK_EX);
                std::string text = append_mark(Mark{MarkKind::rotate, "", now, ""});
                ssize_t n = ::write(fd, text.data(), text.size());
                ::close(fd);
                if (n != static_cast<ssize_t>(text.size())) {
                    throw IoError("short write to " + latest->second.string());
                }
            }
            const std::string stamp = day_stamp(now);
            fs::path fresh =
                ctx.host_dir() / day_file_name(stamp, next_suffix(ctx.host_dir(), stamp));
            RecordWriter writer(fresh, ctx.file_header());
            outcome.file = fresh;
            return outcome;
        } catch (const std::exception& e) {
            if (attempt >= 2) {
                std::cerr << "rotate failed: " << e.what() << "\n";
                ++outcome.warnings;
                outcome.notes.push_back(e.what());
                return outcome;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(50 << attempt));
        }
    }
}

HookOutcome collect_tick(const HookContext& ctx, int64_t now, CollectorStats& stats) {
    HookOutcome outcome;
    if (!ctx.sources) throw SourceError("collect tick without sources");
    HookState st = HookState::load(ctx.state_path());
    auto writer = open_writer(ctx, now, outcome);
    outcome.file = writer->path();
    RecordGroup g = collect_once(*ctx.sources, now, st.active_ids(), stats, ctx.source_timeout);
    if (g.timestamp <= writer->last_group_timestamp()) {
        ++outcome.warnings;
        outcome.notes.push_back("tick skipped: timestamp not past last group");
        return outcome;
    }
    writer->group(g);
    return outcome;
}

} // namespace jobmon
