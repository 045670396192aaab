#include <doctest.h>

#include <filesystem>

#include "jobmon/jobhooks.hpp"
#include "jobmon/synth.hpp"
#include "jobmon/util.hpp"

using namespace jobmon;
namespace fs = std::filesystem;

namespace {

struct HookRig {
    fs::path dir;
    SyntheticScenario scenario;
    std::vector<std::unique_ptr<Source>> sources;
    HookContext ctx;

    explicit HookRig(const char* name, CounterArch arch = CounterArch::synthetic) {
        dir = fs::temp_directory_path() / name;
        fs::remove_all(dir);
        scenario.nodes = 1;
        scenario.cores_per_node = 16;
        scenario.sockets_per_node = 4;
        scenario.t0 = 1600041600;
        scenario.t1 = scenario.t0 + 3 * 86400;
        scenario.validate();

        SourceOptions opts;
        opts.proc_root = "/nonexistent";
        opts.sys_root = "/nonexistent";
        opts.scenario = &scenario;
        opts.pmc_events = counter_events(arch).events;
        sources = build_sources(opts);

        ctx.stats_dir = dir;
        ctx.hostname = "n000";
        ctx.cores = 16;
        ctx.sockets = 4;
        ctx.mem_total_kb = scenario.mem_total_kb;
        ctx.sources = &sources;
    }
    ~HookRig() { fs::remove_all(dir); }
};

std::vector<std::string> mark_lines(const fs::path& file) {
    std::vector<std::string> out;
    for (auto line : split(read_file(file), '\n')) {
        if (!line.empty() && (line[0] == '%' || line[0] == '$')) out.emplace_back(line);
    }
    return out;
}

} // namespace

TEST_CASE("begin_job records the architecture event set") {
    const int64_t t = 1600041600 + 600;
    SUBCASE("opteron") {
        HookRig rig("jobmon-hooks-opt", CounterArch::opteron);
        auto outcome = begin_job(rig.ctx, "271828", CounterArch::opteron, t);
        CHECK(outcome.warnings == 0);
        std::string text = read_file(outcome.file);
        CHECK(text.find("%begin 271828\n") != std::string::npos);
        CHECK(text.find("$pmc_events flops,mem_access,dcache_fill,numa_traffic\n") !=
              std::string::npos);
        CHECK(text.find("!pmc flops:c:ev mem_access:c:ev dcache_fill:c:ev numa_traffic:c:ev\n") !=
              std::string::npos);
    }
    SUBCASE("nehalem_westmere") {
        HookRig rig("jobmon-hooks-nhm", CounterArch::nehalem_westmere);
        auto outcome = begin_job(rig.ctx, "271828", CounterArch::nehalem_westmere, t);
        std::string text = read_file(outcome.file);
        CHECK(text.find("$pmc_events flops,numa_traffic,l1d_hits\n") != std::string::npos);
    }
}

TEST_CASE("duplicate begin is a warning mark, file still parses") {
    HookRig rig("jobmon-hooks-dup");
    const int64_t t = 1600041600 + 600;
    CHECK(begin_job(rig.ctx, "271828", CounterArch::synthetic, t).warnings == 0);
    auto second = begin_job(rig.ctx, "271828", CounterArch::synthetic, t + 60);
    CHECK(second.warnings >= 1);
    std::string text = read_file(second.file);
    CHECK(text.find("%begin 271828 duplicate\n") != std::string::npos);
    ParsedFile back = parse_stats_file(second.file);
    CHECK(back.report.skipped_lines == 0);
}

TEST_CASE("end without begin warns but still marks") {
    HookRig rig("jobmon-hooks-unmatched");
    auto outcome = end_job(rig.ctx, "999999", 1600041600 + 600);
    CHECK(outcome.warnings == 1);
    std::string text = read_file(outcome.file);
    CHECK(text.find("%end 999999 unmatched\n") != std::string::npos);
}

TEST_CASE("begin, ticks, end: ordering and read-only counters") {
    HookRig rig("jobmon-hooks-order");
    const int64_t t0 = 1600041600 + 600;
    begin_job(rig.ctx, "271828", CounterArch::synthetic, t0);
    CHECK(HookState::load(rig.ctx.state_path()).program_count == 1);

    CollectorStats stats;
    for (int i = 1; i <= 3; ++i) collect_tick(rig.ctx, t0 + 600 * i, stats);
    // programming happened exactly once, at begin
    CHECK(HookState::load(rig.ctx.state_path()).program_count == 1);

    auto outcome = end_job(rig.ctx, "271828", t0 + 600 * 3 + 300);
    CHECK(HookState::load(rig.ctx.state_path()).program_count == 1);

    ParsedFile back = parse_stats_file(outcome.file);
    // begin mark precedes the final group, which precedes the end mark
    int begin_at = -1, end_at = -1, last_group_at = -1;
    for (size_t i = 0; i < back.events.size(); ++i) {
        if (const auto* m = std::get_if<Mark>(&back.events[i])) {
            if (m->kind == MarkKind::begin) begin_at = static_cast<int>(i);
            if (m->kind == MarkKind::end) end_at = static_cast<int>(i);
        } else if (end_at < 0) {
            last_group_at = static_cast<int>(i);
        }
    }
    CHECK(begin_at >= 0);
    CHECK(end_at >= 0);
    CHECK(begin_at < last_group_at);
    CHECK(last_group_at < end_at);
    CHECK(last_group_at == end_at - 1);
}

TEST_CASE("overlapping jobs tag groups with the full active set") {
    HookRig rig("jobmon-hooks-overlap");
    const int64_t t0 = 1600041600 + 600;
    begin_job(rig.ctx, "aaa", CounterArch::synthetic, t0);
    begin_job(rig.ctx, "bbb", CounterArch::synthetic, t0 + 60);
    CollectorStats stats;
    auto tick = collect_tick(rig.ctx, t0 + 600, stats);
    end_job(rig.ctx, "aaa", t0 + 700);
    end_job(rig.ctx, "bbb", t0 + 800);

    ParsedFile back = parse_stats_file(tick.file);
    bool both = false;
    for (const auto& e : back.events) {
        if (const auto* g = std::get_if<RecordGroup>(&e)) {
            if (g->job_ids == std::vector<std::string>{"aaa", "bbb"}) both = true;
        }
    }
    CHECK(both);
}

TEST_CASE("conflicting arch on an already-programmed node never reprograms") {
    HookRig rig("jobmon-hooks-conflict");
    const int64_t t0 = 1600041600 + 600;
    begin_job(rig.ctx, "aaa", CounterArch::synthetic, t0);
    auto outcome = begin_job(rig.ctx, "bbb", CounterArch::opteron, t0 + 60);
    CHECK(outcome.warnings >= 1);
    HookState st = HookState::load(rig.ctx.state_path());
    CHECK(st.program_count == 1);
    CHECK(st.pmc_events == counter_events(CounterArch::synthetic).events);
}

TEST_CASE("rotate mid-job keeps active tags in the fresh file") {
    HookRig rig("jobmon-hooks-rotate");
    const int64_t t0 = 1600041600 + 600;
    begin_job(rig.ctx, "271828", CounterArch::synthetic, t0);
    auto rotated = rotate(rig.ctx, t0 + 900);
    CollectorStats stats;
    auto tick = collect_tick(rig.ctx, t0 + 1200, stats);
    CHECK(tick.file == rotated.file);

    ParsedFile fresh = parse_stats_file(rotated.file);
    bool tagged = false;
    for (const auto& e : fresh.events) {
        if (const auto* g = std::get_if<RecordGroup>(&e)) {
            if (!g->job_ids.empty() && g->job_ids[0] == "271828") tagged = true;
        }
    }
    CHECK(tagged);

    // the old file carries the rotate mark
    auto files = list_stats_files(rig.ctx.host_dir());
    REQUIRE(files.size() == 2);
    ParsedFile old = parse_stats_file(files[0]);
    bool has_rotate = false;
    for (const auto& e : old.events) {
        if (const auto* m = std::get_if<Mark>(&e)) {
            if (m->kind == MarkKind::rotate) has_rotate = true;
        }
    }
    CHECK(has_rotate);
}

TEST_CASE("two rotates with no data between leave an empty headered file") {
    HookRig rig("jobmon-hooks-rr");
    const int64_t t0 = 1600041600 + 600;
    rotate(rig.ctx, t0);
    rotate(rig.ctx, t0 + 10);
    auto files = list_stats_files(rig.ctx.host_dir());
    REQUIRE(files.size() == 2);
    ParsedFile second = parse_stats_file(files[1]);
    CHECK(second.events.empty());
    CHECK(second.header.hostname == "n000");
    CHECK(!second.header.schemas.empty());
}

TEST_CASE("collect on a new day opens the new day file") {
    HookRig rig("jobmon-hooks-days");
    CollectorStats stats;
    auto day1 = collect_tick(rig.ctx, 1600041600 + 600, stats);
    auto day2 = collect_tick(rig.ctx, 1600041600 + 86400 + 600, stats);
    CHECK(day1.file != day2.file);
    CHECK(list_stats_files(rig.ctx.host_dir()).size() == 2);
}
