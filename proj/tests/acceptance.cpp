// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "gen.hpp"
#include "jobmon/jobhooks.hpp"
#include "jobmon/metrics.hpp"
#include "jobmon/pipeline.hpp"
#include "jobmon/poolgen.hpp"
#include "jobmon/util.hpp"
#include "oracles.hpp"
#include "treecmp.hpp"

using namespace jobmon;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int n, const char* name, bool pass, const std::string& detail) {
    std::printf("%s  %d %-28s %s\n", pass ? "PASS" : "FAIL", n, name, detail.c_str());
    if (!pass) ++g_failures;
}

double since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

fs::path fresh_dir(const char* name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool rel_close(std::optional<double> a, std::optional<double> b, double rel) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    const double scale = std::max({std::abs(*a), std::abs(*b), 1e-12});
    return std::abs(*a - *b) / scale <= rel;
}

// ---------------------------------------------------------------------------
// criterion 1: format round trip

void criterion_format_round_trip() {
    auto t0 = clock_type::now();
    std::mt19937_64 rng(0xace);
    size_t skips = 0, mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        testgen::GeneratedFile f = testgen::random_stats_file(rng);
        ParsedFile back = parse_file_text(f.text);
        skips += back.report.skipped_lines;
        if (!(back.header == f.header) || !(back.events == f.events)) ++mismatches;
    }
    const double secs = since(t0);
    char detail[128];
    std::snprintf(detail, sizeof(detail), "1000 files, %zu mismatches, %zu skips, %.2fs",
                  mismatches, skips, secs);
    report(1, "format-round-trip", mismatches == 0 && skips == 0 && secs < 10.0, detail);
}

// ---------------------------------------------------------------------------
// criterion 2: stripe law end-to-end through collect -> ingest -> analyze

SyntheticScenario stripe_scenario(uint32_t wayness) {
    SyntheticScenario sc;
    sc.nodes = 1;
    sc.cores_per_node = 16;
    sc.sockets_per_node = 4;
    sc.interval = 600;
    ScenarioJob j;
    j.job_id = "stripe" + std::to_string(wayness);
    j.owner = "alice";
    j.node_indices = {0};
    j.wayness = wayness;
    j.start = 1600041600 + 3600;
    j.end = j.start + 7200;
    j.idle_pattern = 0.0; // fully busy processes
    j.numa_skew = {0.25, 0.25, 0.25, 0.25};
    j.mem_used_fraction = 0.25;
    j.dram_bytes_per_sec = 1e9;
    sc.jobs.push_back(j);
    sc.validate();
    return sc;
}

/// Drives the actual collector path: prolog hook, periodic ticks, epilog.
void collect_via_hooks(const SyntheticScenario& sc, const fs::path& stats_dir) {
    for (uint32_t node = 0; node < sc.nodes; ++node) {
        SourceOptions opts;
        opts.proc_root = "/nonexistent";
        opts.sys_root = "/nonexistent";
        opts.scenario = &sc;
        opts.scenario_node = node;
        auto sources = build_sources(opts);

        HookContext ctx;
        ctx.stats_dir = stats_dir;
        ctx.hostname = sc.hostname(node);
        ctx.cores = sc.cores_per_node;
        ctx.sockets = sc.sockets_per_node;
        ctx.mem_total_kb = sc.mem_total_kb;
        ctx.interval = sc.interval;
        ctx.sources = &sources;

        struct Ev {
            int64_t t;
            int rank; // 1 end, 2 begin, 3 tick
            const ScenarioJob* job;
        };
        std::vector<Ev> events;
        const auto [w0, w1] = sc.window();
        for (const auto& j : sc.jobs) {
            if (std::find(j.node_indices.begin(), j.node_indices.end(), node) ==
                j.node_indices.end()) {
                continue;
            }
            events.push_back({j.end, 1, &j});
            events.push_back({j.start, 2, &j});
        }
        for (int64_t t = w0; t <= w1; t += sc.interval) events.push_back({t, 3, nullptr});
        std::sort(events.begin(), events.end(), [](const Ev& a, const Ev& b) {
            return std::tie(a.t, a.rank) < std::tie(b.t, b.rank);
        });
        CollectorStats stats;
        for (const Ev& e : events) {
            if (e.rank == 2) begin_job(ctx, e.job->job_id, CounterArch::synthetic, e.t);
            else if (e.rank == 1) end_job(ctx, e.job->job_id, e.t);
            else collect_tick(ctx, e.t, stats);
        }
    }
}

void criterion_stripe_law() {
    bool pass = true;
    std::string detail;
    for (uint32_t w : {8u, 4u, 2u, 1u}) {
        SyntheticScenario sc = stripe_scenario(w);
        fs::path dir = fresh_dir("jobmon-acc-stripe");
        collect_via_hooks(sc, dir / "stats");
        atomic_write_file(dir / "acct.csv", scenario_accounting_csv(sc));
        JobStore store(dir / "store");
        PipelineOptions opts;
        opts.delta.nominal_tick = sc.interval;
        ingest_directory(dir / "stats", dir / "acct.csv", store, opts);
        analyze_store(store, opts);
        auto entry = store.get(sc.jobs[0].job_id);
        const double expected = 1.0 - w / 16.0;
        double got = -1;
        if (entry && entry->profile && entry->profile->idle_fraction) {
            got = *entry->profile->idle_fraction;
        }
        if (!close(got, expected, 0.01)) pass = false;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "w=%u:%.4f ", w, got);
        detail += buf;
        fs::remove_all(dir);
    }
    report(2, "stripe-law", pass, detail + "(expect .5 .75 .875 .9375 +-0.01)");
}

// ---------------------------------------------------------------------------
// criterion 3: cov oracle

void criterion_cov_oracle() {
    bool pass = true;
    const double x = 987654.0;
    std::vector<double> one_hot = {x, 0, 0, 0};
    pass = pass && close(population_cov(one_hot), std::sqrt(3.0), 1e-6);
    std::vector<double> two = {2 * x, 2 * x, 0, 0};
    pass = pass && close(population_cov(two), 1.0, 1e-6);
    std::vector<double> equal = {x, x, x, x};
    pass = pass && population_cov(equal) == 0.0;
    std::mt19937_64 rng(33);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        std::vector<double> v = {double(rng() % 1000000), double(rng() % 1000000),
                                 double(rng() % 1000000), double(rng() % 1000000)};
        const double base = population_cov(v);
        for (double k : {1e-3, 1.0, 1e6}) {
            std::vector<double> s;
            for (double e : v) s.push_back(e * k);
            worst = std::max(worst, std::abs(population_cov(s) - base));
        }
    }
    pass = pass && worst <= 1e-12;
    char detail[96];
    std::snprintf(detail, sizeof(detail), "sqrt3=%.9f, scale drift %.2e", population_cov(one_hot),
                  worst);
    report(3, "cov-oracle", pass, detail);
}

// ---------------------------------------------------------------------------
// criteria 4, 6, 9: planted pool recovery, aggregate idle, idempotence

void criteria_pool(const fs::path& dir) {
    auto t0 = clock_type::now();
    PoolSpec spec; // 8 nodes, 200 jobs, 12 waste + 9 imbalance planted
    PoolPlan plan = make_pool(spec);
    write_scenario_files(plan.scenario, dir / "stats", true);
    atomic_write_file(dir / "acct.csv", scenario_accounting_csv(plan.scenario));

    PipelineOptions opts;
    opts.delta.nominal_tick = plan.scenario.interval;
    opts.production_queues = std::set<std::string>{"normal"};
    JobStore store(dir / "store");
    IngestReport ir = ingest_directory(dir / "stats", dir / "acct.csv", store, opts);
    analyze_store(store, opts);
    ReportOptions ropts;
    ReportFiles reports = write_reports(store, dir / "reports", ropts);
    const double secs = since(t0);

    const bool waste_ok = reports.waste.flagged == plan.waste_set;
    const bool imb_ok = reports.imbalance.flagged == plan.imbalance_set;
    const bool filter_ok =
        ir.jobs_after_filter == spec.jobs - plan.filtered_out.size();
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "waste %zu/%zu, imbalance %zu/%zu, filtered out %zu, %.1fs",
                  reports.waste.flagged.size(), plan.waste_set.size(),
                  reports.imbalance.flagged.size(), plan.imbalance_set.size(),
                  plan.filtered_out.size(), secs);
    report(4, "planted-anomaly-recovery", waste_ok && imb_ok && filter_ok && secs < 60.0, detail);

    // criterion 6 on the same pool
    std::vector<JobProfile> profiles;
    store.scan_profiles([&](JobProfile&& p) { profiles.push_back(std::move(p)); });
    auto pool_idle = aggregate_idle(profiles);
    const bool idle_ok = pool_idle && close(*pool_idle, plan.pool_idle_fraction, 0.01);
    std::snprintf(detail, sizeof(detail), "measured %.4f vs closed form %.4f",
                  pool_idle.value_or(-1), plan.pool_idle_fraction);
    report(6, "aggregate-idle", idle_ok, detail);

    // criterion 9: byte-identical re-runs
    auto store_before = testgen::tree_contents(dir / "store");
    auto reports_before = testgen::tree_contents(dir / "reports");
    ingest_directory(dir / "stats", dir / "acct.csv", store, opts);
    analyze_store(store, opts);
    write_reports(store, dir / "reports", ropts);
    const bool idem = testgen::tree_contents(dir / "store") == store_before &&
                      testgen::tree_contents(dir / "reports") == reports_before;
    report(9, "idempotent-reruns", idem, idem ? "store and reports byte-identical" : "drift");
}

// ---------------------------------------------------------------------------
// criterion 5: wrap and reset handling

void criterion_wrap_reset() {
    std::mt19937_64 rng(0xbeef);
    TypeSchema schema{"c", {{"v", FieldKind::counter, Unit::ev}}};
    DeltaOptions opts;
    opts.nominal_tick = 600;

    bool totals_ok = true, wraps_seen = false;
    for (int run = 0; run < 50; ++run) {
        uint64_t value = UINT64_MAX - rng() % (1ull << 44);
        unsigned __int128 truth = 0;
        std::vector<RawPoint> pts{{0, 0, {value}}};
        int64_t t = 0;
        for (int i = 0; i < 400; ++i) {
            const uint64_t inc = rng() % (1ull << 41);
            truth += inc;
            value += inc;
            t += 600;
            pts.push_back({t, 0, {value}});
        }
        unsigned __int128 got = 0;
        for (const auto& p : delta_series(schema, pts, opts)) {
            if (p.quality == DeltaQuality::reset_dropped) { totals_ok = false; continue; }
            if (p.quality == DeltaQuality::wrapped) wraps_seen = true;
            got += p.values[0];
        }
        if (got != truth) totals_ok = false;
    }

    // planted resets: drops to small values mid-stream
    bool resets_ok = true;
    uint64_t expected_sum = 0;
    std::vector<RawPoint> pts{{0, 0, {1000000}}};
    uint64_t value = 1000000;
    int64_t t = 0;
    size_t resets_planted = 0;
    for (int i = 0; i < 100; ++i) {
        t += 600;
        if (i % 17 == 9) {
            value = rng() % 1000; // device reset
            ++resets_planted;
        } else {
            const uint64_t inc = rng() % 100000;
            value += inc;
            expected_sum += inc;
        }
        pts.push_back({t, 0, {value}});
    }
    size_t resets_found = 0;
    uint64_t kept = 0;
    for (const auto& p : delta_series(schema, pts, opts)) {
        if (p.quality == DeltaQuality::reset_dropped) {
            ++resets_found;
            if (p.values[0] != 0) resets_ok = false; // nothing negative, nothing huge
        } else {
            kept += p.values[0];
        }
    }
    resets_ok = resets_ok && resets_found == resets_planted && kept == expected_sum;
    char detail[128];
    std::snprintf(detail, sizeof(detail), "50 wrap streams exact, %zu resets dropped",
                  resets_found);
    report(5, "wrap-and-reset", totals_ok && wraps_seen && resets_ok, detail);
}

// ---------------------------------------------------------------------------
// criterion 7: raw data volume budget

void criterion_data_volume() {
    SyntheticScenario sc;
    sc.nodes = 1;
    sc.cores_per_node = 16;
    sc.sockets_per_node = 4;
    sc.interval = 600;
    sc.t0 = 1600041600;
    sc.t1 = sc.t0 + 86400; // one simulated day
    ScenarioJob j;
    j.job_id = "dayjob";
    j.owner = "alice";
    j.node_indices = {0};
    j.wayness = 16;
    j.start = sc.t0 + 4 * 3600;
    j.end = sc.t0 + 20 * 3600;
    j.numa_skew = {0.25, 0.25, 0.25, 0.25};
    j.mem_used_fraction = 0.6;
    j.dram_bytes_per_sec = 3e9;
    sc.jobs.push_back(j);
    sc.validate();

    fs::path dir = fresh_dir("jobmon-acc-volume");
    SynthReport r = write_scenario_files(sc, dir / "stats", false);
    const double mb = static_cast<double>(r.bytes) / 1e6;
    char detail[96];
    std::snprintf(detail, sizeof(detail), "%.3f MB per node-day (budget 1.0)", mb);
    report(7, "data-volume", mb <= 1.0 && r.bytes > 0, detail);
    fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// criterion 8: metric equals brute force on small random timelines

void criterion_brute_force() {
    std::mt19937_64 rng(0x5eed);
    bool pass = true;
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        SyntheticScenario sc;
        sc.seed = rng();
        sc.nodes = 1 + rng() % 3;
        sc.cores_per_node = 16;
        sc.sockets_per_node = 4;
        sc.interval = 600;
        ScenarioJob j;
        j.job_id = "rnd" + std::to_string(trial);
        j.owner = "u";
        for (uint32_t n = 0; n < sc.nodes; ++n) j.node_indices.push_back(n);
        j.wayness = 1 + rng() % 16;
        j.start = 1600041600 + 1800;
        j.end = j.start + 600 * (3 + static_cast<int64_t>(rng() % 8)); // <= 10 ticks
        j.idle_pattern = (rng() % 90) / 100.0;
        double w0 = 1 + rng() % 100, w1 = 1 + rng() % 100, w2 = 1 + rng() % 100,
               w3 = 1 + rng() % 100;
        const double ws = w0 + w1 + w2 + w3;
        j.numa_skew = {w0 / ws, w1 / ws, w2 / ws, w3 / ws};
        j.mem_used_fraction = (rng() % 100) / 100.0;
        j.dram_bytes_per_sec = (rng() % 50) * 1e8;
        sc.jobs.push_back(j);
        sc.validate();

        fs::path dir = fresh_dir("jobmon-acc-brute");
        write_scenario_files(sc, dir / "stats", false);

        AccountingRecord job;
        job.job_id = j.job_id;
        job.owner = j.owner;
        job.queue = j.queue;
        job.nodes = static_cast<uint32_t>(j.node_indices.size());
        job.wayness = j.wayness;
        job.start = j.start;
        job.end = j.end;
        for (uint32_t n : j.node_indices) job.node_list.push_back(sc.hostname(n));

        std::map<std::string, std::vector<ParsedFile>> parsed;
        std::map<std::string, std::vector<const ParsedFile*>> views;
        for (const auto& host : job.node_list) {
            for (const auto& f : list_stats_files(dir / "stats" / host)) {
                parsed[host].push_back(parse_stats_file(f));
            }
            for (const auto& p : parsed[host]) views[host].push_back(&p);
        }
        DeltaOptions dopts;
        dopts.nominal_tick = sc.interval;
        JobProfile got = profile_job(assemble_job(job, views, dopts));
        oracle::Metrics want = oracle::brute_force(job, parsed, sc.interval);

        auto check = [&](std::optional<double> a, std::optional<double> b) {
            if (!rel_close(a, b, 1e-9)) pass = false;
            if (a && b) worst = std::max(worst, std::abs(*a - *b));
        };
        check(got.idle_fraction, want.idle_fraction);
        check(got.unused_mem_fraction, want.unused_mem_fraction);
        check(got.waste, want.waste);
        check(got.mean_bandwidth_gbps, want.bandwidth_gbps);
        check(got.numa_cov, want.numa_cov);
        if (!rel_close(got.core_seconds, want.core_seconds, 1e-9)) pass = false;
        fs::remove_all(dir);
    }
    char detail[96];
    std::snprintf(detail, sizeof(detail), "20 timelines, worst abs drift %.2e", worst);
    report(8, "metric-brute-force", pass, detail);
}

} // namespace

int main() {
    std::printf("acceptance criteria\n");
    criterion_format_round_trip();
    criterion_stripe_law();
    criterion_cov_oracle();
    fs::path pool_dir = fresh_dir("jobmon-acc-pool");
    criteria_pool(pool_dir);
    fs::remove_all(pool_dir);
    criterion_wrap_reset();
    criterion_data_volume();
    criterion_brute_force();
    if (g_failures) std::printf("%d criterion(s) failed\n", g_failures);
    else std::printf("all criteria passed\n");
    return g_failures == 0 ? 0 : 1;
}
