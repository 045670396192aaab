#include <doctest.h>

#include <filesystem>

#include "jobmon/jobhooks.hpp"
#include "jobmon/pipeline.hpp"
#include "jobmon/poolgen.hpp"
#include "jobmon/util.hpp"
#include "treecmp.hpp"

using namespace jobmon;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path dir;
    explicit TempDir(const char* name) {
        dir = fs::temp_directory_path() / name;
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
};

SyntheticScenario three_day_scenario() {
    SyntheticScenario sc;
    sc.nodes = 2;
    sc.cores_per_node = 16;
    sc.sockets_per_node = 4;
    sc.interval = 600;
    const int64_t day = 1600041600;
    ScenarioJob j;
    j.job_id = "300001";
    j.owner = "alice";
    j.node_indices = {0, 1};
    j.wayness = 16;
    j.start = day + 3600;
    j.end = day + 2 * 86400 + 7200; // spans two midnights
    j.idle_pattern = 0.25;
    j.numa_skew = {0.25, 0.25, 0.25, 0.25};
    j.mem_used_fraction = 0.5;
    j.dram_bytes_per_sec = 1.6e9;
    sc.jobs.push_back(j);
    sc.validate();
    return sc;
}

} // namespace

TEST_CASE("daily rotation: one self-describing file per day") {
    TempDir t("jobmon-pipe-days");
    SyntheticScenario sc = three_day_scenario();
    SynthReport r = write_scenario_files(sc, t.dir / "stats", false);
    CHECK(r.nodes == 2);
    for (uint32_t n = 0; n < 2; ++n) {
        auto files = list_stats_files(t.dir / "stats" / sc.hostname(n));
        REQUIRE(files.size() == 3);
        for (const auto& f : files) {
            ParsedFile back = parse_stats_file(f, ParseMode::strict);
            CHECK(!back.header.schemas.empty()); // full header after every rotate
        }
        // the first two files end with a rotate mark
        for (size_t i = 0; i + 1 < files.size(); ++i) {
            ParsedFile day_file = parse_stats_file(files[i]);
            REQUIRE(!day_file.events.empty());
            const auto* m = std::get_if<Mark>(&day_file.events.back());
            REQUIRE(m != nullptr);
            CHECK(m->kind == MarkKind::rotate);
        }
    }
}

TEST_CASE("counters stay continuous across rotation during a job") {
    TempDir t("jobmon-pipe-cont");
    SyntheticScenario sc = three_day_scenario();
    write_scenario_files(sc, t.dir / "stats", true);
    atomic_write_file(t.dir / "acct.csv", scenario_accounting_csv(sc));

    JobStore store(t.dir / "store");
    PipelineOptions opts;
    opts.delta.nominal_tick = sc.interval;
    IngestReport ir = ingest_directory(t.dir / "stats", t.dir / "acct.csv", store, opts);
    CHECK(ir.files_scanned == 6);
    CHECK(ir.skipped_lines == 0);
    CHECK(ir.jobs_ingested == 1);

    auto entry = store.get("300001");
    REQUIRE(entry);
    const JobTimeline& tl = entry->timeline;
    REQUIRE(tl.nodes.size() == 2);
    CHECK(tl.coverage > 0.99);
    for (const auto& node : tl.nodes) {
        for (const auto& [key, series] : node.series) {
            for (const auto& p : series) {
                CHECK(p.quality != DeltaQuality::reset_dropped);
            }
        }
    }
    AnalyzeReport ar = analyze_store(store, opts);
    CHECK(ar.profiles == 1);
    auto profile = store.get("300001")->profile;
    REQUIRE(profile);
    CHECK(*profile->idle_fraction == doctest::Approx(0.25).epsilon(0.01));
    CHECK(*profile->mean_bandwidth_gbps == doctest::Approx(1.6).epsilon(0.02));
}

TEST_CASE("openmp and serial paths produce byte-identical artifacts") {
    TempDir t("jobmon-pipe-par");
    PoolSpec spec;
    spec.jobs = 40;
    spec.nodes = 4;
    spec.seed = 123;
    PoolPlan plan = make_pool(spec);
    atomic_write_file(t.dir / "acct.csv", scenario_accounting_csv(plan.scenario));

    PipelineOptions serial;
    serial.parallel = false;
    serial.production_queues = std::set<std::string>{"normal"};
    PipelineOptions parallel = serial;
    parallel.parallel = true;

    write_scenario_files(plan.scenario, t.dir / "stats-s", false);
    write_scenario_files(plan.scenario, t.dir / "stats-p", true);
    CHECK(testgen::trees_identical(t.dir / "stats-s", t.dir / "stats-p"));

    JobStore store_s(t.dir / "store-s"), store_p(t.dir / "store-p");
    ingest_directory(t.dir / "stats-s", t.dir / "acct.csv", store_s, serial);
    ingest_directory(t.dir / "stats-p", t.dir / "acct.csv", store_p, parallel);
    CHECK(testgen::trees_identical(t.dir / "store-s", t.dir / "store-p"));

    analyze_store(store_s, serial);
    analyze_store(store_p, parallel);
    CHECK(testgen::trees_identical(t.dir / "store-s", t.dir / "store-p"));

    ReportOptions ropts;
    write_reports(store_s, t.dir / "rep-s", ropts);
    write_reports(store_p, t.dir / "rep-p", ropts);
    CHECK(testgen::trees_identical(t.dir / "rep-s", t.dir / "rep-p"));
}

TEST_CASE("ingest and analyze are idempotent") {
    TempDir t("jobmon-pipe-idem");
    PoolSpec spec;
    spec.jobs = 20;
    spec.nodes = 3;
    PoolPlan plan = make_pool(spec);
    atomic_write_file(t.dir / "acct.csv", scenario_accounting_csv(plan.scenario));
    write_scenario_files(plan.scenario, t.dir / "stats", true);

    PipelineOptions opts;
    opts.production_queues = std::set<std::string>{"normal"};
    JobStore store(t.dir / "store");
    ingest_directory(t.dir / "stats", t.dir / "acct.csv", store, opts);
    analyze_store(store, opts);
    auto first = testgen::tree_contents(t.dir / "store");
    ingest_directory(t.dir / "stats", t.dir / "acct.csv", store, opts);
    analyze_store(store, opts);
    CHECK(testgen::tree_contents(t.dir / "store") == first);
}

TEST_CASE("validate_directory counts groups, marks, and skips") {
    TempDir t("jobmon-pipe-val");
    SyntheticScenario sc = three_day_scenario();
    write_scenario_files(sc, t.dir / "stats", true);
    ValidateReport ok = validate_directory(t.dir / "stats", ParseMode::lenient, true);
    CHECK(ok.files == 6);
    CHECK(ok.groups > 0);
    CHECK(ok.marks >= 6); // 2 nodes x (begin + end) + rotates
    CHECK(ok.skipped_lines == 0);

    // torn write: the last line loses its final value
    auto files = list_stats_files(t.dir / "stats" / "n000");
    std::string text = read_file(files[0]);
    atomic_write_file(files[0], text.substr(0, text.rfind(' ')) + "\n");
    ValidateReport lenient = validate_directory(t.dir / "stats", ParseMode::lenient, true);
    CHECK(lenient.skipped_lines == 1);
    CHECK_THROWS_AS(validate_directory(t.dir / "stats", ParseMode::strict, true), FormatError);
}

TEST_CASE("missing node directories surface as missing nodes") {
    TempDir t("jobmon-pipe-miss");
    SyntheticScenario sc = three_day_scenario();
    write_scenario_files(sc, t.dir / "stats", true);
    fs::remove_all(t.dir / "stats" / "n001");
    atomic_write_file(t.dir / "acct.csv", scenario_accounting_csv(sc));
    JobStore store(t.dir / "store");
    PipelineOptions opts;
    IngestReport ir = ingest_directory(t.dir / "stats", t.dir / "acct.csv", store, opts);
    CHECK(ir.jobs_with_missing_nodes == 1);
    auto entry = store.get("300001");
    REQUIRE(entry);
    CHECK(entry->timeline.missing_nodes == std::vector<std::string>{"n001"});
    CHECK(entry->timeline.coverage == doctest::Approx(0.5).epsilon(0.01));
}
