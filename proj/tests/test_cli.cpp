// End-to-end checks of the command line surface, run as subprocesses.

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "jobmon/synth.hpp"
#include "jobmon/util.hpp"

using namespace jobmon;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int status{0};
    std::string output; // stdout + stderr
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(JOBMON_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    while (size_t n = fread(buf, 1, sizeof(buf), pipe)) r.output.append(buf, n);
    int rc = pclose(pipe);
    r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return r;
}

struct TempDir {
    fs::path dir;
    explicit TempDir(const char* name) {
        dir = fs::temp_directory_path() / name;
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string operator/(const char* sub) const { return (dir / sub).string(); }
};

void write_demo_scenario(const fs::path& path) {
    SyntheticScenario sc;
    sc.seed = 5;
    sc.nodes = 2;
    sc.cores_per_node = 16;
    sc.sockets_per_node = 4;
    ScenarioJob j;
    j.job_id = "400001";
    j.owner = "alice";
    j.node_indices = {0, 1};
    j.wayness = 16;
    j.start = 1600045200;
    j.end = 1600045200 + 2 * 3600;
    j.idle_pattern = 0.0;
    j.numa_skew = {1.0, 0.0, 0.0, 0.0};
    j.mem_used_fraction = 0.05;
    j.dram_bytes_per_sec = 2e9;
    sc.jobs.push_back(j);
    ScenarioJob k = j;
    k.job_id = "400002";
    k.owner = "bob";
    k.node_indices = {0};
    k.wayness = 2;
    k.start = j.end + 1200;
    k.end = k.start + 2 * 3600;
    k.idle_pattern = 0.8;
    k.numa_skew = {0.25, 0.25, 0.25, 0.25};
    k.mem_used_fraction = 0.02;
    k.dram_bytes_per_sec = 1e8;
    sc.jobs.push_back(k);
    sc.validate();
    atomic_write_file(path, scenario_to_text(sc));
}

} // namespace

TEST_CASE("unknown subcommand exits with usage") {
    RunResult r = run("frobnicate");
    CHECK(r.status == 1);
    RunResult help = run("--help");
    CHECK(help.status == 0);
    CHECK(help.output.find("collect") != std::string::npos);
}

TEST_CASE("synth, ingest, analyze, report compose end to end") {
    TempDir t("jobmon-cli-e2e");
    write_demo_scenario(t.dir / "demo.cfg");
    RunResult synth = run("synth --scenario " + (t / "demo.cfg") + " --stats-dir " + (t / "stats") +
                          " --accounting " + (t / "acct.csv"));
    CHECK(synth.status == 0);

    RunResult ingest = run("ingest --stats-dir " + (t / "stats") + " --accounting " +
                           (t / "acct.csv") + " --store " + (t / "store"));
    CHECK(ingest.status == 0);
    CHECK(ingest.output.find("jobs_ingested 2") != std::string::npos);

    RunResult analyze = run("analyze --store " + (t / "store"));
    CHECK(analyze.status == 0);
    CHECK(analyze.output.find("profiles 2") != std::string::npos);

    RunResult report = run("report --store " + (t / "store") + " --out " + (t / "reports") +
                           " --format kv --svg");
    CHECK(report.status == 0);
    CHECK(report.output.find("waste_flagged 1") != std::string::npos);    // the 2-way idle job
    CHECK(report.output.find("imbalance_flagged 1") != std::string::npos); // the skewed 16-way job
    CHECK(fs::exists(t.dir / "reports" / "waste_flags.csv"));
    CHECK(fs::exists(t.dir / "reports" / "scatter_bw_cov.svg"));
    std::string flags = read_file(t.dir / "reports" / "imbalance_flags.csv");
    CHECK(flags.find("400001") != std::string::npos);
}

TEST_CASE("validate distinguishes lenient and strict on a truncated file") {
    TempDir t("jobmon-cli-val");
    write_demo_scenario(t.dir / "demo.cfg");
    REQUIRE(run("synth --scenario " + (t / "demo.cfg") + " --stats-dir " + (t / "stats")).status ==
            0);
    // torn write: the last line loses its final value
    fs::path victim = t.dir / "stats" / "n000";
    fs::path file;
    for (const auto& e : fs::directory_iterator(victim)) file = e.path();
    std::string text = read_file(file);
    atomic_write_file(file, text.substr(0, text.rfind(' ')) + "\n");

    RunResult lenient = run("validate --stats-dir " + (t / "stats"));
    CHECK(lenient.status == 0);
    CHECK(lenient.output.find("skipped_lines 1") != std::string::npos);

    RunResult strict = run("validate --stats-dir " + (t / "stats") + " --strict");
    CHECK(strict.status == 3);
}

TEST_CASE("hook subcommands never fail a job launch") {
    TempDir t("jobmon-cli-hooks");
    const std::string base = "--stats-dir " + (t / "stats") + " --hostname n000 ";
    RunResult begin = run("begin-job 271828 " + base + "--arch opteron --now 1600045200");
    CHECK(begin.status == 0);
    // duplicate begin and unmatched end are warnings, exit 0
    CHECK(run("begin-job 271828 " + base + "--arch opteron --now 1600045260").status == 0);
    CHECK(run("end-job other " + base + "--now 1600045320").status == 0);
    RunResult tick = run("collect " + base + "--arch opteron --now 1600045800");
    CHECK(tick.status == 0);
    CHECK(run("end-job 271828 " + base + "--now 1600046400").status == 0);
    RunResult rot = run("rotate " + base + "--now 1600046500");
    CHECK(rot.status == 0);

    // the day files record the opteron event set
    std::string days;
    for (const auto& e : fs::directory_iterator(t.dir / "stats" / "n000")) {
        if (e.path().extension() == ".stats") days += read_file(e.path());
    }
    CHECK(days.find("$pmc_events flops,mem_access,dcache_fill,numa_traffic") != std::string::npos);
    CHECK(days.find("$interval 600") != std::string::npos);
}

TEST_CASE("collect honors the stats dir env var and records the interval") {
    TempDir t("jobmon-cli-env");
    setenv("JOBMON_STATS_DIR", (t / "envstats").c_str(), 1);
    RunResult tick = run("collect --hostname n000 --now 1600045800");
    unsetenv("JOBMON_STATS_DIR");
    CHECK(tick.status == 0);
    bool found = false;
    for (const auto& e : fs::recursive_directory_iterator(t.dir / "envstats")) {
        if (e.path().extension() == ".stats") {
            std::string text = read_file(e.path());
            CHECK(text.find("$interval 600") != std::string::npos);
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("ingest --strict exits 3 on malformed data") {
    TempDir t("jobmon-cli-strict");
    write_demo_scenario(t.dir / "demo.cfg");
    REQUIRE(run("synth --scenario " + (t / "demo.cfg") + " --stats-dir " + (t / "stats") +
                " --accounting " + (t / "acct.csv"))
                .status == 0);
    fs::path victim;
    for (const auto& e : fs::directory_iterator(t.dir / "stats" / "n001")) victim = e.path();
    atomic_write_file(victim, read_file(victim) + "cpu 0 999\n");
    RunResult strict = run("ingest --strict --stats-dir " + (t / "stats") + " --accounting " +
                           (t / "acct.csv") + " --store " + (t / "store"));
    CHECK(strict.status == 3);
}
