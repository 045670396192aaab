#include <doctest.h>

#include <chrono>
#include <filesystem>

#include "jobmon/store.hpp"
#include "jobmon/util.hpp"

using namespace jobmon;
namespace fs = std::filesystem;

namespace {

JobTimeline tiny_timeline(const std::string& id, int64_t start = 1000, int64_t end = 8200) {
    JobTimeline tl;
    tl.job.job_id = id;
    tl.job.owner = "alice";
    tl.job.queue = "normal";
    tl.job.nodes = 1;
    tl.job.wayness = 16;
    tl.job.start = start;
    tl.job.end = end;
    tl.job.node_list = {"n001"};
    tl.coverage = 0.5;
    NodeTimeline nt;
    nt.hostname = "n001";
    nt.cores = 16;
    nt.sockets = 4;
    nt.mem_total_kb = 1 << 20;
    TypeSchema c{"c1", {{"a", FieldKind::counter, Unit::ev}}};
    nt.schemas.emplace("c1", c);
    nt.series[{"c1", 0}] = {DeltaPoint{start, start + 600, {42}, DeltaQuality::ok},
                            DeltaPoint{start + 600, start + 1200, {7}, DeltaQuality::wrapped}};
    TypeSchema g{"g1", {{"level", FieldKind::gauge, Unit::kb}}};
    nt.schemas.emplace("g1", g);
    nt.gauges[{"g1", 0}] = {GaugeSnapshot{start, {11}}, GaugeSnapshot{start + 600, {22}}};
    nt.coverage = 0.5;
    tl.nodes.push_back(std::move(nt));
    tl.missing_nodes = {};
    return tl;
}

struct TempStore {
    fs::path dir;
    explicit TempStore(const char* name) {
        dir = fs::temp_directory_path() / name;
        fs::remove_all(dir);
    }
    ~TempStore() { fs::remove_all(dir); }
};

} // namespace

TEST_CASE("entry serialization round-trips timeline and profile") {
    JobTimeline tl = tiny_timeline("j0001");
    JobProfile p;
    p.job_id = "j0001";
    p.owner = "alice";
    p.queue = "normal";
    p.nodes = 1;
    p.wayness = 16;
    p.cores_per_node = 16;
    p.wall_hours = 2.0;
    p.idle_fraction = 0.25;
    p.unused_mem_fraction = std::nullopt; // undefined survives the round trip
    p.waste = std::nullopt;
    p.mean_bandwidth_gbps = 1.5;
    p.numa_cov = 1.7320508075688772;
    p.coverage = 0.5;
    p.core_seconds = 115200;

    std::string text = serialize_entry(tl, &p);
    StoredEntry back = parse_entry(text);
    REQUIRE(back.profile.has_value());
    CHECK(*back.profile == p);
    CHECK(serialize_entry(back.timeline, &*back.profile) == text);
}

TEST_CASE("put then scan delivers the entry exactly once") {
    TempStore t("jobmon-store-once");
    JobStore store(t.dir);
    store.put(tiny_timeline("j0001"));
    size_t n = 0;
    store.scan([&](StoredEntry&& e) {
        CHECK(e.timeline.job.job_id == "j0001");
        ++n;
    });
    CHECK(n == 1);
}

TEST_CASE("re-put overwrites: one entry, latest content") {
    TempStore t("jobmon-store-idem");
    JobStore store(t.dir);
    store.put(tiny_timeline("j0001", 1000, 8200));
    store.put(tiny_timeline("j0001", 2000, 9200));
    CHECK(store.job_ids().size() == 1);
    auto entry = store.get("j0001");
    REQUIRE(entry);
    CHECK(entry->timeline.job.start == 2000);
}

TEST_CASE("scan streams in job id order and skips corrupt entries") {
    TempStore t("jobmon-store-order");
    JobStore store(t.dir);
    store.put(tiny_timeline("j0003"));
    store.put(tiny_timeline("j0001"));
    store.put(tiny_timeline("j0002"));
    atomic_write_file(t.dir / "jobs" / "j0000", "garbage entry\n");

    std::vector<std::string> seen;
    std::vector<std::string> corrupt;
    store.scan([&](StoredEntry&& e) { seen.push_back(e.timeline.job.job_id); }, &corrupt);
    CHECK(seen == std::vector<std::string>{"j0001", "j0002", "j0003"});
    REQUIRE(corrupt.size() == 1);
    CHECK(corrupt[0].find("j0000") != std::string::npos);
}

TEST_CASE("profiles only come back from entries that have one") {
    TempStore t("jobmon-store-profiles");
    JobStore store(t.dir);
    store.put(tiny_timeline("j0001"));
    JobProfile p;
    p.job_id = "j0002";
    p.owner = "o";
    p.queue = "q";
    JobTimeline tl = tiny_timeline("j0002");
    store.put(tl, &p);
    size_t n = store.scan_profiles([&](JobProfile&& got) { CHECK(got.job_id == "j0002"); });
    CHECK(n == 1);
}

TEST_CASE("put_profile preserves the stored timeline") {
    TempStore t("jobmon-store-pp");
    JobStore store(t.dir);
    JobTimeline tl = tiny_timeline("j0009");
    store.put(tl);
    JobProfile p;
    p.job_id = "j0009";
    p.owner = "alice";
    p.queue = "normal";
    p.idle_fraction = 0.9;
    store.put_profile(p);
    auto entry = store.get("j0009");
    REQUIRE(entry);
    CHECK(entry->profile.has_value());
    CHECK(entry->timeline.nodes.size() == 1);
    CHECK(serialize_entry(entry->timeline, nullptr) == serialize_entry(tl, nullptr));
}

TEST_CASE("index file lists every job") {
    TempStore t("jobmon-store-index");
    JobStore store(t.dir);
    store.put(tiny_timeline("b"));
    store.put(tiny_timeline("a"));
    store.write_index();
    CHECK(read_file(t.dir / "index") == "a\nb\n");
}

TEST_CASE("store holds a full-population count of profiles") {
    TempStore t("jobmon-store-scale");
    JobStore store(t.dir);
    const size_t target = 24997;
    auto t0 = std::chrono::steady_clock::now();
    JobTimeline tl = tiny_timeline("template");
    JobProfile p;
    p.owner = "o";
    p.queue = "q";
    for (size_t i = 0; i < target; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "j%05zu", i);
        tl.job.job_id = id;
        tl.nodes.clear(); // keep entries tiny: accounting plus profile
        p.job_id = id;
        store.put(tl, &p);
    }
    size_t n = store.scan_profiles([](JobProfile&&) {});
    CHECK(n == target);
    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    MESSAGE("store scale round trip took ", secs, " s");
}
