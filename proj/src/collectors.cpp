// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0

#include "jobmon/collectors.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <thread>

#include "jobmon/probe.hpp"
#include "jobmon/synth.hpp"
#include "jobmon/util.hpp"

namespace fs = std::filesystem;

namespace jobmon {

std::string_view availability_name(Availability a) {
    switch (a) {
        case Availability::host: return "host";
        case Availability::synthetic: return "synthetic";
        case Availability::fixture: return "fixture";
    }
    return "synthetic";
}

CounterEventSet counter_events(CounterArch arch) {
    switch (arch) {
        case CounterArch::opteron:
            return {arch, {"flops", "mem_access", "dcache_fill", "numa_traffic"}};
        case CounterArch::nehalem_westmere:
            return {arch, {"flops", "numa_traffic", "l1d_hits"}};
        case CounterArch::synthetic:
            return {arch, {"flops", "mem_access"}};
    }
    return {CounterArch::synthetic, {"flops", "mem_access"}};
}

std::optional<CounterArch> arch_from(std::string_view name) {
    if (name == "opteron") return CounterArch::opteron;
    if (name == "nehalem_westmere") return CounterArch::nehalem_westmere;
    if (name == "synthetic") return CounterArch::synthetic;
    return std::nullopt;
}

std::string_view arch_name(CounterArch arch) {
    switch (arch) {
        case CounterArch::opteron: return "opteron";
        case CounterArch::nehalem_westmere: return "nehalem_westmere";
        case CounterArch::synthetic: return "synthetic";
    }
    return "synthetic";
}

namespace {

TypeSchema make_schema(std::string name, std::initializer_list<FieldSpec> fields) {
    return TypeSchema{std::move(name), fields};
}

constexpr auto C = FieldKind::counter;
constexpr auto G = FieldKind::gauge;

} // namespace

TypeSchema cpu_schema() {
    return make_schema("cpu", {{"user", C, Unit::cs},
                               {"nice", C, Unit::cs},
                               {"system", C, Unit::cs},
                               {"idle", C, Unit::cs},
                               {"iowait", C, Unit::cs},
                               {"irq", C, Unit::cs},
                               {"softirq", C, Unit::cs}});
}

TypeSchema mem_schema() {
    return make_schema("mem", {{"total", G, Unit::kb},
                               {"free", G, Unit::kb},
                               {"used", G, Unit::kb},
                               {"cached", G, Unit::kb}});
}

TypeSchema vm_schema() {
    return make_schema("vm", {{"pswpin", C, Unit::ev},
                              {"pswpout", C, Unit::ev},
                              {"pgpgin", C, Unit::kb},
                              {"pgpgout", C, Unit::kb}});
}

TypeSchema load_schema() {
    return make_schema("load", {{"load1", G, Unit::none},
                                {"load5", G, Unit::none},
                                {"load15", G, Unit::none},
                                {"running", G, Unit::none},
                                {"procs", G, Unit::none}});
}

TypeSchema net_schema() {
    return make_schema("net", {{"rx_b", C, Unit::b},
                               {"tx_b", C, Unit::b},
                               {"rx_p", C, Unit::p},
                               {"tx_p", C, Unit::p}});
}

TypeSchema block_schema() {
    return make_schema("block", {{"rd_ios", C, Unit::ev},
                                 {"wr_ios", C, Unit::ev},
                                 {"rd_sectors", C, Unit::none},
                                 {"wr_sectors", C, Unit::none}});
}

TypeSchema ipc_schema() {
    return make_schema("ipc", {{"shm_segs", G, Unit::none},
                               {"shm_kb", G, Unit::kb},
                               {"msg_queues", G, Unit::none},
                               {"sem_sets", G, Unit::none}});
}

TypeSchema irq_schema() { return make_schema("irq", {{"total", C, Unit::ev}}); }

TypeSchema fs_schema() {
    return make_schema("fs", {{"reads", C, Unit::ev},
                              {"writes", C, Unit::ev},
                              {"read_b", C, Unit::b},
                              {"write_b", C, Unit::b}});
}

TypeSchema ib_schema() {
    return make_schema("ib", {{"rx_b", C, Unit::b},
                              {"tx_b", C, Unit::b},
                              {"rx_p", C, Unit::p},
                              {"tx_p", C, Unit::p}});
}

TypeSchema pmc_schema(const CounterEventSet& events) {
    TypeSchema schema;
    schema.type_name = "pmc";
    for (const auto& e : events.events) schema.fields.push_back({e, C, Unit::ev});
    return schema;
}

// ---------------------------------------------------------------------------
// procfs / fixture text parsers

namespace {

[[noreturn]] void bad_line(std::string_view what, std::string_view line) {
    throw SourceError(std::string(what) + ": " + std::string(line));
}

std::vector<std::string_view> lines_of(std::string_view text) {
    auto out = split(text, '\n');
    while (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

} // namespace

std::vector<Sample> parse_cpu_lines(std::string_view text) {
    std::vector<Sample> out;
    for (auto line : lines_of(text)) {
        if (line.size() < 4 || line.substr(0, 3) != "cpu") continue;
        if (line[3] < '0' || line[3] > '9') continue; // aggregate line
        auto tokens = split_ws(line);
        if (tokens.size() < 8) bad_line("unrecognized cpu line", line);
        auto core = parse_u64(tokens[0].substr(3));
        if (!core || *core > UINT32_MAX) bad_line("unrecognized cpu line", line);
        Sample s{"cpu", static_cast<uint32_t>(*core), {}};
        for (size_t i = 1; i <= 7; ++i) {
            auto v = parse_u64(tokens[i]);
            if (!v) bad_line("unrecognized cpu line", line);
            s.values.push_back(*v);
        }
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(),
              [](const Sample& a, const Sample& b) { return a.device_id < b.device_id; });
    return out;
}

namespace {

uint64_t meminfo_value(std::string_view text, std::string_view key) {
    for (auto line : lines_of(text)) {
        auto tokens = split_ws(line);
        if (tokens.size() >= 2 && tokens[0].size() == key.size() + 1 &&
            tokens[0].substr(0, key.size()) == key && tokens[0].back() == ':') {
            auto v = parse_u64(tokens[1]);
            if (!v) bad_line("unrecognized meminfo line", line);
            return *v;
        }
    }
    return 0;
}

} // namespace

std::vector<Sample> parse_meminfo(std::string_view text) {
    uint64_t total = meminfo_value(text, "MemTotal");
    uint64_t free_kb = meminfo_value(text, "MemFree");
    uint64_t cached = meminfo_value(text, "Cached");
    if (total == 0) throw SourceError("meminfo has no MemTotal");
    return {Sample{"mem", 0, {total, free_kb, total - std::min(free_kb, total), cached}}};
}

std::vector<Sample> parse_numa_meminfo(const std::vector<std::string>& per_node_texts) {
    std::vector<Sample> out;
    for (size_t node = 0; node < per_node_texts.size(); ++node) {
        uint64_t total = 0, free_kb = 0, used = 0, cached = 0;
        for (auto line : lines_of(per_node_texts[node])) {
            auto tokens = split_ws(line);
            // "Node 0 MemTotal: 32768 kB"
            if (tokens.size() < 4 || tokens[0] != "Node") continue;
            auto v = parse_u64(tokens[3]);
            if (!v) bad_line("unrecognized numa meminfo line", line);
            if (tokens[2] == "MemTotal:") total = *v;
            else if (tokens[2] == "MemFree:") free_kb = *v;
            else if (tokens[2] == "MemUsed:") used = *v;
            else if (tokens[2] == "FilePages:") cached = *v;
        }
        if (total == 0) throw SourceError("numa meminfo has no MemTotal");
        if (used == 0) used = total - std::min(free_kb, total);
        out.push_back(Sample{"mem", static_cast<uint32_t>(node), {total, free_kb, used, cached}});
    }
    return out;
}

std::vector<Sample> parse_vmstat(std::string_view text) {
    const std::string_view keys[] = {"pswpin", "pswpout", "pgpgin", "pgpgout"};
    std::vector<uint64_t> values(4, 0);
    for (auto line : lines_of(text)) {
        auto tokens = split_ws(line);
        if (tokens.size() != 2) continue;
        for (size_t i = 0; i < 4; ++i) {
            if (tokens[0] == keys[i]) {
                auto v = parse_u64(tokens[1]);
                if (!v) bad_line("unrecognized vmstat line", line);
                values[i] = *v;
            }
        }
    }
    return {Sample{"vm", 0, std::move(values)}};
}

std::vector<Sample> parse_loadavg(std::string_view text) {
    auto tokens = split_ws(text);
    if (tokens.size() < 4) bad_line("unrecognized loadavg", text);
    std::vector<uint64_t> values;
    for (size_t i = 0; i < 3; ++i) {
        auto v = parse_f64(tokens[i]);
        if (!v || *v < 0) bad_line("unrecognized loadavg", text);
        values.push_back(static_cast<uint64_t>(std::llround(*v * 100.0)));
    }
    auto frac = split(tokens[3], '/');
    if (frac.size() != 2) bad_line("unrecognized loadavg", text);
    auto running = parse_u64(frac[0]);
    auto procs = parse_u64(frac[1]);
    if (!running || !procs) bad_line("unrecognized loadavg", text);
    values.push_back(*running);
    values.push_back(*procs);
    return {Sample{"load", 0, std::move(values)}};
}

std::vector<Sample> parse_netdev(std::string_view text) {
    std::vector<Sample> out;
    uint32_t device = 0;
    for (auto line : lines_of(text)) {
        size_t colon = line.find(':');
        if (colon == std::string_view::npos || line.find('|') != std::string_view::npos) continue;
        auto name = line.substr(0, colon);
        while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
        if (name == "lo") continue;
        auto tokens = split_ws(line.substr(colon + 1));
        if (tokens.size() < 16) bad_line("unrecognized net line", line);
        auto rx_b = parse_u64(tokens[0]);
        auto rx_p = parse_u64(tokens[1]);
        auto tx_b = parse_u64(tokens[8]);
        auto tx_p = parse_u64(tokens[9]);
        if (!rx_b || !rx_p || !tx_b || !tx_p) bad_line("unrecognized net line", line);
        out.push_back(Sample{"net", device++, {*rx_b, *tx_b, *rx_p, *tx_p}});
    }
    return out;
}

namespace {

bool diskstats_partition(std::string_view name) {
    if (name.starts_with("loop") || name.starts_with("ram") || name.starts_with("dm-")) {
        return true;
    }
    const bool lettered = name.starts_with("sd") || name.starts_with("hd") ||
                          name.starts_with("vd") || name.starts_with("xvd");
    if (lettered && !name.empty() && name.back() >= '0' && name.back() <= '9') return true;
    if (name.starts_with("nvme")) {
        size_t p = name.rfind('p');
        if (p != std::string_view::npos && p + 1 < name.size() && name[p + 1] >= '0') return true;
    }
    return false;
}

} // namespace

std::vector<Sample> parse_diskstats(std::string_view text) {
    std::vector<Sample> out;
    uint32_t device = 0;
    for (auto line : lines_of(text)) {
        auto tokens = split_ws(line);
        if (tokens.size() < 10) continue;
        if (diskstats_partition(tokens[2])) continue;
        auto rd_ios = parse_u64(tokens[3]);
        auto rd_sec = parse_u64(tokens[5]);
        auto wr_ios = parse_u64(tokens[7]);
        auto wr_sec = parse_u64(tokens[9]);
        if (!rd_ios || !rd_sec || !wr_ios || !wr_sec) bad_line("unrecognized diskstats line", line);
        out.push_back(Sample{"block", device++, {*rd_ios, *wr_ios, *rd_sec, *wr_sec}});
    }
    return out;
}

std::vector<Sample> parse_stat_intr(std::string_view text) {
    for (auto line : lines_of(text)) {
        if (!line.starts_with("intr ")) continue;
        auto tokens = split_ws(line);
        auto v = tokens.size() >= 2 ? parse_u64(tokens[1]) : std::nullopt;
        if (!v) bad_line("unrecognized intr line", line);
        return {Sample{"irq", 0, {*v}}};
    }
    throw SourceError("stat text has no intr line");
}

std::vector<Sample> parse_fs_table(std::string_view text) {
    std::vector<Sample> out;
    uint32_t device = 0;
    for (auto line : lines_of(text)) {
        if (line.starts_with("#")) continue;
        auto tokens = split_ws(line);
        if (tokens.size() != 5) bad_line("unrecognized fs row", line);
        Sample s{"fs", device++, {}};
        for (size_t i = 1; i < 5; ++i) {
            auto v = parse_u64(tokens[i]);
            if (!v) bad_line("unrecognized fs row", line);
            s.values.push_back(*v);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Sample> parse_ib_table(std::string_view text) {
    std::vector<Sample> out;
    for (auto line : lines_of(text)) {
        if (line.starts_with("#")) continue;
        auto tokens = split_ws(line);
        if (tokens.size() != 5) bad_line("unrecognized ib row", line);
        auto port = parse_u64(tokens[0]);
        if (!port || *port > UINT32_MAX) bad_line("unrecognized ib row", line);
        Sample s{"ib", static_cast<uint32_t>(*port), {}};
        for (size_t i = 1; i < 5; ++i) {
            auto v = parse_u64(tokens[i]);
            if (!v) bad_line("unrecognized ib row", line);
            s.values.push_back(*v);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Sample> parse_ipc_line(std::string_view text) {
    auto all = lines_of(text);
    if (all.empty()) bad_line("unrecognized ipc line", text);
    auto tokens = split_ws(all[0]);
    if (tokens.size() != 4) bad_line("unrecognized ipc line", text);
    std::vector<uint64_t> values;
    for (auto t : tokens) {
        auto v = parse_u64(t);
        if (!v) bad_line("unrecognized ipc line", text);
        values.push_back(*v);
    }
    return {Sample{"ipc", 0, std::move(values)}};
}

std::vector<Sample> parse_pmc_table(std::string_view text, CounterEventSet& events_out) {
    auto all = lines_of(text);
    if (all.empty() || !all[0].starts_with("events ")) throw SourceError("pmc table has no events line");
    events_out.arch = CounterArch::synthetic;
    events_out.events.clear();
    for (auto e : split(all[0].substr(7), ',')) {
        if (!is_identifier(e)) throw SourceError("bad pmc event name: " + std::string(e));
        events_out.events.emplace_back(e);
    }
    std::vector<Sample> out;
    for (size_t i = 1; i < all.size(); ++i) {
        auto tokens = split_ws(all[i]);
        if (tokens.size() != events_out.events.size() + 1) bad_line("unrecognized pmc row", all[i]);
        auto core = parse_u64(tokens[0]);
        if (!core || *core > UINT32_MAX) bad_line("unrecognized pmc row", all[i]);
        Sample s{"pmc", static_cast<uint32_t>(*core), {}};
        for (size_t j = 1; j < tokens.size(); ++j) {
            auto v = parse_u64(tokens[j]);
            if (!v) bad_line("unrecognized pmc row", all[i]);
            s.values.push_back(*v);
        }
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sources

namespace {

class FunctionSource final : public Source {
public:
    FunctionSource(SourceDescriptor desc, std::function<std::vector<Sample>(int64_t)> fn)
        : desc_(std::move(desc)), fn_(std::move(fn)) {}

    const SourceDescriptor& descriptor() const override { return desc_; }
    std::vector<Sample> collect(int64_t now) override { return fn_(now); }

private:
    SourceDescriptor desc_;
    std::function<std::vector<Sample>(int64_t)> fn_;
};

std::unique_ptr<Source> make_source(std::string type, TypeSchema schema, uint32_t devices,
                                    Availability avail,
                                    std::function<std::vector<Sample>(int64_t)> fn) {
    SourceDescriptor d{std::move(type), std::move(schema), devices, avail};
    return std::make_unique<FunctionSource>(std::move(d), std::move(fn));
}

std::vector<std::string> numa_meminfo_paths(const fs::path& sys_root) {
    std::vector<std::string> out;
    for (uint32_t n = 0;; ++n) {
        fs::path p = sys_root / "devices/system/node" / ("node" + std::to_string(n)) / "meminfo";
        if (!fs::exists(p)) break;
        out.push_back(p.string());
    }
    return out;
}

} // namespace

RecordGroup collect_once(const std::vector<std::unique_ptr<Source>>& sources, int64_t clock,
                         std::vector<std::string> active_jobs, CollectorStats& stats,
                         std::chrono::milliseconds source_timeout) {
    RecordGroup group;
    group.timestamp = clock;
    std::sort(active_jobs.begin(), active_jobs.end());
    active_jobs.erase(std::unique(active_jobs.begin(), active_jobs.end()), active_jobs.end());
    group.job_ids = std::move(active_jobs);

    for (const auto& source : sources) {
        const std::string& type = source->descriptor().type_name;
        std::packaged_task<std::vector<Sample>(void)> task(
            [&source, clock] { return source->collect(clock); });
        auto result = task.get_future();
        std::thread worker(std::move(task));
        if (result.wait_for(source_timeout) != std::future_status::ready) {
            // Abandon the straggler; the tick must not block the node.
            worker.detach();
            ++stats.source_errors[type];
            ++stats.timeouts;
            continue;
        }
        worker.join();
        try {
            for (auto& s : result.get()) group.samples.push_back(std::move(s));
        } catch (const std::exception&) {
            ++stats.source_errors[type];
        }
    }
    return group;
}

std::vector<std::unique_ptr<Source>> build_sources(const SourceOptions& opts) {
    std::vector<std::unique_ptr<Source>> out;
    const fs::path& fix = opts.fixture_dir;
    const fs::path& proc = opts.proc_root;

    static const SyntheticScenario fallback_scenario = [] {
        SyntheticScenario sc;
        sc.nodes = 1;
        sc.t1 = 86400;
        return sc;
    }();
    const SyntheticScenario* sc = opts.scenario ? opts.scenario : &fallback_scenario;
    auto node = std::make_shared<SyntheticNode>(*sc, opts.scenario ? opts.scenario_node : 0);

    CounterEventSet pmc_events = counter_events(CounterArch::synthetic);
    if (!opts.pmc_events.empty()) {
        pmc_events.events = opts.pmc_events;
    }

    auto fixture = [&](std::string_view type) -> std::optional<fs::path> {
        if (fix.empty()) return std::nullopt;
        fs::path p = fix / type;
        if (fs::exists(p)) return p;
        return std::nullopt;
    };

    auto synth_fn = [node](std::string type) {
        return [node, type = std::move(type)](int64_t now) { return node->samples_at(now, type); };
    };

    auto add = [&](const std::string& type, TypeSchema schema,
                   std::function<std::vector<Sample>(int64_t)> host_fn, uint32_t host_devices,
                   std::function<std::vector<Sample>(std::string_view)> fixture_parse,
                   uint32_t synth_devices) {
        if (auto p = fixture(type)) {
            auto probe = fixture_parse(read_file(*p)); // throws on a bad fixture
            uint32_t devices = std::max<uint32_t>(1, static_cast<uint32_t>(probe.size()));
            out.push_back(make_source(type, std::move(schema), devices, Availability::fixture,
                                      [p = *p, fixture_parse](int64_t) {
                                          return fixture_parse(read_file(p));
                                      }));
            return;
        }
        if (host_fn && host_devices > 0) {
            out.push_back(make_source(type, std::move(schema), host_devices, Availability::host,
                                      std::move(host_fn)));
            return;
        }
        out.push_back(make_source(type, std::move(schema), synth_devices, Availability::synthetic,
                                  synth_fn(type)));
    };

    const uint32_t synth_cores = sc->cores_per_node;
    const uint32_t synth_sockets = sc->sockets_per_node;

    // cpu
    {
        uint32_t devices = 0;
        std::function<std::vector<Sample>(int64_t)> fn;
        if (fs::exists(proc / "stat")) {
            auto probe = parse_cpu_lines(read_file(proc / "stat"));
            devices = static_cast<uint32_t>(probe.size());
            fn = [p = proc / "stat"](int64_t) { return parse_cpu_lines(read_file(p)); };
        }
        add("cpu", cpu_schema(), fn, devices,
            [](std::string_view t) { return parse_cpu_lines(t); }, synth_cores);
    }
    // mem
    {
        uint32_t devices = 0;
        std::function<std::vector<Sample>(int64_t)> fn;
        auto numa = numa_meminfo_paths(opts.sys_root);
        if (!numa.empty()) {
            devices = static_cast<uint32_t>(numa.size());
            fn = [numa](int64_t) {
                std::vector<std::string> texts;
                for (const auto& p : numa) texts.push_back(read_file(p));
                return parse_numa_meminfo(texts);
            };
        } else if (fs::exists(proc / "meminfo")) {
            devices = 1;
            fn = [p = proc / "meminfo"](int64_t) { return parse_meminfo(read_file(p)); };
        }
        add("mem", mem_schema(), fn, devices,
            [](std::string_view t) { return parse_meminfo(t); }, synth_sockets);
    }
    // vm
    {
        std::function<std::vector<Sample>(int64_t)> fn;
        if (fs::exists(proc / "vmstat")) {
            fn = [p = proc / "vmstat"](int64_t) { return parse_vmstat(read_file(p)); };
        }
        add("vm", vm_schema(), fn, 1, [](std::string_view t) { return parse_vmstat(t); }, 1);
    }
    // load
    {
        std::function<std::vector<Sample>(int64_t)> fn;
        if (fs::exists(proc / "loadavg")) {
            fn = [p = proc / "loadavg"](int64_t) { return parse_loadavg(read_file(p)); };
        }
        add("load", load_schema(), fn, 1, [](std::string_view t) { return parse_loadavg(t); }, 1);
    }
    // net
    {
        uint32_t devices = 0;
        std::function<std::vector<Sample>(int64_t)> fn;
        if (fs::exists(proc / "net/dev")) {
            devices = static_cast<uint32_t>(parse_netdev(read_file(proc / "net/dev")).size());
            fn = [p = proc / "net/dev"](int64_t) { return parse_netdev(read_file(p)); };
        }
        add("net", net_schema(), fn, devices,
            [](std::string_view t) { return parse_netdev(t); }, 1);
    }
    // block
    {
        uint32_t devices = 0;
        std::function<std::vector<Sample>(int64_t)> fn;
        if (fs::exists(proc / "diskstats")) {
            devices = static_cast<uint32_t>(parse_diskstats(read_file(proc / "diskstats")).size());
            fn = [p = proc / "diskstats"](int64_t) { return parse_diskstats(read_file(p)); };
        }
        add("block", block_schema(), fn, devices,
            [](std::string_view t) { return parse_diskstats(t); }, 1);
    }
    // ipc
    {
        std::function<std::vector<Sample>(int64_t)> fn;
        if (fs::exists(proc / "sysvipc/shm")) {
            fn = [proc](int64_t) {
                auto count_rows = [](const std::string& text) -> uint64_t {
                    auto rows = split(std::string_view(text), '\n');
                    uint64_t n = 0;
                    for (size_t i = 1; i < rows.size(); ++i) {
                        if (!split_ws(rows[i]).empty()) ++n;
                    }
                    return n;
                };
                std::string shm = read_file(proc / "sysvipc/shm");
                uint64_t segs = count_rows(shm);
                uint64_t shm_kb = 0;
                auto rows = split(std::string_view(shm), '\n');
                for (size_t i = 1; i < rows.size(); ++i) {
                    auto tokens = split_ws(rows[i]);
                    if (tokens.size() > 3) {
                        if (auto v = parse_u64(tokens[3])) shm_kb += *v / 1024;
                    }
                }
                uint64_t msq = count_rows(read_file(proc / "sysvipc/msg"));
                uint64_t sem = count_rows(read_file(proc / "sysvipc/sem"));
                return std::vector<Sample>{Sample{"ipc", 0, {segs, shm_kb, msq, sem}}};
            };
        }
        add("ipc", ipc_schema(), fn, 1, [](std::string_view t) { return parse_ipc_line(t); }, 1);
    }
    // irq
    {
        std::function<std::vector<Sample>(int64_t)> fn;
        if (fs::exists(proc / "stat")) {
            fn = [p = proc / "stat"](int64_t) { return parse_stat_intr(read_file(p)); };
        }
        add("irq", irq_schema(), fn, 1, [](std::string_view t) { return parse_stat_intr(t); }, 1);
    }
    // fs and ib have no portable host text; fixture or synthetic only.
    add("fs", fs_schema(), nullptr, 0, [](std::string_view t) { return parse_fs_table(t); }, 1);
    add("ib", ib_schema(), nullptr, 0, [](std::string_view t) { return parse_ib_table(t); }, 1);
    // pmc: the virtual register file is served synthetically or from fixtures.
    {
        if (auto p = fixture("pmc")) {
            CounterEventSet fixture_events;
            auto probe = parse_pmc_table(read_file(*p), fixture_events);
            uint32_t devices = std::max<uint32_t>(1, static_cast<uint32_t>(probe.size()));
            out.push_back(make_source("pmc", pmc_schema(fixture_events), devices,
                                      Availability::fixture, [p = *p](int64_t) {
                                          CounterEventSet ignored;
                                          return parse_pmc_table(read_file(p), ignored);
                                      }));
        } else {
            out.push_back(make_source(
                "pmc", pmc_schema(pmc_events), synth_cores, Availability::synthetic,
                [node, events = pmc_events.events](int64_t now) {
                    return node->pmc_samples_at(now, events);
                }));
        }
    }
    return out;
}

std::vector<SourceDescriptor> list_sources(const SourceOptions& opts) {
    std::vector<SourceDescriptor> out;
    for (const auto& source : build_sources(opts)) out.push_back(source->descriptor());
    return out;
}

NodeShape probe_node_shape(const std::vector<std::unique_ptr<Source>>& sources,
                           const SourceOptions& opts) {
    NodeShape shape;
    if (opts.scenario) {
        shape.hostname = opts.scenario->hostname(opts.scenario_node);
        shape.cores = opts.scenario->cores_per_node;
        shape.sockets = opts.scenario->sockets_per_node;
        shape.mem_total_kb = opts.scenario->mem_total_kb;
        return shape;
    }
    char buf[256] = {0};
    if (::gethostname(buf, sizeof(buf) - 1) == 0 && buf[0]) shape.hostname = buf;
    else shape.hostname = "localhost";
    for (const auto& source : sources) {
        const SourceDescriptor& d = source->descriptor();
        if (d.type_name == "cpu") shape.cores = std::max(1u, d.device_count);
        if (d.type_name == "mem") {
            shape.sockets = std::max(1u, d.device_count);
            try {
                uint64_t total = 0;
                for (const auto& s : source->collect(0)) {
                    if (!s.values.empty()) total += s.values[0];
                }
                if (total > 0) shape.mem_total_kb = total;
            } catch (const std::exception&) {
                shape.mem_total_kb = 1;
            }
        }
    }
    if (shape.cores < shape.sockets) shape.cores = shape.sockets;
    return shape;
}

FileHeader header_for_sources(const std::vector<std::unique_ptr<Source>>& sources,
                              std::string hostname, uint32_t cores, uint32_t sockets,
                              uint64_t mem_total_kb) {
    FileHeader h;
    h.hostname = std::move(hostname);
    h.cores = cores;
    h.sockets = sockets;
    h.mem_total_kb = mem_total_kb;
    for (const auto& source : sources) h.schemas.push_back(source->descriptor().schema);
    return h;
}

} // namespace jobmon
