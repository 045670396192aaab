// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0

#include "jobmon/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "jobmon/util.hpp"

namespace jobmon {

namespace {

void check(bool cond, const std::string& what) {
    if (!cond) throw FormatError("scenario: " + what);
}

int64_t covered_seconds(int64_t start, int64_t end, int64_t t) {
    return std::max<int64_t>(0, std::min(t, end) - start);
}

uint64_t floor_u64(double v) {
    if (v <= 0) return 0;
    return static_cast<uint64_t>(v);
}

// Background counter rates per second for types the scenario model does not
// drive; deterministic in (seed, node, type, field).
double background_rate(uint64_t seed, uint32_t node, std::string_view type, size_t field,
                       Unit unit) {
    uint64_t h = seed ^ (uint64_t(node) + 1) * 0x9e3779b97f4a7c15ull;
    for (char c : type) h = splitmix64(h ^ static_cast<uint64_t>(c));
    h = splitmix64(h ^ field);
    double u = static_cast<double>(h % 10000) / 10000.0;
    switch (unit) {
        case Unit::b: return 50e3 + u * 450e3;
        case Unit::p: return 50 + u * 450;
        case Unit::kb: return 1 + u * 99;
        case Unit::ev: return 10 + u * 990;
        default: return 100 + u * 900;
    }
}

} // namespace

void SyntheticScenario::validate() const {
    check(nodes >= 1, "nodes must be positive");
    check(sockets_per_node >= 1 && cores_per_node >= sockets_per_node,
          "requires cores_per_node >= sockets_per_node >= 1");
    check(cores_per_node % sockets_per_node == 0,
          "cores_per_node must be a multiple of sockets_per_node");
    check(mem_total_kb >= 1, "mem_total_kb must be positive");
    check(interval >= 1, "interval must be positive");
    check(t0 <= t1, "t0 must not exceed t1");

    std::map<uint32_t, std::vector<std::pair<int64_t, int64_t>>> per_node;
    std::vector<std::string_view> ids;
    for (const auto& j : jobs) {
        check(is_token(j.job_id), "bad job id");
        check(is_token(j.owner) && is_token(j.queue), "bad owner/queue for job " + j.job_id);
        check(!j.node_indices.empty(), "job " + j.job_id + " has no nodes");
        check(j.wayness >= 1 && j.wayness <= cores_per_node,
              "job " + j.job_id + " wayness out of range");
        check(j.end > j.start, "job " + j.job_id + " has end <= start");
        check(j.idle_pattern >= 0.0 && j.idle_pattern <= 1.0,
              "job " + j.job_id + " idle_pattern out of [0,1]");
        check(j.mem_used_fraction >= 0.0 && j.mem_used_fraction <= 1.0,
              "job " + j.job_id + " mem_used out of [0,1]");
        check(j.dram_bytes_per_sec >= 0.0, "job " + j.job_id + " dram rate negative");
        check(j.numa_skew.size() == sockets_per_node,
              "job " + j.job_id + " numa_skew arity mismatch");
        double sum = 0;
        for (double w : j.numa_skew) {
            check(w >= 0.0, "job " + j.job_id + " negative numa weight");
            sum += w;
        }
        check(std::abs(sum - 1.0) <= 1e-6, "job " + j.job_id + " numa_skew must sum to 1");
        ids.push_back(j.job_id);
        std::vector<uint32_t> nn = j.node_indices;
        std::sort(nn.begin(), nn.end());
        check(std::adjacent_find(nn.begin(), nn.end()) == nn.end(),
              "job " + j.job_id + " repeats a node");
        for (uint32_t n : nn) {
            check(n < nodes, "job " + j.job_id + " references node out of range");
            per_node[n].emplace_back(j.start, j.end);
        }
    }
    std::sort(ids.begin(), ids.end());
    check(std::adjacent_find(ids.begin(), ids.end()) == ids.end(), "duplicate job id");
    // One job at a time per node: keeps per-core busy rates within 100 cs/s.
    for (auto& [n, spans] : per_node) {
        std::sort(spans.begin(), spans.end());
        for (size_t i = 1; i < spans.size(); ++i) {
            check(spans[i].first > spans[i - 1].second,
                  "jobs overlap on node " + std::to_string(n));
        }
    }
}

std::string SyntheticScenario::hostname(uint32_t node) const {
    uint32_t width = 3;
    for (uint32_t v = nodes > 0 ? nodes - 1 : 0; v >= 1000; v /= 10) ++width;
    char buf[24];
    std::snprintf(buf, sizeof(buf), "n%0*u", width, node);
    return buf;
}

std::pair<int64_t, int64_t> SyntheticScenario::window() const {
    if (t0 != 0 || t1 != 0) return {t0, t1};
    if (jobs.empty()) return {0, 86400};
    int64_t lo = jobs.front().start, hi = jobs.front().end;
    for (const auto& j : jobs) {
        lo = std::min(lo, j.start);
        hi = std::max(hi, j.end);
    }
    return {day_start(lo), hi};
}

// ---------------------------------------------------------------------------
// scenario config

namespace {

std::vector<double> parse_double_list(std::string_view text, size_t line_no) {
    std::vector<double> out;
    for (auto tok : split(text, ',')) {
        auto v = parse_f64(tok);
        if (!v) throw FormatError("scenario line " + std::to_string(line_no) + ": bad number");
        out.push_back(*v);
    }
    return out;
}

} // namespace

SyntheticScenario parse_scenario(std::istream& in) {
    SyntheticScenario sc;
    sc.t0 = sc.t1 = 0;
    ScenarioJob* job = nullptr;
    std::string line;
    size_t line_no = 0;

    auto fail = [&](const std::string& what) -> FormatError {
        return FormatError("scenario line " + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        std::string_view v{line};
        while (!v.empty() && (v.back() == '\r' || v.back() == ' ' || v.back() == '\t')) {
            v.remove_suffix(1);
        }
        while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
        if (v.empty() || v[0] == '#') continue;
        if (v.front() == '[') {
            auto tokens = split_ws(v.substr(1, v.size() - 2));
            if (v.back() != ']' || tokens.size() != 2 || tokens[0] != "job" ||
                !is_token(tokens[1])) {
                throw fail("expected [job <id>]");
            }
            sc.jobs.emplace_back();
            job = &sc.jobs.back();
            job->job_id = tokens[1];
            continue;
        }
        size_t eq = v.find('=');
        if (eq == std::string_view::npos) throw fail("expected key = value");
        auto key = split_ws(v.substr(0, eq));
        auto val_tokens = split_ws(v.substr(eq + 1));
        if (key.size() != 1 || val_tokens.empty()) throw fail("expected key = value");
        std::string_view k = key[0];
        std::string_view val = val_tokens[0];

        auto u64 = [&]() {
            auto x = parse_u64(val);
            if (!x) throw fail("bad unsigned value for " + std::string(k));
            return *x;
        };
        auto i64 = [&]() {
            auto x = parse_i64(val);
            if (!x) throw fail("bad integer value for " + std::string(k));
            return *x;
        };
        auto f64 = [&]() {
            auto x = parse_f64(val);
            if (!x) throw fail("bad number for " + std::string(k));
            return *x;
        };

        if (!job) {
            if (k == "seed") sc.seed = u64();
            else if (k == "nodes") sc.nodes = static_cast<uint32_t>(u64());
            else if (k == "cores_per_node") sc.cores_per_node = static_cast<uint32_t>(u64());
            else if (k == "sockets_per_node") sc.sockets_per_node = static_cast<uint32_t>(u64());
            else if (k == "mem_total_kb") sc.mem_total_kb = u64();
            else if (k == "interval") sc.interval = static_cast<uint32_t>(u64());
            else if (k == "t0") sc.t0 = i64();
            else if (k == "t1") sc.t1 = i64();
            else if (k == "counter_base") sc.counter_base = u64();
            else throw fail("unknown scenario key " + std::string(k));
        } else {
            if (k == "owner") job->owner = val;
            else if (k == "queue") job->queue = val;
            else if (k == "nodes") {
                for (auto tok : split(val, ',')) {
                    auto x = parse_u64(tok);
                    if (!x) throw fail("bad node index");
                    job->node_indices.push_back(static_cast<uint32_t>(*x));
                }
            } else if (k == "wayness") job->wayness = static_cast<uint32_t>(u64());
            else if (k == "start") job->start = i64();
            else if (k == "end") job->end = i64();
            else if (k == "idle") job->idle_pattern = f64();
            else if (k == "numa_skew") job->numa_skew = parse_double_list(val, line_no);
            else if (k == "mem_used") job->mem_used_fraction = f64();
            else if (k == "dram_bps") job->dram_bytes_per_sec = f64();
            else throw fail("unknown job key " + std::string(k));
        }
    }
    sc.validate();
    return sc;
}

SyntheticScenario parse_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_scenario(in);
}

std::string scenario_to_text(const SyntheticScenario& sc) {
    std::ostringstream out;
    out << "seed = " << sc.seed << "\n";
    out << "nodes = " << sc.nodes << "\n";
    out << "cores_per_node = " << sc.cores_per_node << "\n";
    out << "sockets_per_node = " << sc.sockets_per_node << "\n";
    out << "mem_total_kb = " << sc.mem_total_kb << "\n";
    out << "interval = " << sc.interval << "\n";
    if (sc.t0 != 0 || sc.t1 != 0) {
        out << "t0 = " << sc.t0 << "\n";
        out << "t1 = " << sc.t1 << "\n";
    }
    if (sc.counter_base != 0) out << "counter_base = " << sc.counter_base << "\n";
    for (const auto& j : sc.jobs) {
        out << "\n[job " << j.job_id << "]\n";
        out << "owner = " << j.owner << "\n";
        out << "queue = " << j.queue << "\n";
        out << "nodes = ";
        for (size_t i = 0; i < j.node_indices.size(); ++i) {
            out << (i ? "," : "") << j.node_indices[i];
        }
        out << "\n";
        out << "wayness = " << j.wayness << "\n";
        out << "start = " << j.start << "\n";
        out << "end = " << j.end << "\n";
        out << "idle = " << format_double(j.idle_pattern) << "\n";
        out << "numa_skew = ";
        for (size_t i = 0; i < j.numa_skew.size(); ++i) {
            out << (i ? "," : "") << format_double(j.numa_skew[i]);
        }
        out << "\n";
        out << "mem_used = " << format_double(j.mem_used_fraction) << "\n";
        out << "dram_bps = " << format_double(j.dram_bytes_per_sec) << "\n";
    }
    return std::move(out).str();
}

// ---------------------------------------------------------------------------
// counter model

SyntheticNode::SyntheticNode(const SyntheticScenario& sc, uint32_t node)
    : sc_(&sc), node_(node), events_(counter_events(CounterArch::synthetic)) {
    if (node >= sc.nodes) throw FormatError("synthetic node index out of range");
    window_start_ = sc.window().first;
    for (const auto& j : sc.jobs) {
        if (std::find(j.node_indices.begin(), j.node_indices.end(), node) !=
            j.node_indices.end()) {
            jobs_.push_back(&j);
        }
    }
}

std::vector<std::string> SyntheticNode::active_jobs(int64_t t) const {
    std::vector<std::string> out;
    for (const auto* j : jobs_) {
        if (j->start <= t && t < j->end) out.push_back(j->job_id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

uint64_t SyntheticNode::busy_cs(uint32_t core, int64_t t) const {
    double busy = 0;
    for (const auto* j : jobs_) {
        if (core >= j->wayness) continue;
        busy += (1.0 - j->idle_pattern) * 100.0 *
                static_cast<double>(covered_seconds(j->start, j->end, t));
    }
    return floor_u64(busy);
}

uint64_t SyntheticNode::mem_access_events(uint32_t core, int64_t t) const {
    const uint32_t socket = core / sc_->cores_per_socket();
    double events = 0;
    for (const auto* j : jobs_) {
        double rate = j->numa_skew[socket] * j->dram_bytes_per_sec / 64.0 /
                      static_cast<double>(sc_->cores_per_socket());
        events += rate * static_cast<double>(covered_seconds(j->start, j->end, t));
    }
    return floor_u64(events);
}

uint64_t SyntheticNode::mem_used_kb(uint32_t socket, int64_t t) const {
    (void)socket;
    const uint64_t per_socket_total = sc_->mem_total_kb / sc_->sockets_per_node;
    double used = 0;
    for (const auto* j : jobs_) {
        if (j->start <= t && t < j->end) {
            used += j->mem_used_fraction * static_cast<double>(sc_->mem_total_kb) /
                    static_cast<double>(sc_->sockets_per_node);
        }
    }
    return std::min(per_socket_total, floor_u64(used));
}

namespace {

// Per-core cumulative event count for one pmc event name.
uint64_t pmc_value(const SyntheticNode& node, const SyntheticScenario& sc,
                   const std::vector<const ScenarioJob*>& jobs, std::string_view event,
                   uint32_t core, int64_t t) {
    if (event == "mem_access") return node.mem_access_events(core, t);
    double scale = 0;
    bool busy_driven = false;
    if (event == "flops") { busy_driven = true; scale = 1e6; }
    else if (event == "l1d_hits") { busy_driven = true; scale = 4e6; }
    else if (event == "dcache_fill") { scale = 0.5; }
    else if (event == "numa_traffic") { scale = 0.1; }
    else return 0;

    const uint32_t socket = core / sc.cores_per_socket();
    double total = 0;
    for (const auto* j : jobs) {
        double covered = static_cast<double>(covered_seconds(j->start, j->end, t));
        if (busy_driven) {
            if (core < j->wayness) total += scale * (1.0 - j->idle_pattern) * covered;
        } else {
            double rate = j->numa_skew[socket] * j->dram_bytes_per_sec / 64.0 /
                          static_cast<double>(sc.cores_per_socket());
            total += scale * rate * covered;
        }
    }
    return floor_u64(total);
}

} // namespace

std::vector<Sample> SyntheticNode::pmc_samples_at(int64_t t,
                                                  const std::vector<std::string>& events) const {
    std::vector<Sample> out;
    for (uint32_t core = 0; core < sc_->cores_per_node; ++core) {
        Sample s{"pmc", core, {}};
        for (const auto& e : events) {
            s.values.push_back(sc_->counter_base + pmc_value(*this, *sc_, jobs_, e, core, t));
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Sample> SyntheticNode::samples_at(int64_t t, std::string_view type_name) const {
    const int64_t elapsed = std::max<int64_t>(0, t - window_start_);
    const uint64_t base = sc_->counter_base;
    std::vector<Sample> out;

    if (type_name == "cpu") {
        for (uint32_t core = 0; core < sc_->cores_per_node; ++core) {
            const uint64_t busy = busy_cs(core, t);
            const uint64_t total = static_cast<uint64_t>(elapsed) * 100;
            const uint64_t system = busy / 10;
            const uint64_t user = busy - system;
            const uint64_t idle = total - std::min(busy, total);
            out.push_back(Sample{
                "cpu", core,
                {base + user, base, base + system, base + idle, base, base, base}});
        }
        return out;
    }
    if (type_name == "mem") {
        const uint64_t per_socket_total = sc_->mem_total_kb / sc_->sockets_per_node;
        for (uint32_t s = 0; s < sc_->sockets_per_node; ++s) {
            const uint64_t used = mem_used_kb(s, t);
            out.push_back(Sample{"mem", s, {per_socket_total, per_socket_total - used, used, 0}});
        }
        return out;
    }
    if (type_name == "load") {
        uint64_t running = 0, load = 0;
        for (const auto* j : jobs_) {
            if (j->start <= t && t < j->end) {
                running += j->wayness;
                load += floor_u64(j->wayness * (1.0 - j->idle_pattern) * 100.0);
            }
        }
        out.push_back(Sample{"load", 0, {load, load, load, running, 128 + running}});
        return out;
    }
    if (type_name == "ipc") {
        uint64_t h = splitmix64(sc_->seed ^ node_);
        out.push_back(Sample{"ipc", 0, {h % 4, (h >> 8) % 17 * 1024, (h >> 16) % 3, (h >> 24) % 5}});
        return out;
    }
    if (type_name == "pmc") return pmc_samples_at(t, events_.events);

    // Remaining types carry deterministic background counters.
    const TypeSchema schema = type_name == "vm"      ? vm_schema()
                              : type_name == "net"   ? net_schema()
                              : type_name == "block" ? block_schema()
                              : type_name == "irq"   ? irq_schema()
                              : type_name == "fs"    ? fs_schema()
                              : type_name == "ib"    ? ib_schema()
                                                     : TypeSchema{};
    if (schema.type_name.empty()) return out;
    Sample s{schema.type_name, 0, {}};
    for (size_t f = 0; f < schema.fields.size(); ++f) {
        double rate = background_rate(sc_->seed, node_, type_name, f, schema.fields[f].unit);
        s.values.push_back(base + floor_u64(rate * static_cast<double>(elapsed)));
    }
    out.push_back(std::move(s));
    return out;
}

RecordGroup SyntheticNode::group_at(int64_t t) const {
    static const char* kTypes[] = {"cpu", "mem", "vm", "load", "net", "block",
                                   "ipc", "irq", "fs", "ib", "pmc"};
    RecordGroup g;
    g.timestamp = t;
    g.job_ids = active_jobs(t);
    for (const char* type : kTypes) {
        for (auto& s : samples_at(t, type)) g.samples.push_back(std::move(s));
    }
    return g;
}

FileHeader SyntheticNode::header() const {
    FileHeader h;
    h.hostname = sc_->hostname(node_);
    h.cores = sc_->cores_per_node;
    h.sockets = sc_->sockets_per_node;
    h.mem_total_kb = sc_->mem_total_kb;
    h.extras.emplace_back("interval", std::to_string(sc_->interval));
    h.schemas = {cpu_schema(), mem_schema(),   vm_schema(), load_schema(),
                 net_schema(), block_schema(), ipc_schema(), irq_schema(),
                 fs_schema(),  ib_schema(),    pmc_schema(events_)};
    return h;
}

std::string scenario_accounting_csv(const SyntheticScenario& sc) {
    std::ostringstream out;
    out << "job_id,owner,queue,nodes,wayness,start,end,node_list\n";
    for (const auto& j : sc.jobs) {
        out << j.job_id << "," << j.owner << "," << j.queue << "," << j.node_indices.size() << ","
            << j.wayness << "," << j.start << "," << j.end << ",";
        for (size_t i = 0; i < j.node_indices.size(); ++i) {
            out << (i ? ";" : "") << sc.hostname(j.node_indices[i]);
        }
        out << "\n";
    }
    return std::move(out).str();
}

} // namespace jobmon
