// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0

#include "jobmon/store.hpp"

#include <algorithm>
#include <sstream>

#include "jobmon/util.hpp"

namespace fs = std::filesystem;

namespace jobmon {

namespace {

void put_opt(std::ostringstream& out, std::string_view key, const std::optional<double>& v) {
    out << key << " " << (v ? format_double(*v) : "undef") << "\n";
}

std::string schema_spec(const TypeSchema& s) {
    std::string out = s.type_name;
    for (const auto& f : s.fields) {
        out += " " + f.name + (f.kind == FieldKind::counter ? ":c:" : ":g:");
        out += std::string(unit_name(f.unit));
    }
    return out;
}

void write_profile_section(std::ostringstream& out, const JobProfile& p) {
    out << "[profile]\n";
    out << "job_id " << p.job_id << "\n";
    out << "owner " << p.owner << "\n";
    out << "queue " << p.queue << "\n";
    out << "nodes " << p.nodes << "\n";
    out << "wayness " << p.wayness << "\n";
    out << "cores_per_node " << p.cores_per_node << "\n";
    out << "wall_hours " << format_double(p.wall_hours) << "\n";
    put_opt(out, "idle_fraction", p.idle_fraction);
    put_opt(out, "unused_mem_fraction", p.unused_mem_fraction);
    put_opt(out, "waste", p.waste);
    put_opt(out, "mean_bandwidth_gbps", p.mean_bandwidth_gbps);
    put_opt(out, "numa_cov", p.numa_cov);
    out << "coverage " << format_double(p.coverage) << "\n";
    out << "core_seconds " << format_double(p.core_seconds) << "\n";
    out << "missing_nodes " << p.missing_nodes << "\n";
}

} // namespace

std::string serialize_entry(const JobTimeline& tl, const JobProfile* profile) {
    std::ostringstream out;
    const AccountingRecord& j = tl.job;
    out << "job " << j.job_id << "\n";
    out << "owner " << j.owner << "\n";
    out << "queue " << j.queue << "\n";
    out << "nodes " << j.nodes << "\n";
    out << "wayness " << j.wayness << "\n";
    out << "start " << j.start << "\n";
    out << "end " << j.end << "\n";
    out << "node_list ";
    for (size_t i = 0; i < j.node_list.size(); ++i) out << (i ? ";" : "") << j.node_list[i];
    out << "\n";
    out << "coverage " << format_double(tl.coverage) << "\n";
    if (!tl.missing_nodes.empty()) {
        out << "missing ";
        for (size_t i = 0; i < tl.missing_nodes.size(); ++i) {
            out << (i ? ";" : "") << tl.missing_nodes[i];
        }
        out << "\n";
    }

    for (const auto& node : tl.nodes) {
        out << "[node " << node.hostname << "]\n";
        out << "cores " << node.cores << "\n";
        out << "sockets " << node.sockets << "\n";
        out << "mem_total_kb " << node.mem_total_kb << "\n";
        out << "node_coverage " << format_double(node.coverage) << "\n";
        for (const auto& [name, schema] : node.schemas) {
            out << "schema " << schema_spec(schema) << "\n";
        }
        for (const auto& [key, series] : node.series) {
            out << "series " << key.first << " " << key.second << "\n";
            for (const auto& p : series) {
                out << "d " << p.t0 << " " << p.t1 << " " << quality_name(p.quality);
                for (uint64_t v : p.values) out << " " << v;
                out << "\n";
            }
        }
        for (const auto& [key, snaps] : node.gauges) {
            out << "gauges " << key.first << " " << key.second << "\n";
            for (const auto& s : snaps) {
                out << "g " << s.t;
                for (uint64_t v : s.values) out << " " << v;
                out << "\n";
            }
        }
    }
    if (profile) write_profile_section(out, *profile);
    return std::move(out).str();
}

namespace {

[[noreturn]] void corrupt(size_t line_no, std::string_view why) {
    throw FormatError("entry line " + std::to_string(line_no) + ": " + std::string(why));
}

std::optional<double> parse_opt(std::string_view v, size_t line_no) {
    if (v == "undef") return std::nullopt;
    auto d = parse_f64(v);
    if (!d) corrupt(line_no, "bad number");
    return *d;
}

TypeSchema parse_schema_spec(const std::vector<std::string_view>& tokens, size_t line_no) {
    TypeSchema schema;
    schema.type_name = tokens[1];
    for (size_t i = 2; i < tokens.size(); ++i) {
        auto parts = split(tokens[i], ':');
        if (parts.size() != 3) corrupt(line_no, "bad schema field");
        auto unit = unit_from(parts[2]);
        if (!unit || (parts[1] != "c" && parts[1] != "g")) corrupt(line_no, "bad schema field");
        schema.fields.push_back({std::string(parts[0]),
                                 parts[1] == "c" ? FieldKind::counter : FieldKind::gauge, *unit});
    }
    if (schema.fields.empty()) corrupt(line_no, "schema with no fields");
    return schema;
}

} // namespace

StoredEntry parse_entry(std::string_view text) {
    StoredEntry entry;
    JobTimeline& tl = entry.timeline;
    NodeTimeline* node = nullptr;
    std::vector<DeltaPoint>* series = nullptr;
    std::vector<GaugeSnapshot>* gauges = nullptr;
    const TypeSchema* series_schema = nullptr;
    bool in_profile = false;
    size_t line_no = 0;

    for (auto line : split(text, '\n')) {
        ++line_no;
        if (line.empty()) continue;
        auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        std::string_view k = tokens[0];

        if (k == "[profile]") {
            in_profile = true;
            entry.profile.emplace();
            node = nullptr;
            series = nullptr;
            gauges = nullptr;
            continue;
        }
        if (k == "[node" && tokens.size() == 2 && tokens[1].ends_with("]")) {
            tl.nodes.emplace_back();
            node = &tl.nodes.back();
            node->hostname = std::string(tokens[1].substr(0, tokens[1].size() - 1));
            series = nullptr;
            gauges = nullptr;
            in_profile = false;
            continue;
        }

        if (in_profile) {
            JobProfile& p = *entry.profile;
            if (tokens.size() != 2) corrupt(line_no, "bad profile line");
            std::string_view v = tokens[1];
            if (k == "job_id") p.job_id = v;
            else if (k == "owner") p.owner = v;
            else if (k == "queue") p.queue = v;
            else if (k == "nodes") p.nodes = static_cast<uint32_t>(parse_u64(v).value_or(0));
            else if (k == "wayness") p.wayness = static_cast<uint32_t>(parse_u64(v).value_or(0));
            else if (k == "cores_per_node") {
                p.cores_per_node = static_cast<uint32_t>(parse_u64(v).value_or(0));
            } else if (k == "wall_hours") p.wall_hours = parse_opt(v, line_no).value_or(0);
            else if (k == "idle_fraction") p.idle_fraction = parse_opt(v, line_no);
            else if (k == "unused_mem_fraction") p.unused_mem_fraction = parse_opt(v, line_no);
            else if (k == "waste") p.waste = parse_opt(v, line_no);
            else if (k == "mean_bandwidth_gbps") p.mean_bandwidth_gbps = parse_opt(v, line_no);
            else if (k == "numa_cov") p.numa_cov = parse_opt(v, line_no);
            else if (k == "coverage") p.coverage = parse_opt(v, line_no).value_or(0);
            else if (k == "core_seconds") p.core_seconds = parse_opt(v, line_no).value_or(0);
            else if (k == "missing_nodes") {
                p.missing_nodes = static_cast<uint32_t>(parse_u64(v).value_or(0));
            } else corrupt(line_no, "unknown profile key");
            continue;
        }

        if (!node) {
            AccountingRecord& j = tl.job;
            if (k == "job" && tokens.size() == 2) j.job_id = tokens[1];
            else if (k == "owner" && tokens.size() == 2) j.owner = tokens[1];
            else if (k == "queue" && tokens.size() == 2) j.queue = tokens[1];
            else if (k == "nodes" && tokens.size() == 2) {
                j.nodes = static_cast<uint32_t>(parse_u64(tokens[1]).value_or(0));
            } else if (k == "wayness" && tokens.size() == 2) {
                j.wayness = static_cast<uint32_t>(parse_u64(tokens[1]).value_or(0));
            } else if (k == "start" && tokens.size() == 2) {
                j.start = parse_i64(tokens[1]).value_or(0);
            } else if (k == "end" && tokens.size() == 2) {
                j.end = parse_i64(tokens[1]).value_or(0);
            } else if (k == "node_list" && tokens.size() == 2) {
                for (auto h : split(tokens[1], ';')) j.node_list.emplace_back(h);
            } else if (k == "coverage" && tokens.size() == 2) {
                tl.coverage = parse_opt(tokens[1], line_no).value_or(0);
            } else if (k == "missing" && tokens.size() == 2) {
                for (auto h : split(tokens[1], ';')) tl.missing_nodes.emplace_back(h);
            } else corrupt(line_no, "unknown entry key");
            continue;
        }

        if (k == "cores" && tokens.size() == 2) {
            node->cores = static_cast<uint32_t>(parse_u64(tokens[1]).value_or(1));
        } else if (k == "sockets" && tokens.size() == 2) {
            node->sockets = static_cast<uint32_t>(parse_u64(tokens[1]).value_or(1));
        } else if (k == "mem_total_kb" && tokens.size() == 2) {
            node->mem_total_kb = parse_u64(tokens[1]).value_or(1);
        } else if (k == "node_coverage" && tokens.size() == 2) {
            node->coverage = parse_opt(tokens[1], line_no).value_or(0);
        } else if (k == "schema" && tokens.size() >= 3) {
            std::vector<std::string_view> rest(tokens.begin(), tokens.end());
            TypeSchema schema = parse_schema_spec(rest, line_no);
            node->schemas.emplace(schema.type_name, std::move(schema));
        } else if (k == "series" && tokens.size() == 3) {
            auto dev = parse_u64(tokens[2]);
            auto it = node->schemas.find(std::string(tokens[1]));
            if (!dev || it == node->schemas.end()) corrupt(line_no, "bad series header");
            series = &node->series[{std::string(tokens[1]), static_cast<uint32_t>(*dev)}];
            series_schema = &it->second;
            gauges = nullptr;
        } else if (k == "gauges" && tokens.size() == 3) {
            auto dev = parse_u64(tokens[2]);
            auto it = node->schemas.find(std::string(tokens[1]));
            if (!dev || it == node->schemas.end()) corrupt(line_no, "bad gauges header");
            gauges = &node->gauges[{std::string(tokens[1]), static_cast<uint32_t>(*dev)}];
            series_schema = &it->second;
            series = nullptr;
        } else if (k == "d") {
            if (!series || !series_schema) corrupt(line_no, "delta outside series");
            if (tokens.size() != 4 + series_schema->fields.size()) corrupt(line_no, "bad delta arity");
            DeltaPoint p;
            auto t0 = parse_i64(tokens[1]);
            auto t1 = parse_i64(tokens[2]);
            auto q = quality_from(tokens[3]);
            if (!t0 || !t1 || !q) corrupt(line_no, "bad delta line");
            p.t0 = *t0;
            p.t1 = *t1;
            p.quality = *q;
            for (size_t i = 4; i < tokens.size(); ++i) {
                auto v = parse_u64(tokens[i]);
                if (!v) corrupt(line_no, "bad delta value");
                p.values.push_back(*v);
            }
            series->push_back(std::move(p));
        } else if (k == "g") {
            if (!gauges || !series_schema) corrupt(line_no, "gauge outside gauges block");
            if (tokens.size() != 2 + series_schema->fields.size()) corrupt(line_no, "bad gauge arity");
            GaugeSnapshot s;
            auto t = parse_i64(tokens[1]);
            if (!t) corrupt(line_no, "bad gauge line");
            s.t = *t;
            for (size_t i = 2; i < tokens.size(); ++i) {
                auto v = parse_u64(tokens[i]);
                if (!v) corrupt(line_no, "bad gauge value");
                s.values.push_back(*v);
            }
            gauges->push_back(std::move(s));
        } else {
            corrupt(line_no, "unknown node key");
        }
    }
    if (tl.job.job_id.empty()) corrupt(0, "entry has no job id");
    return entry;
}

JobStore::JobStore(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_ / "jobs");
}

fs::path JobStore::entry_path(const std::string& job_id) const { return root_ / "jobs" / job_id; }

void JobStore::put(const JobTimeline& tl, const JobProfile* profile) {
    if (!is_token(tl.job.job_id)) throw FormatError("store: bad job id");
    atomic_write_file(entry_path(tl.job.job_id), serialize_entry(tl, profile));
}

void JobStore::put_profile(const JobProfile& profile) {
    auto existing = get(profile.job_id);
    if (!existing) throw IoError("store: no entry for job " + profile.job_id);
    atomic_write_file(entry_path(profile.job_id),
                      serialize_entry(existing->timeline, &profile));
}

std::optional<StoredEntry> JobStore::get(const std::string& job_id) const {
    const fs::path p = entry_path(job_id);
    if (!fs::exists(p)) return std::nullopt;
    return parse_entry(read_file(p));
}

std::vector<std::string> JobStore::job_ids() const {
    std::vector<std::string> out;
    const fs::path dir = root_ / "jobs";
    if (fs::exists(dir)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file()) out.push_back(entry.path().filename().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

size_t JobStore::scan(const std::function<void(StoredEntry&&)>& fn,
                      std::vector<std::string>* corrupt_out) const {
    size_t delivered = 0;
    for (const auto& id : job_ids()) {
        StoredEntry entry;
        try {
            entry = parse_entry(read_file(entry_path(id)));
        } catch (const std::exception& e) {
            if (corrupt_out) corrupt_out->push_back(id + ": " + e.what());
            continue;
        }
        fn(std::move(entry));
        ++delivered;
    }
    return delivered;
}

size_t JobStore::scan_profiles(const std::function<void(JobProfile&&)>& fn,
                               std::vector<std::string>* corrupt_out) const {
    size_t delivered = 0;
    scan(
        [&](StoredEntry&& e) {
            if (e.profile) {
                fn(std::move(*e.profile));
                ++delivered;
            }
        },
        corrupt_out);
    return delivered;
}

void JobStore::write_index() const {
    std::string text;
    for (const auto& id : job_ids()) text += id + "\n";
    atomic_write_file(root_ / "index", text);
}

} // namespace jobmon
