// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0

#include "jobmon/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "jobmon/util.hpp"

namespace jobmon {

AccountingLoad load_accounting(std::istream& in) {
    AccountingLoad out;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("accounting: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "job_id,owner,queue,nodes,wayness,start,end,node_list") {
        throw FormatError("accounting: unexpected header row: " + line);
    }
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto reject = [&](std::string_view why) {
            out.row_errors.push_back("row " + std::to_string(row) + ": " + std::string(why));
        };
        auto cols = split(line, ',');
        if (cols.size() != 8) { reject("expected 8 columns"); continue; }
        AccountingRecord r;
        r.job_id = cols[0];
        r.owner = cols[1];
        r.queue = cols[2];
        if (!is_token(r.job_id) || !is_token(r.owner) || !is_token(r.queue)) {
            reject("bad job_id/owner/queue");
            continue;
        }
        auto nodes = parse_u64(cols[3]);
        auto wayness = parse_u64(cols[4]);
        auto start = parse_i64(cols[5]);
        auto end = parse_i64(cols[6]);
        if (!nodes || *nodes == 0 || *nodes > UINT32_MAX) { reject("bad nodes"); continue; }
        if (!wayness || *wayness == 0 || *wayness > UINT32_MAX) { reject("bad wayness"); continue; }
        if (!start || !end) { reject("bad start/end"); continue; }
        if (*end <= *start) { reject("end <= start"); continue; }
        r.nodes = static_cast<uint32_t>(*nodes);
        r.wayness = static_cast<uint32_t>(*wayness);
        r.start = *start;
        r.end = *end;
        bool ok = true;
        for (auto host : split(cols[7], ';')) {
            if (!is_token(host)) { ok = false; break; }
            r.node_list.emplace_back(host);
        }
        if (!ok) { reject("bad node_list"); continue; }
        if (r.node_list.size() != r.nodes) { reject("node_list length != nodes"); continue; }
        out.records.push_back(std::move(r));
    }
    return out;
}

AccountingLoad load_accounting_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return load_accounting(in);
}

std::string_view quality_name(DeltaQuality q) {
    switch (q) {
        case DeltaQuality::ok: return "ok";
        case DeltaQuality::wrapped: return "wrapped";
        case DeltaQuality::reset_dropped: return "reset_dropped";
        case DeltaQuality::gap: return "gap";
    }
    return "ok";
}

std::optional<DeltaQuality> quality_from(std::string_view s) {
    if (s == "ok") return DeltaQuality::ok;
    if (s == "wrapped") return DeltaQuality::wrapped;
    if (s == "reset_dropped") return DeltaQuality::reset_dropped;
    if (s == "gap") return DeltaQuality::gap;
    return std::nullopt;
}

std::vector<DeltaPoint> delta_series(const TypeSchema& schema, std::span<const RawPoint> samples,
                                     const DeltaOptions& opts) {
    std::vector<DeltaPoint> out;
    if (samples.size() < 2) return out;
    for (size_t i = 1; i < samples.size(); ++i) {
        const RawPoint& prev = samples[i - 1];
        const RawPoint& curr = samples[i];
        if (curr.t <= prev.t) continue; // defensive: inputs are time-ordered
        if (prev.values.size() != schema.fields.size() ||
            curr.values.size() != schema.fields.size()) {
            continue;
        }
        const int64_t dt = curr.t - prev.t;
        const bool boundary = curr.file_ord != prev.file_ord;
        DeltaPoint p{prev.t, curr.t, {}, DeltaQuality::ok};
        if (dt > opts.gap_threshold()) p.quality = DeltaQuality::gap;

        for (size_t f = 0; f < schema.fields.size(); ++f) {
            if (schema.fields[f].kind == FieldKind::gauge) {
                p.values.push_back(curr.values[f]);
                continue;
            }
            const uint64_t a = prev.values[f];
            const uint64_t b = curr.values[f];
            if (b >= a) {
                p.values.push_back(b - a);
                continue;
            }
            if (boundary) {
                // Rotation or header boundary: a decrease is a device reset.
                p.quality = DeltaQuality::reset_dropped;
                p.values.push_back(0);
                continue;
            }
            const uint64_t wrapped = b - a; // modular 2^64
            if (static_cast<double>(wrapped) >
                opts.max_rate_for(schema.fields[f].unit) * static_cast<double>(dt)) {
                p.quality = DeltaQuality::reset_dropped;
                p.values.push_back(0);
            } else {
                if (p.quality != DeltaQuality::reset_dropped) p.quality = DeltaQuality::wrapped;
                p.values.push_back(wrapped);
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

void NodeBucket::observe_header(const FileHeader& h) {
    if (!seen_header) {
        cores = h.cores;
        sockets = h.sockets;
        mem_total_kb = h.mem_total_kb;
        seen_header = true;
    }
    for (const auto& s : h.schemas) schemas.emplace(s.type_name, s);
}

void NodeBucket::add_group(uint32_t file_ord, const RecordGroup& g) {
    for (const auto& s : g.samples) {
        raw[{s.type_name, s.device_id}].push_back(RawPoint{g.timestamp, file_ord, s.values});
    }
}

bool group_selects(const RecordGroup& g, const AccountingRecord& job, int64_t tick) {
    if (g.timestamp < job.start - tick || g.timestamp > job.end + tick) return false;
    return std::binary_search(g.job_ids.begin(), g.job_ids.end(), job.job_id);
}

namespace {

/// Clips a delta interval to [start, end], scaling counter deltas by the
/// covered fraction. Returns false when the interval is fully outside.
bool clip_point(const TypeSchema& schema, DeltaPoint& p, int64_t start, int64_t end) {
    const int64_t a = std::max(p.t0, start);
    const int64_t b = std::min(p.t1, end);
    if (b <= a) return false;
    if (a != p.t0 || b != p.t1) {
        const double frac =
            static_cast<double>(b - a) / static_cast<double>(p.t1 - p.t0);
        for (size_t f = 0; f < p.values.size(); ++f) {
            if (f < schema.fields.size() && schema.fields[f].kind == FieldKind::counter) {
                p.values[f] = static_cast<uint64_t>(
                    std::llround(static_cast<double>(p.values[f]) * frac));
            }
        }
        p.t0 = a;
        p.t1 = b;
    }
    return true;
}

} // namespace

NodeTimeline finish_node(NodeBucket&& bucket, const AccountingRecord& job,
                         const DeltaOptions& opts) {
    NodeTimeline nt;
    nt.hostname = std::move(bucket.hostname);
    nt.cores = bucket.cores;
    nt.sockets = bucket.sockets;
    nt.mem_total_kb = bucket.mem_total_kb;
    nt.schemas = std::move(bucket.schemas);

    for (auto& [key, pts] : bucket.raw) {
        auto it = nt.schemas.find(key.first);
        if (it == nt.schemas.end()) continue;
        const TypeSchema& schema = it->second;
        std::stable_sort(pts.begin(), pts.end(),
                         [](const RawPoint& x, const RawPoint& y) { return x.t < y.t; });
        const bool has_counter = std::any_of(schema.fields.begin(), schema.fields.end(),
                                             [](const FieldSpec& f) {
                                                 return f.kind == FieldKind::counter;
                                             });
        if (has_counter) {
            std::vector<DeltaPoint> series = delta_series(schema, pts, opts);
            std::vector<DeltaPoint> clipped;
            for (auto& p : series) {
                if (clip_point(schema, p, job.start, job.end)) clipped.push_back(std::move(p));
            }
            if (!clipped.empty()) nt.series.emplace(key, std::move(clipped));
        } else {
            std::vector<GaugeSnapshot> snaps;
            for (auto& p : pts) {
                if (p.t >= job.start && p.t <= job.end && p.values.size() == schema.fields.size()) {
                    snaps.push_back(GaugeSnapshot{p.t, std::move(p.values)});
                }
            }
            if (!snaps.empty()) nt.gauges.emplace(key, std::move(snaps));
        }
    }

    // Coverage: the best-covered counter series (cpu in practice; devices of
    // one node share group timestamps).
    int64_t covered = 0;
    for (const auto& [key, series] : nt.series) {
        int64_t series_covered = 0;
        for (const auto& p : series) {
            if (p.quality == DeltaQuality::ok || p.quality == DeltaQuality::wrapped) {
                series_covered += p.t1 - p.t0;
            }
        }
        covered = std::max(covered, series_covered);
    }
    const int64_t wall = job.end - job.start;
    nt.coverage = wall > 0 ? std::min(1.0, static_cast<double>(covered) / wall) : 0.0;
    return nt;
}

JobTimeline assemble_from_buckets(const AccountingRecord& job,
                                  std::map<std::string, NodeBucket>&& buckets,
                                  const DeltaOptions& opts) {
    JobTimeline tl;
    tl.job = job;
    double coverage_sum = 0;
    for (const auto& host : job.node_list) {
        auto it = buckets.find(host);
        if (it == buckets.end() || !it->second.has_data()) {
            tl.missing_nodes.push_back(host);
            continue;
        }
        it->second.hostname = host;
        NodeTimeline nt = finish_node(std::move(it->second), job, opts);
        coverage_sum += nt.coverage;
        tl.nodes.push_back(std::move(nt));
    }
    tl.coverage = job.node_list.empty() ? 0.0 : coverage_sum / job.node_list.size();
    return tl;
}

JobTimeline assemble_job(const AccountingRecord& job,
                         const std::map<std::string, std::vector<const ParsedFile*>>& files_by_node,
                         const DeltaOptions& opts) {
    std::map<std::string, NodeBucket> buckets;
    for (const auto& host : job.node_list) {
        auto it = files_by_node.find(host);
        if (it == files_by_node.end()) continue;
        NodeBucket& bucket = buckets[host];
        uint32_t file_ord = 0;
        for (const ParsedFile* file : it->second) {
            bucket.observe_header(file->header);
            for (const auto& event : file->events) {
                if (const auto* g = std::get_if<RecordGroup>(&event)) {
                    if (group_selects(*g, job, opts.nominal_tick)) {
                        bucket.add_group(file_ord, *g);
                    }
                }
            }
            ++file_ord;
        }
    }
    return assemble_from_buckets(job, std::move(buckets), opts);
}

std::vector<AccountingRecord> filter_jobs(
    std::span<const AccountingRecord> jobs, double min_node_hours,
    const std::optional<std::set<std::string>>& production_queues) {
    std::vector<AccountingRecord> out;
    for (const auto& j : jobs) {
        if (j.node_hours() < min_node_hours) continue;
        if (production_queues && !production_queues->contains(j.queue)) continue;
        out.push_back(j);
    }
    return out;
}

} // namespace jobmon
