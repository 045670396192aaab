// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0

#include "jobmon/record_format.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace jobmon {

namespace {

constexpr std::string_view kUnitNames[] = {"cs", "kb", "b", "p", "ev", "none"};

void require(bool cond, std::string_view what) {
    if (!cond) throw FormatError(std::string(what));
}

std::string join_jobs(const std::vector<std::string>& ids) {
    if (ids.empty()) return "-";
    std::string out;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ',';
        out += ids[i];
    }
    return out;
}

std::string_view mark_word(MarkKind k) {
    switch (k) {
        case MarkKind::begin: return "%begin";
        case MarkKind::end: return "%end";
        case MarkKind::rotate: return "%rotate";
    }
    return "%rotate";
}

} // namespace

std::string_view unit_name(Unit u) { return kUnitNames[static_cast<size_t>(u)]; }

std::optional<Unit> unit_from(std::string_view s) {
    for (size_t i = 0; i < std::size(kUnitNames); ++i) {
        if (s == kUnitNames[i]) return static_cast<Unit>(i);
    }
    return std::nullopt;
}

int TypeSchema::field_index(std::string_view name) const {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

const TypeSchema* FileHeader::find_schema(std::string_view type_name) const {
    for (const auto& s : schemas) {
        if (s.type_name == type_name) return &s;
    }
    return nullptr;
}

std::string write_header(const FileHeader& h) {
    require(is_token(h.schema_version), "invalid schema_version");
    require(is_token(h.hostname), "invalid hostname");
    require(h.sockets >= 1 && h.cores >= h.sockets, "requires cores >= sockets >= 1");
    require(h.mem_total_kb >= 1, "mem_total_kb must be positive");

    std::string out;
    out += "$schema_version " + h.schema_version + "\n";
    out += "$hostname " + h.hostname + "\n";
    out += "$cores " + std::to_string(h.cores) + "\n";
    out += "$sockets " + std::to_string(h.sockets) + "\n";
    out += "$mem_total_kb " + std::to_string(h.mem_total_kb) + "\n";
    for (const auto& [key, value] : h.extras) {
        require(is_token(key), "invalid metadata key: " + key);
        require(value.find('\n') == std::string::npos, "metadata value contains newline");
        out += "$" + key + " " + value + "\n";
    }

    std::set<std::string_view> seen_types;
    for (const auto& schema : h.schemas) {
        require(is_identifier(schema.type_name), "invalid type name: " + schema.type_name);
        require(seen_types.insert(schema.type_name).second,
                "duplicate type name: " + schema.type_name);
        require(!schema.fields.empty(), "schema with no fields: " + schema.type_name);
        out += "!" + schema.type_name;
        std::set<std::string_view> seen_fields;
        for (const auto& f : schema.fields) {
            require(is_identifier(f.name), "invalid field name: " + f.name);
            require(seen_fields.insert(f.name).second,
                    "duplicate field " + f.name + " in " + schema.type_name);
            out += " " + f.name + (f.kind == FieldKind::counter ? ":c:" : ":g:");
            out += unit_name(f.unit);
        }
        out += "\n";
    }
    return out;
}

std::string append_group(const FileHeader& h, const RecordGroup& g) {
    std::vector<std::string> ids = g.job_ids;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (const auto& id : ids) require(is_token(id), "invalid job id: " + id);

    std::string out = std::to_string(g.timestamp) + " " + join_jobs(ids) + "\n";
    std::set<std::pair<std::string_view, uint32_t>> seen;
    for (const auto& s : g.samples) {
        const TypeSchema* schema = h.find_schema(s.type_name);
        require(schema != nullptr, "sample references undeclared type: " + s.type_name);
        require(s.values.size() == schema->fields.size(),
                "sample arity mismatch for " + s.type_name);
        require(seen.insert({s.type_name, s.device_id}).second,
                "duplicate (type, device) in group: " + s.type_name);
        out += s.type_name + " " + std::to_string(s.device_id);
        for (uint64_t v : s.values) out += " " + std::to_string(v);
        out += "\n";
    }
    return out;
}

std::string append_mark(const Mark& m) {
    std::string out = std::to_string(m.timestamp) + " -\n";
    out += mark_word(m.kind);
    if (m.kind != MarkKind::rotate) {
        require(is_token(m.job_id), "invalid mark job id");
        out += " " + m.job_id;
    } else {
        require(m.job_id.empty(), "rotate mark carries a job id");
    }
    if (!m.warning.empty()) {
        require(is_token(m.warning), "invalid warning annotation");
        out += " " + m.warning;
    }
    out += "\n";
    return out;
}

std::string append_event(const FileHeader& h, const FileEvent& event) {
    if (const auto* g = std::get_if<RecordGroup>(&event)) return append_group(h, *g);
    return append_mark(std::get<Mark>(event));
}

void ParseReport::note(size_t line_no, std::string_view what) {
    if (issues.size() < 20) {
        issues.push_back("line " + std::to_string(line_no) + ": " + std::string(what));
    }
}

namespace {

struct PendingLine {
    int64_t timestamp;
    std::vector<std::string> job_ids;
};

class Scanner {
public:
    Scanner(ParseMode mode, const std::function<void(FileEvent&&)>& sink, ParseReport& report)
        : mode_(mode), sink_(sink), report_(report) {}

    FileHeader run(std::istream& in) {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            consume(line);
        }
        flush_pending();
        if (!header_done_) finalize_header();
        return std::move(header_);
    }

private:
    void consume(std::string_view line) {
        const char c = line[0];
        if (c == '$') return metadata_line(line);
        if (c == '!') return schema_line(line);
        if (!header_done_) finalize_header();
        if (c >= '0' && c <= '9') return timestamp_line(line);
        if (c == '%') return mark_line(line);
        if (c >= 'a' && c <= 'z') return sample_line(line);
        skip(line, "unrecognized line");
    }

    void skip(std::string_view line, std::string_view why) {
        (void)line;
        if (mode_ == ParseMode::strict) {
            throw FormatError("line " + std::to_string(line_no_) + ": " + std::string(why));
        }
        ++report_.skipped_lines;
        report_.note(line_no_, why);
    }

    void metadata_line(std::string_view line) {
        size_t space = line.find(' ');
        std::string_view key = line.substr(1, space == std::string_view::npos ? space : space - 1);
        std::string_view value =
            space == std::string_view::npos ? std::string_view{} : line.substr(space + 1);
        if (!is_token(key)) return skip(line, "invalid metadata key");
        if (!header_done_) {
            if (key == "schema_version") { header_.schema_version = value; required_ |= 1; }
            else if (key == "hostname") { header_.hostname = value; required_ |= 2; }
            else if (key == "cores") known_u32(line, value, header_.cores, 4);
            else if (key == "sockets") known_u32(line, value, header_.sockets, 8);
            else if (key == "mem_total_kb") known_u64(line, value, header_.mem_total_kb, 16);
            else header_.extras.emplace_back(key, value);
        } else {
            header_.extras.emplace_back(key, value);
        }
    }

    void known_u32(std::string_view line, std::string_view value, uint32_t& out, int bit) {
        auto v = parse_u64(value);
        if (!v || *v == 0 || *v > UINT32_MAX) return skip(line, "bad header count");
        out = static_cast<uint32_t>(*v);
        required_ |= bit;
    }

    void known_u64(std::string_view line, std::string_view value, uint64_t& out, int bit) {
        auto v = parse_u64(value);
        if (!v || *v == 0) return skip(line, "bad header count");
        out = *v;
        required_ |= bit;
    }

    void schema_line(std::string_view line) {
        if (header_done_) return skip(line, "schema line after records");
        auto tokens = split_ws(line.substr(1));
        if (tokens.empty() || !is_identifier(tokens[0])) return skip(line, "bad schema name");
        if (tokens.size() < 2) return skip(line, "schema with no fields");
        TypeSchema schema;
        schema.type_name = tokens[0];
        if (header_.find_schema(schema.type_name)) return skip(line, "duplicate schema");
        for (size_t i = 1; i < tokens.size(); ++i) {
            auto parts = split(tokens[i], ':');
            if (parts.size() != 3 || !is_identifier(parts[0])) return skip(line, "bad field spec");
            FieldSpec f;
            f.name = parts[0];
            if (parts[1] == "c") f.kind = FieldKind::counter;
            else if (parts[1] == "g") f.kind = FieldKind::gauge;
            else return skip(line, "bad field kind");
            auto u = unit_from(parts[2]);
            if (!u) return skip(line, "bad field unit");
            f.unit = *u;
            if (schema.field_index(f.name) >= 0) return skip(line, "duplicate field name");
            schema.fields.push_back(std::move(f));
        }
        header_.schemas.push_back(std::move(schema));
    }

    void finalize_header() {
        // A parseable file needs its self-description up front, in any mode.
        if (required_ != 31) {
            throw FormatError("line " + std::to_string(line_no_) +
                              ": missing or incomplete header");
        }
        if (!is_token(header_.hostname)) throw FormatError("header missing valid $hostname");
        if (header_.sockets < 1 || header_.cores < header_.sockets) {
            throw FormatError("header requires cores >= sockets >= 1");
        }
        header_done_ = true;
    }

    void timestamp_line(std::string_view line) {
        flush_pending();
        auto tokens = split_ws(line);
        auto ts = tokens.empty() ? std::nullopt : parse_i64(tokens[0]);
        if (tokens.size() != 2 || !ts) {
            drop_samples_ = true;
            return skip(line, "bad timestamp line");
        }
        PendingLine p;
        p.timestamp = *ts;
        if (tokens[1] != "-") {
            for (auto id : split(tokens[1], ',')) {
                if (!is_token(id)) {
                    drop_samples_ = true;
                    return skip(line, "bad job id list");
                }
                p.job_ids.emplace_back(id);
            }
            std::sort(p.job_ids.begin(), p.job_ids.end());
            p.job_ids.erase(std::unique(p.job_ids.begin(), p.job_ids.end()), p.job_ids.end());
        }
        drop_samples_ = false;
        pending_ = std::move(p);
    }

    void mark_line(std::string_view line) {
        if (!pending_) return skip(line, "mark without timestamp line");
        auto tokens = split_ws(line);
        Mark m;
        m.timestamp = pending_->timestamp;
        size_t expect = 1;
        if (tokens[0] == "%begin") { m.kind = MarkKind::begin; expect = 2; }
        else if (tokens[0] == "%end") { m.kind = MarkKind::end; expect = 2; }
        else if (tokens[0] == "%rotate") { m.kind = MarkKind::rotate; }
        else { pending_.reset(); return skip(line, "unknown mark"); }
        if (tokens.size() < expect || tokens.size() > expect + 1) {
            pending_.reset();
            return skip(line, "bad mark arity");
        }
        if (expect == 2) {
            if (!is_token(tokens[1])) { pending_.reset(); return skip(line, "bad mark job id"); }
            m.job_id = tokens[1];
        }
        if (tokens.size() == expect + 1) m.warning = tokens[expect];
        pending_.reset();
        sink_(std::move(m));
    }

    void sample_line(std::string_view line) {
        if (pending_) {
            if (pending_->timestamp <= last_group_ts_) {
                pending_.reset();
                drop_samples_ = true;
                skip(line, "group timestamp not increasing");
                return;
            }
            group_ = RecordGroup{pending_->timestamp, std::move(pending_->job_ids), {}};
            seen_devices_.clear();
            pending_.reset();
        }
        if (!group_) {
            if (drop_samples_) { ++report_.skipped_lines; return; }
            return skip(line, "sample outside a record group");
        }
        auto tokens = split_ws(line);
        const TypeSchema* schema = header_.find_schema(tokens[0]);
        if (!schema) return skip(line, "undeclared sample type");
        if (tokens.size() < 2) return skip(line, "bad sample line");
        auto dev = parse_u64(tokens[1]);
        if (!dev || *dev > UINT32_MAX) return skip(line, "bad device id");
        if (tokens.size() - 2 != schema->fields.size()) return skip(line, "sample arity mismatch");
        Sample s;
        s.type_name = tokens[0];
        s.device_id = static_cast<uint32_t>(*dev);
        s.values.reserve(tokens.size() - 2);
        for (size_t i = 2; i < tokens.size(); ++i) {
            auto v = parse_u64(tokens[i]);
            if (!v) return skip(line, "bad sample value");
            s.values.push_back(*v);
        }
        if (!seen_devices_.insert({s.type_name, s.device_id}).second) {
            return skip(line, "duplicate (type, device) in group");
        }
        group_->samples.push_back(std::move(s));
    }

    void flush_pending() {
        if (pending_) {
            // Bare timestamp line: a record group with zero samples.
            if (pending_->timestamp <= last_group_ts_) {
                skip("", "group timestamp not increasing");
            } else {
                last_group_ts_ = pending_->timestamp;
                sink_(RecordGroup{pending_->timestamp, std::move(pending_->job_ids), {}});
            }
            pending_.reset();
        }
        if (group_) {
            last_group_ts_ = group_->timestamp;
            sink_(std::move(*group_));
            group_.reset();
        }
    }

    ParseMode mode_;
    const std::function<void(FileEvent&&)>& sink_;
    ParseReport& report_;

    FileHeader header_;
    bool header_done_{false};
    int required_{0};
    size_t line_no_{0};

    std::optional<PendingLine> pending_;
    std::optional<RecordGroup> group_;
    std::set<std::pair<std::string, uint32_t>> seen_devices_;
    int64_t last_group_ts_{INT64_MIN};
    bool drop_samples_{false};
};

} // namespace

FileHeader scan_file(std::istream& in, ParseMode mode,
                     const std::function<void(FileEvent&&)>& sink, ParseReport& report) {
    Scanner scanner(mode, sink, report);
    return scanner.run(in);
}

ParsedFile parse_file(std::istream& in, ParseMode mode) {
    ParsedFile out;
    out.header = scan_file(in, mode, [&](FileEvent&& e) { out.events.push_back(std::move(e)); },
                           out.report);
    return out;
}

ParsedFile parse_file_text(std::string_view text, ParseMode mode) {
    std::istringstream in{std::string(text)};
    return parse_file(in, mode);
}

ParsedFile parse_stats_file(const std::filesystem::path& path, ParseMode mode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_file(in, mode);
}

RecordWriter::RecordWriter(const std::filesystem::path& path, const FileHeader& header)
    : header_(header), path_(path) {
    std::filesystem::create_directories(path.parent_path());
    fd_ = ::open(path.c_str(), O_CREAT | O_WRONLY | O_APPEND, 0644);
    if (fd_ < 0) throw IoError("cannot open " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw IoError("cannot lock " + path.string());
    }
    struct stat st {};
    if (::fstat(fd_, &st) != 0) st.st_size = 0;
    if (st.st_size == 0) {
        write(write_header(header_));
    } else {
        // Resuming a day file: recover the schema set and the last group
        // timestamp so appends stay monotone across hook invocations.
        ParsedFile existing = parse_stats_file(path, ParseMode::lenient);
        if (existing.header.schemas != header_.schemas) {
            ::close(fd_);
            fd_ = -1;
            throw FormatError("schema set changed mid-file: " + path.string());
        }
        header_ = std::move(existing.header);
        for (const auto& event : existing.events) {
            if (const auto* g = std::get_if<RecordGroup>(&event)) last_ts_ = g->timestamp;
        }
    }
}

RecordWriter::~RecordWriter() {
    if (fd_ >= 0) ::close(fd_);
}

void RecordWriter::write(std::string_view text) {
    size_t off = 0;
    while (off < text.size()) {
        ssize_t n = ::write(fd_, text.data() + off, text.size() - off);
        if (n < 0) throw IoError("write failed: " + path_.string());
        off += static_cast<size_t>(n);
    }
}

void RecordWriter::group(const RecordGroup& g) {
    if (g.timestamp <= last_ts_) {
        throw FormatError("group timestamp not increasing in " + path_.string());
    }
    write(append_group(header_, g));
    last_ts_ = g.timestamp;
}

void RecordWriter::mark(const Mark& m) { write(append_mark(m)); }

void RecordWriter::metadata(std::string_view key, std::string_view value) {
    if (!is_token(key)) throw FormatError("invalid metadata key");
    write("$" + std::string(key) + " " + std::string(value) + "\n");
}

} // namespace jobmon
