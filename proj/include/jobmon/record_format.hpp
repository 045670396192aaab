// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0
//
// The unified self-describing plain-text record format shared by every
// collector output file. UTF-8, Unix newlines, single-space separated.
//
//   $schema_version 1            metadata, one "$key value" per line;
//   $hostname n001               the five keys below are required and come
//   $cores 16                    first; unknown keys are kept as opaque
//   $sockets 4                   extras
//   $mem_total_kb 33554432
//   !cpu user:c:cs idle:c:cs     one "!" line per type schema: name,
//                                field:kind:unit..., kind c=counter g=gauge,
//                                unit one of cs|kb|b|p|ev|none
//   1325808000 271828,271830     record group: timestamp + comma-joined job
//   cpu 0 430 93000              ids ("-" when idle), then one line per
//   cpu 1 431 92999              sample: type, device id, one value per
//                                schema field, in schema order
//   1325808600 -
//   %begin 271828                marks: %begin <job> / %end <job> / %rotate,
//                                each preceded by a timestamp line whose job
//                                field is "-"; an optional trailing token
//                                carries a warning annotation
//
// Group timestamps are strictly increasing within a file; marks are exempt.
// All values are unsigned 64-bit decimal integers, gauges included.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "jobmon/util.hpp"

namespace jobmon {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FieldKind : uint8_t { counter, gauge };
enum class Unit : uint8_t { cs, kb, b, p, ev, none };

std::string_view unit_name(Unit u);
std::optional<Unit> unit_from(std::string_view s);

struct FieldSpec {
    std::string name;
    FieldKind kind{FieldKind::counter};
    Unit unit{Unit::none};

    bool operator==(const FieldSpec&) const = default;
};

struct TypeSchema {
    std::string type_name;
    std::vector<FieldSpec> fields;

    int field_index(std::string_view name) const;
    bool operator==(const TypeSchema&) const = default;
};

struct FileHeader {
    std::string schema_version{"1"};
    std::string hostname;
    uint32_t cores{1};
    uint32_t sockets{1};
    uint64_t mem_total_kb{1};
    std::vector<std::pair<std::string, std::string>> extras;
    std::vector<TypeSchema> schemas;

    const TypeSchema* find_schema(std::string_view type_name) const;
    bool operator==(const FileHeader&) const = default;
};

struct Sample {
    std::string type_name;
    uint32_t device_id{0};
    std::vector<uint64_t> values;

    bool operator==(const Sample&) const = default;
};

struct RecordGroup {
    int64_t timestamp{0};
    std::vector<std::string> job_ids; // sorted, unique
    std::vector<Sample> samples;

    bool operator==(const RecordGroup&) const = default;
};

enum class MarkKind : uint8_t { begin, end, rotate };

struct Mark {
    MarkKind kind{MarkKind::rotate};
    std::string job_id;  // empty for rotate
    int64_t timestamp{0};
    std::string warning; // optional annotation token, empty if none

    bool operator==(const Mark&) const = default;
};

using FileEvent = std::variant<RecordGroup, Mark>;

/// Serializes the header. Identical headers produce identical bytes.
/// Throws FormatError when an invariant is violated.
std::string write_header(const FileHeader& header);

/// Serializes one record group against the file's declared schemas.
std::string append_group(const FileHeader& header, const RecordGroup& group);

/// Serializes one mark (timestamp line with "-" job field, then the % line).
std::string append_mark(const Mark& mark);

std::string append_event(const FileHeader& header, const FileEvent& event);

enum class ParseMode : uint8_t { lenient, strict };

struct ParseReport {
    size_t skipped_lines{0};
    std::vector<std::string> issues; // first few problems, with line numbers

    void note(size_t line_no, std::string_view what);
};

/// Streaming parse: single pass, memory proportional to the largest group.
/// The sink is invoked once per record group or mark, in file order.
/// Lenient mode skips and counts malformed lines; strict mode throws
/// FormatError with the line number on the first one. A missing or invalid
/// header is a hard error in both modes. "$" lines appearing after the
/// header fold into header extras in encounter order.
FileHeader scan_file(std::istream& in, ParseMode mode,
                     const std::function<void(FileEvent&&)>& sink,
                     ParseReport& report);

struct ParsedFile {
    FileHeader header;
    std::vector<FileEvent> events;
    ParseReport report;
};

ParsedFile parse_file(std::istream& in, ParseMode mode = ParseMode::lenient);
ParsedFile parse_file_text(std::string_view text, ParseMode mode = ParseMode::lenient);
ParsedFile parse_stats_file(const std::filesystem::path& path, ParseMode mode = ParseMode::lenient);

/// Appender bound to one file: writes the header when the file is new,
/// enforces strictly increasing group timestamps, serializes hook marks and
/// mid-file metadata. Takes an advisory exclusive flock while open.
class RecordWriter {
public:
    /// Opens (or creates) `path` for appending. When the file is created,
    /// writes `header`; when it exists, `header` must describe the same
    /// schemas the file was created with.
    RecordWriter(const std::filesystem::path& path, const FileHeader& header);
    ~RecordWriter();

    RecordWriter(const RecordWriter&) = delete;
    RecordWriter& operator=(const RecordWriter&) = delete;

    void group(const RecordGroup& g);
    void mark(const Mark& m);
    void metadata(std::string_view key, std::string_view value);

    const FileHeader& header() const { return header_; }
    const std::filesystem::path& path() const { return path_; }
    int64_t last_group_timestamp() const { return last_ts_; }

private:
    void write(std::string_view text);

    FileHeader header_;
    std::filesystem::path path_;
    int fd_{-1};
    int64_t last_ts_{INT64_MIN};
};

} // namespace jobmon
