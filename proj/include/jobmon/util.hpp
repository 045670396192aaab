// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace jobmon {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Field and type names: [a-z][a-z0-9_]*
bool is_identifier(std::string_view s);

/// Hostnames, job ids, metadata values: printable, no whitespace, and not
/// the "-" sentinel used for the empty job set.
bool is_token(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string_view> split_ws(std::string_view s);

std::optional<uint64_t> parse_u64(std::string_view s);
std::optional<int64_t> parse_i64(std::string_view s);
std::optional<double> parse_f64(std::string_view s);

/// Shortest round-trip decimal representation; byte-stable across runs.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& p);

/// Write-temp-then-rename. The rename is atomic on POSIX filesystems.
void atomic_write_file(const std::filesystem::path& p, std::string_view content);

/// UTC calendar stamp YYYYMMDD of a unix timestamp.
std::string day_stamp(int64_t epoch_sec);
int64_t day_start(int64_t epoch_sec);

uint64_t splitmix64(uint64_t x);

} // namespace jobmon
