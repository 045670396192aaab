// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0
//
// Embedded on-disk job store: one structured-text entry per job under
// jobs/<job_id>, plus a plain index file. Puts are write-temp-then-rename,
// re-puts overwrite, serialization is byte-deterministic so re-running the
// same ingestion yields a byte-identical store.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "jobmon/ingest.hpp"
#include "jobmon/metrics.hpp"

namespace jobmon {

struct StoredEntry {
    JobTimeline timeline;
    std::optional<JobProfile> profile;
};

std::string serialize_entry(const JobTimeline& tl, const JobProfile* profile);
StoredEntry parse_entry(std::string_view text); // throws FormatError on corruption

class JobStore {
public:
    explicit JobStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    void put(const JobTimeline& tl, const JobProfile* profile = nullptr);
    void put_profile(const JobProfile& profile); // preserves the stored timeline

    std::optional<StoredEntry> get(const std::string& job_id) const;

    /// Sorted job ids, from the jobs directory.
    std::vector<std::string> job_ids() const;

    /// Streams entries in job_id order. Corrupt entries are reported and
    /// skipped. Returns the number of entries delivered.
    size_t scan(const std::function<void(StoredEntry&&)>& fn,
                std::vector<std::string>* corrupt = nullptr) const;
    size_t scan_profiles(const std::function<void(JobProfile&&)>& fn,
                         std::vector<std::string>* corrupt = nullptr) const;

    /// Rewrites the index file from the jobs directory.
    void write_index() const;

private:
    std::filesystem::path entry_path(const std::string& job_id) const;
    std::filesystem::path root_;
};

} // namespace jobmon
