// Byte-level directory tree comparison for idempotence checks.

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "jobmon/util.hpp"

namespace testgen {

inline std::map<std::string, std::string> tree_contents(const std::filesystem::path& root) {
    std::map<std::string, std::string> out;
    if (!std::filesystem::exists(root)) return out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            out[std::filesystem::relative(e.path(), root).string()] = jobmon::read_file(e.path());
        }
    }
    return out;
}

inline bool trees_identical(const std::filesystem::path& a, const std::filesystem::path& b) {
    return tree_contents(a) == tree_contents(b);
}

} // namespace testgen
