// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "jobmon/collectors.hpp"

namespace jobmon {

struct NodeShape {
    std::string hostname;
    uint32_t cores{1};
    uint32_t sockets{1};
    uint64_t mem_total_kb{1};
};

/// Node identity for file headers: core and socket counts from the built
/// sources, total memory from the scenario or a one-shot mem read.
NodeShape probe_node_shape(const std::vector<std::unique_ptr<Source>>& sources,
                           const SourceOptions& opts);

} // namespace jobmon
