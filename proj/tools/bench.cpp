// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0
//
// Times the serial reference path against the OpenMP one over a synthetic
// pool: file generation, ingestion, analysis. Also cross-checks that both
// paths leave byte-identical stores.

#include <chrono>
#include <filesystem>
#include <iostream>

#include "jobmon/pipeline.hpp"
#include "jobmon/poolgen.hpp"
#include "jobmon/util.hpp"

namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string store_digest(const fs::path& root) {
    // Order-independent cheap content digest.
    uint64_t h = 1469598103934665603ull;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        for (char c : jobmon::read_file(f)) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace

int main(int argc, char** argv) {
    jobmon::PoolSpec spec;
    spec.jobs = argc > 1 ? static_cast<uint32_t>(std::stoul(argv[1])) : 400;
    spec.nodes = argc > 2 ? static_cast<uint32_t>(std::stoul(argv[2])) : 16;
    std::cout << "pool: " << spec.jobs << " jobs on " << spec.nodes << " nodes\n";

    jobmon::PoolPlan plan = jobmon::make_pool(spec);
    const fs::path work = fs::temp_directory_path() / "jobmon-bench";
    fs::remove_all(work);
    fs::create_directories(work);
    const fs::path acct = work / "accounting.csv";
    jobmon::atomic_write_file(acct, jobmon::scenario_accounting_csv(plan.scenario));

    struct Phase {
        const char* name;
        double serial;
        double parallel;
    };
    std::vector<Phase> phases;

    auto run = [&](bool parallel) {
        const fs::path stats = work / (parallel ? "stats-par" : "stats-ser");
        const fs::path store_dir = work / (parallel ? "store-par" : "store-ser");
        jobmon::PipelineOptions opts;
        opts.parallel = parallel;
        opts.delta.nominal_tick = plan.scenario.interval;
        opts.production_queues = std::set<std::string>{"normal"};

        auto t0 = clock_type::now();
        jobmon::write_scenario_files(plan.scenario, stats, parallel);
        double t_synth = seconds_since(t0);

        jobmon::JobStore store(store_dir);
        t0 = clock_type::now();
        jobmon::ingest_directory(stats, acct, store, opts);
        double t_ingest = seconds_since(t0);

        t0 = clock_type::now();
        jobmon::analyze_store(store, opts);
        double t_analyze = seconds_since(t0);
        return std::tuple{t_synth, t_ingest, t_analyze, store_digest(store_dir)};
    };

    auto [s_synth, s_ingest, s_analyze, s_digest] = run(false);
    auto [p_synth, p_ingest, p_analyze, p_digest] = run(true);

    phases.push_back({"synth", s_synth, p_synth});
    phases.push_back({"ingest", s_ingest, p_ingest});
    phases.push_back({"analyze", s_analyze, p_analyze});

    std::printf("%-10s %10s %10s %8s\n", "phase", "serial_s", "openmp_s", "speedup");
    for (const auto& ph : phases) {
        std::printf("%-10s %10.3f %10.3f %7.2fx\n", ph.name, ph.serial, ph.parallel,
                    ph.parallel > 0 ? ph.serial / ph.parallel : 0.0);
    }
    std::cout << "store digests " << (s_digest == p_digest ? "match" : "DIFFER") << " ("
              << s_digest << ")\n";
    return s_digest == p_digest ? 0 : 1;
}
