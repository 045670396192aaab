// jobmon: job-oriented cluster resource monitoring and analysis.
// SPDX-License-Identifier: Apache-2.0
//
// Single binary covering collection, scheduler hooks, synthetic data
// generation, ingestion, analysis, and reporting.

#include <cstdlib>
#include <ctime>
#include <iostream>

#include <CLI11.hpp>

#include "jobmon/jobhooks.hpp"
#include "jobmon/pipeline.hpp"
#include "jobmon/poolgen.hpp"
#include "jobmon/probe.hpp"
#include "jobmon/util.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitData = 3;

struct CommonArgs {
    std::string stats_dir;
    std::string store_dir{"store"};
    std::string fixture_dir;
    uint32_t interval{600};
    bool strict{false};
    bool serial{false};
};

struct HookArgs {
    std::string arch{"synthetic"};
    std::string hostname;
    std::string scenario_file;
    uint32_t scenario_node{0};
    int64_t now{0};
    uint32_t timeout_ms{2000};
};

struct HookSetup {
    std::optional<jobmon::SyntheticScenario> scenario;
    std::vector<std::unique_ptr<jobmon::Source>> sources;
    jobmon::HookContext ctx;
    jobmon::CounterArch arch{jobmon::CounterArch::synthetic};
};

/// Wires state, sources, and node identity for collect/hook commands.
HookSetup make_hook_setup(const CommonArgs& common, const HookArgs& hook) {
    HookSetup setup;
    auto arch = jobmon::arch_from(hook.arch);
    if (!arch) throw jobmon::FormatError("unknown arch: " + hook.arch);
    setup.arch = *arch;

    jobmon::SourceOptions opts;
    opts.fixture_dir = common.fixture_dir;
    if (!hook.scenario_file.empty()) {
        setup.scenario = jobmon::parse_scenario_file(hook.scenario_file);
        opts.scenario = &*setup.scenario;
        opts.scenario_node = hook.scenario_node;
    }

    // The virtual counter register file survives across hook processes; the
    // pmc schema written to the day file must match what is programmed.
    jobmon::HookContext& ctx = setup.ctx;
    ctx.stats_dir = common.stats_dir;
    ctx.interval = common.interval;
    ctx.source_timeout = std::chrono::milliseconds(hook.timeout_ms);
    opts.pmc_events = jobmon::counter_events(*arch).events;

    setup.sources = jobmon::build_sources(opts);
    jobmon::NodeShape shape = jobmon::probe_node_shape(setup.sources, opts);
    ctx.hostname = hook.hostname.empty() ? shape.hostname : hook.hostname;
    ctx.cores = shape.cores;
    ctx.sockets = shape.sockets;
    ctx.mem_total_kb = shape.mem_total_kb;

    jobmon::HookState state = jobmon::HookState::load(ctx.state_path());
    if (!state.pmc_events.empty() && state.pmc_events != opts.pmc_events) {
        opts.pmc_events = state.pmc_events;
        setup.sources = jobmon::build_sources(opts);
    }
    ctx.sources = &setup.sources;
    return setup;
}

int64_t resolve_now(int64_t flag) { return flag != 0 ? flag : static_cast<int64_t>(::time(nullptr)); }

void print_outcome(const jobmon::HookOutcome& outcome) {
    for (const auto& note : outcome.notes) std::cerr << "warning: " << note << "\n";
    if (!outcome.file.empty()) std::cout << outcome.file.string() << "\n";
}

std::optional<std::set<std::string>> parse_queues(const std::string& joined) {
    if (joined.empty()) return std::nullopt;
    std::set<std::string> out;
    for (auto q : jobmon::split(joined, ',')) out.emplace(q);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"job-oriented cluster resource monitor and analyzer"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    CommonArgs common;
    const char* env_stats = std::getenv("JOBMON_STATS_DIR");
    common.stats_dir = env_stats ? env_stats : "stats";
    const char* env_fixtures = std::getenv("JOBMON_FIXTURE_DIR");
    common.fixture_dir = env_fixtures ? env_fixtures : "";

    app.add_option("--stats-dir", common.stats_dir, "raw stats directory");
    app.add_option("--store", common.store_dir, "job store directory");
    app.add_option("--interval", common.interval, "collection interval seconds")
        ->default_val(600);
    app.add_option("--fixture-dir", common.fixture_dir, "fixture source directory");
    app.add_flag("--strict", common.strict, "abort on the first malformed line");
    app.add_flag("--serial", common.serial, "disable internal parallelism");

    HookArgs hook;
    std::string job_id;
    auto add_hook_flags = [&](CLI::App* cmd, bool with_job) {
        if (with_job) cmd->add_option("job_id", job_id, "job id")->required();
        cmd->add_option("--arch", hook.arch, "counter architecture")
            ->check(CLI::IsMember({"opteron", "nehalem_westmere", "synthetic"}));
        cmd->add_option("--hostname", hook.hostname, "override node hostname");
        cmd->add_option("--scenario", hook.scenario_file, "serve sources from a scenario");
        cmd->add_option("--node", hook.scenario_node, "scenario node index");
        cmd->add_option("--now", hook.now, "override wall clock (epoch seconds)");
        cmd->add_option("--timeout-ms", hook.timeout_ms, "per-source collection timeout");
    };

    auto* cmd_collect = app.add_subcommand("collect", "take one collection tick");
    add_hook_flags(cmd_collect, false);
    auto* cmd_begin = app.add_subcommand("begin-job", "scheduler prolog hook");
    add_hook_flags(cmd_begin, true);
    auto* cmd_end = app.add_subcommand("end-job", "scheduler epilog hook");
    add_hook_flags(cmd_end, true);
    auto* cmd_rotate = app.add_subcommand("rotate", "close the day file, open a fresh one");
    add_hook_flags(cmd_rotate, false);

    std::string scenario_file, accounting_file;
    auto* cmd_synth = app.add_subcommand("synth", "generate a scenario's raw files");
    cmd_synth->add_option("--scenario", scenario_file, "scenario config")->required();
    cmd_synth->add_option("--accounting", accounting_file, "accounting csv to write");

    auto* cmd_ingest = app.add_subcommand("ingest", "join raw files with accounting");
    double min_node_hours = 1.0;
    std::string production_queues;
    cmd_ingest->add_option("--accounting", accounting_file, "accounting csv")->required();
    cmd_ingest->add_option("--min-node-hours", min_node_hours,
                           "exclude jobs smaller than this many node-hours");
    cmd_ingest->add_option("--production-queues", production_queues,
                           "comma-joined production queues; empty keeps all");

    auto* cmd_analyze = app.add_subcommand("analyze", "compute job profiles in the store");

    auto* cmd_report = app.add_subcommand("report", "flag jobs and emit scatter data");
    jobmon::ReportOptions report_opts;
    std::string out_dir{"reports"};
    cmd_report->add_option("--out", out_dir, "report output directory");
    cmd_report->add_option("--waste-threshold", report_opts.waste_threshold,
                           "flag waste greater than this");
    cmd_report->add_option("--min-bw", report_opts.min_bw_gbps, "imbalance bandwidth gate, GB/s");
    cmd_report->add_option("--min-cov", report_opts.min_cov, "imbalance CoV gate");
    bool no_wayness_gate = false;
    cmd_report->add_flag("--no-wayness-gate", no_wayness_gate,
                         "drop the full-wayness requirement");
    cmd_report->add_option("--format", report_opts.format, "summary format")
        ->check(CLI::IsMember({"kv", "csv"}));
    cmd_report->add_flag("--svg", report_opts.svg, "render scatter plots as svg");

    auto* cmd_validate = app.add_subcommand("validate", "parse-check raw stats files");

    auto* cmd_sources = app.add_subcommand("sources", "list available metric sources");
    add_hook_flags(cmd_sources, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        jobmon::PipelineOptions popts;
        popts.delta.nominal_tick = common.interval;
        popts.mode = common.strict ? jobmon::ParseMode::strict : jobmon::ParseMode::lenient;
        popts.parallel = !common.serial;
        popts.min_node_hours = min_node_hours;
        popts.production_queues = parse_queues(production_queues);

        if (cmd_collect->parsed()) {
            HookSetup setup = make_hook_setup(common, hook);
            jobmon::CollectorStats stats;
            auto outcome = jobmon::collect_tick(setup.ctx, resolve_now(hook.now), stats);
            print_outcome(outcome);
            for (const auto& [type, n] : stats.source_errors) {
                std::cerr << "warning: source " << type << " failed " << n << " time(s)\n";
            }
        } else if (cmd_begin->parsed()) {
            HookSetup setup = make_hook_setup(common, hook);
            print_outcome(jobmon::begin_job(setup.ctx, job_id, setup.arch, resolve_now(hook.now)));
        } else if (cmd_end->parsed()) {
            HookSetup setup = make_hook_setup(common, hook);
            print_outcome(jobmon::end_job(setup.ctx, job_id, resolve_now(hook.now)));
        } else if (cmd_rotate->parsed()) {
            HookSetup setup = make_hook_setup(common, hook);
            auto outcome = jobmon::rotate(setup.ctx, resolve_now(hook.now));
            print_outcome(outcome);
            if (outcome.warnings > 0 && outcome.file.empty()) return kExitIo;
        } else if (cmd_sources->parsed()) {
            HookSetup setup = make_hook_setup(common, hook);
            for (const auto& source : setup.sources) {
                const auto& d = source->descriptor();
                std::cout << d.type_name << " devices=" << d.device_count << " availability="
                          << jobmon::availability_name(d.availability) << "\n";
            }
        } else if (cmd_synth->parsed()) {
            jobmon::SyntheticScenario sc = jobmon::parse_scenario_file(scenario_file);
            auto report = jobmon::write_scenario_files(sc, common.stats_dir, !common.serial);
            if (!accounting_file.empty()) {
                jobmon::atomic_write_file(accounting_file, jobmon::scenario_accounting_csv(sc));
            }
            std::cout << "nodes " << report.nodes << "\nfiles " << report.files << "\nbytes "
                      << report.bytes << "\n";
        } else if (cmd_ingest->parsed()) {
            jobmon::JobStore store(common.store_dir);
            auto report = jobmon::ingest_directory(common.stats_dir, accounting_file, store, popts);
            for (const auto& e : report.accounting_errors) std::cerr << "accounting " << e << "\n";
            for (const auto& e : report.issues) std::cerr << "skip " << e << "\n";
            std::cout << "files " << report.files_scanned << "\nskipped_lines "
                      << report.skipped_lines << "\njobs_in_accounting "
                      << report.jobs_in_accounting << "\njobs_after_filter "
                      << report.jobs_after_filter << "\njobs_ingested " << report.jobs_ingested
                      << "\njobs_with_missing_nodes " << report.jobs_with_missing_nodes << "\n";
        } else if (cmd_analyze->parsed()) {
            jobmon::JobStore store(common.store_dir);
            auto report = jobmon::analyze_store(store, popts);
            for (const auto& e : report.corrupt) std::cerr << "corrupt " << e << "\n";
            std::cout << "profiles " << report.profiles << "\n";
        } else if (cmd_report->parsed()) {
            report_opts.require_full_wayness = !no_wayness_gate;
            jobmon::JobStore store(common.store_dir);
            auto files = jobmon::write_reports(store, out_dir, report_opts);
            std::cout << "waste_flagged " << files.waste.flagged.size() << "\n";
            std::cout << "imbalance_flagged " << files.imbalance.flagged.size() << "\n";
            std::cout << "pool_idle_fraction "
                      << (files.pool_idle ? jobmon::format_double(*files.pool_idle) : "undef")
                      << "\n";
            for (const auto& f : files.written) std::cout << f.string() << "\n";
        } else if (cmd_validate->parsed()) {
            auto report = jobmon::validate_directory(
                common.stats_dir, popts.mode, popts.parallel);
            for (const auto& e : report.issues) std::cerr << "skip " << e << "\n";
            std::cout << "files " << report.files << "\ngroups " << report.groups << "\nmarks "
                      << report.marks << "\nskipped_lines " << report.skipped_lines << "\n";
        }
    } catch (const jobmon::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const jobmon::SourceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const jobmon::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
