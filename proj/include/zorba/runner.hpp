#pragma once

#include <optional>
#include <string>
#include <vector>

#include "zorba/config.hpp"

namespace zorba {

/// Process exit codes shared by every subcommand.
enum ExitCode {
    kExitOk = 0,
    kExitError = 1,
    kExitAllocationInfeasible = 2,
    kExitProtocolViolation = 3,
    kExitUnsupported = 4,
};

struct RunnerArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<uint64_t> seed_override;  // replaces seeds.master
    std::optional<int> threads;
    std::string allocation_path;  // train: allocation.json from a previous allocate
    bool write_trace = false;     // train: dump trace.jsonl
    std::string suite = "all";    // verify
    std::string golden_path;      // verify: allocator gap golden file
    bool update_golden = false;   // verify
    std::vector<std::string> metrics_paths;  // report
    std::optional<std::string> target_metric;  // report: rounds-to-target metric
    std::optional<double> target_value;
};

/// epsilon sweep + policy selection; writes pareto.csv and allocation.json.
int cmd_allocate(const RunnerArgs& args);

/// Runs the configured scheme for T rounds; writes metrics.csv and
/// manifest.json (and optionally trace.jsonl).
int cmd_train(const RunnerArgs& args);

/// Runs a verification suite; writes verify_report.json.
int cmd_verify(const RunnerArgs& args);

/// Aggregates one or more metrics.csv files into summary.json plus
/// plot-ready CSVs (rounds-to-target table, lambda-vs-VRAM points).
int cmd_report(const RunnerArgs& args);

}  // namespace zorba
